#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "wrapgp/circular.hpp"
#include "wrapgp/sim.hpp"

using namespace wrapgp;

TEST_CASE("simulate validates its spec") {
    SimSpec spec;
    spec.sigma2 = 0.0;
    CHECK_THROWS_AS(simulate(spec), config_error);
    spec = SimSpec{};
    spec.n_estimation = spec.n_total;
    CHECK_THROWS_AS(simulate(spec), config_error);
    spec = SimSpec{};
    spec.sites = std::vector<Point>{Point{0, 0}};
    CHECK_THROWS_AS(simulate(spec), config_error);
}

TEST_CASE("degenerate field collapses to the wrapped mean") {
    SimSpec spec;
    spec.n_total = 20;
    spec.n_estimation = 15;
    spec.mu = 2.5;
    spec.sigma2 = 1e-10;
    spec.seed = 1;
    const SimResult result = simulate(spec);
    for (const Angle a : result.estimation.angles)
        CHECK_THAT(a.value(), Catch::Matchers::WithinAbs(2.5, 1e-4));
    for (const Angle a : result.validation.angles)
        CHECK_THAT(a.value(), Catch::Matchers::WithinAbs(2.5, 1e-4));
}

TEST_CASE("full-sample concentration tracks the design value") {
    SimSpec spec;  // defaults: n=100, mu=pi, sigma2=0.1, phi=0.021
    double c_sum = 0.0;
    const int reps = 30;
    for (int r = 0; r < reps; ++r) {
        spec.seed = static_cast<std::uint64_t>(100 + r);
        const SimResult result = simulate(spec);
        std::vector<Angle> all = result.estimation.angles;
        all.insert(all.end(), result.validation.angles.begin(),
                   result.validation.angles.end());
        c_sum += moments_estimate(all).concentration;
    }
    CHECK_THAT(c_sum / reps, Catch::Matchers::WithinAbs(0.951, 0.03));
}

TEST_CASE("fixed seed reproduces the simulation byte for byte") {
    SimSpec spec;
    spec.seed = 7;
    const SimResult a = simulate(spec);
    const SimResult b = simulate(spec);
    REQUIRE(a.estimation.size() == b.estimation.size());
    for (std::size_t i = 0; i < a.estimation.size(); ++i) {
        CHECK(a.estimation.angles[i].value() == b.estimation.angles[i].value());
        CHECK(a.estimation.locations[i].x == b.estimation.locations[i].x);
        CHECK(a.estimation.locations[i].y == b.estimation.locations[i].y);
    }
    CHECK(a.truth.estimation_indices == b.truth.estimation_indices);
}

TEST_CASE("wrapping the retained unwrapped field gives the emitted angles") {
    SimSpec spec;
    spec.n_total = 50;
    spec.n_estimation = 35;
    spec.seed = 9;
    const SimResult result = simulate(spec);
    for (std::size_t r = 0; r < result.estimation.size(); ++r) {
        const std::size_t i = result.truth.estimation_indices[r];
        CHECK(result.estimation.angles[r].value() ==
              Angle::wrap_value(result.truth.unwrapped[i]));
    }
    for (std::size_t r = 0; r < result.validation.size(); ++r) {
        const std::size_t i = result.truth.validation_indices[r];
        CHECK(result.validation.angles[r].value() ==
              Angle::wrap_value(result.truth.unwrapped[i]));
    }
}

TEST_CASE("unwrapped field mean is consistent across replicates") {
    SimSpec spec;
    spec.n_total = 100;
    spec.n_estimation = 70;
    spec.mu = pi;
    spec.sigma2 = 0.5;
    double grand = 0.0;
    const int reps = 50;
    for (int r = 0; r < reps; ++r) {
        spec.seed = static_cast<std::uint64_t>(500 + r);
        const SimResult result = simulate(spec);
        double mean = 0.0;
        for (double y : result.truth.unwrapped) mean += y;
        grand += mean / static_cast<double>(result.truth.unwrapped.size());
    }
    // spatial correlation inflates the variance of the field mean; 0.15 is
    // roughly 3 standard errors for this design
    CHECK_THAT(grand / reps, Catch::Matchers::WithinAbs(pi, 0.15));
}

TEST_CASE("explicit site list is honored") {
    SimSpec spec;
    spec.n_total = 4;
    spec.n_estimation = 3;
    spec.sites = std::vector<Point>{Point{0, 0}, Point{10, 0}, Point{0, 10},
                                    Point{10, 10}};
    spec.seed = 3;
    const SimResult result = simulate(spec);
    std::vector<Point> seen = result.estimation.locations;
    seen.insert(seen.end(), result.validation.locations.begin(),
                result.validation.locations.end());
    REQUIRE(seen.size() == 4);
    for (const Point& p : seen) {
        bool found = false;
        for (const Point& q : *spec.sites)
            if (p.x == q.x && p.y == q.y) found = true;
        CHECK(found);
    }
}

TEST_CASE("empirical correlogram matches the exponential kernel") {
    // fixed two-site design, many replicated fields
    SimSpec spec;
    spec.n_total = 2;
    spec.n_estimation = 1;
    spec.mu = 0.0;
    spec.sigma2 = 1.0;
    spec.phi = 0.021;
    const double d = 40.0;
    spec.sites = std::vector<Point>{Point{0, 0}, Point{d, 0}};
    const int reps = 4000;
    double sum_xy = 0.0, sum_x = 0.0, sum_y = 0.0, sum_x2 = 0.0, sum_y2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        spec.seed = static_cast<std::uint64_t>(r);
        const SimResult result = simulate(spec);
        const double a = result.truth.unwrapped[0];
        const double b = result.truth.unwrapped[1];
        sum_x += a;
        sum_y += b;
        sum_xy += a * b;
        sum_x2 += a * a;
        sum_y2 += b * b;
    }
    const double n = reps;
    const double cov = sum_xy / n - (sum_x / n) * (sum_y / n);
    const double vx = sum_x2 / n - (sum_x / n) * (sum_x / n);
    const double vy = sum_y2 / n - (sum_y / n) * (sum_y / n);
    const double corr = cov / std::sqrt(vx * vy);
    CHECK_THAT(corr, Catch::Matchers::WithinAbs(std::exp(-0.021 * d), 0.05));
    CHECK_THAT(vx, Catch::Matchers::WithinAbs(1.0, 0.1));
}
