#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "wrapgp/circular.hpp"
#include "wrapgp/wrapped_normal.hpp"

using namespace wrapgp;

TEST_CASE("wrap maps onto [0, 2pi)") {
    CHECK(wrap(0.0).value() == 0.0);
    CHECK_THAT(wrap(-pi / 2).value(),
               Catch::Matchers::WithinAbs(3 * pi / 2, 1e-14));
    CHECK_THAT(wrap(7 * pi).value(), Catch::Matchers::WithinAbs(pi, 1e-12));
    CHECK_THROWS_AS(wrap(std::numeric_limits<double>::quiet_NaN()),
                    std::domain_error);
    CHECK_THROWS_AS(wrap(std::numeric_limits<double>::infinity()),
                    std::domain_error);
}

TEST_CASE("wrap is idempotent and 2pi-periodic") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    std::uniform_int_distribution<int> ki(-20, 20);
    for (int i = 0; i < 10000; ++i) {
        const double y = u(rng);
        const double w = wrap(y).value();
        CHECK(w >= 0.0);
        CHECK(w < two_pi);
        CHECK(wrap(w).value() == w);
        const int k = ki(rng);
        CHECK_THAT(wrap(w + two_pi * k).value(),
                   Catch::Matchers::WithinAbs(w, 1e-9 * (1 + std::abs(k))));
    }
}

TEST_CASE("arctan_star quadrant cases") {
    CHECK(arctan_star(0.0, 1.0).value() == 0.0);
    CHECK_THAT(arctan_star(1.0, 0.0).value(),
               Catch::Matchers::WithinAbs(pi / 2, 1e-15));
    CHECK_THAT(arctan_star(0.0, -1.0).value(),
               Catch::Matchers::WithinAbs(pi, 1e-15));
    // C >= 0, S < 0 lands in (pi, 2pi)
    CHECK_THAT(arctan_star(-1.0, 0.0).value(),
               Catch::Matchers::WithinAbs(3 * pi / 2, 1e-15));
    CHECK_THROWS_AS(arctan_star(0.0, 0.0), undefined_direction_error);
}

TEST_CASE("arctan_star inverts (sin, cos)") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, two_pi);
    for (int i = 0; i < 10000; ++i) {
        const double theta = u(rng);
        const double got =
            arctan_star(std::sin(theta), std::cos(theta)).value();
        const double diff = Angle::wrap_value(got - theta + pi) - pi;
        CHECK_THAT(diff, Catch::Matchers::WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("circular_distance basics") {
    CHECK(circular_distance(Angle(1.3), Angle(1.3)) == 0.0);
    CHECK_THAT(circular_distance(Angle(0.0), Angle(pi)),
               Catch::Matchers::WithinAbs(2.0, 1e-15));
    CHECK_THAT(circular_distance(Angle(0.0), Angle(pi / 2)),
               Catch::Matchers::WithinAbs(1.0, 1e-15));
}

TEST_CASE("circular_distance is symmetric and rotation invariant") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, two_pi);
    for (int i = 0; i < 1000; ++i) {
        const Angle a(u(rng)), b(u(rng));
        const double r = u(rng);
        CHECK(circular_distance(a, b) == circular_distance(b, a));
        CHECK_THAT(circular_distance(Angle(a.value() + r),
                                     Angle(b.value() + r)),
                   Catch::Matchers::WithinAbs(circular_distance(a, b), 1e-12));
    }
}

TEST_CASE("moments_estimate degenerate samples") {
    const std::vector<Angle> same{Angle(0.0), Angle(0.0), Angle(0.0)};
    const CircularSummary s = moments_estimate(same);
    CHECK(s.mean_direction.value() == 0.0);
    CHECK(s.concentration == 1.0);
    CHECK(s.variance_hat == 0.0);

    const std::vector<Angle> balanced{Angle(0.0), Angle(pi)};
    CHECK_THROWS_AS(moments_estimate(std::span<const Angle>(balanced)),
                    undefined_direction_error);
}

TEST_CASE("moments_estimate recovers WN parameters from a large sample") {
    const WnParams params{pi / 4, 0.5};
    const auto draws = wn_sample(params, 100000, 42);
    const CircularSummary s = moments_estimate(draws);
    CHECK_THAT(s.mean_direction.value(),
               Catch::Matchers::WithinAbs(pi / 4, 0.02));
    CHECK_THAT(s.concentration,
               Catch::Matchers::WithinAbs(std::exp(-0.25), 0.01));
}

TEST_CASE("moments_estimate on the exact density grid recovers c") {
    // Riemann sum of cos/sin against the wide-window WN density.
    for (const double sigma2 : {0.1, 0.5, 1.0, 2.0}) {
        const WnParams params{1.1, sigma2};
        const TruncationWindow wide{200};
        const int grid = 200000;
        double c_bar = 0.0, s_bar = 0.0;
        const double dx = two_pi / grid;
        for (int i = 0; i < grid; ++i) {
            const double x = (i + 0.5) * dx;
            const double f = wn_density(Angle(x), params, wide);
            c_bar += std::cos(x) * f * dx;
            s_bar += std::sin(x) * f * dx;
        }
        const double c_hat = std::hypot(c_bar, s_bar);
        CHECK_THAT(c_hat,
                   Catch::Matchers::WithinAbs(std::exp(-sigma2 / 2), 1e-6));
    }
}

TEST_CASE("concentration") {
    CHECK(wrapgp::concentration(0.0) == 1.0);
    CHECK_THAT(wrapgp::concentration(0.1),
               Catch::Matchers::WithinAbs(0.951, 5e-4));
    CHECK_THAT(wrapgp::concentration(0.5),
               Catch::Matchers::WithinAbs(0.779, 5e-4));
    CHECK_THAT(wrapgp::concentration(1.0),
               Catch::Matchers::WithinAbs(0.606, 1e-3));
    CHECK_THROWS_AS(wrapgp::concentration(-0.1), std::domain_error);
}

TEST_CASE("wrapped_correlation") {
    CHECK_THAT(wrapped_correlation(1.0, 0.3),
               Catch::Matchers::WithinAbs(1.0, 1e-15));
    CHECK_THAT(wrapped_correlation(1.0, 7.0),
               Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK(wrapped_correlation(0.0, 1.0) == 0.0);
    CHECK_THAT(wrapped_correlation(0.5, 1.0),
               Catch::Matchers::WithinAbs(std::sinh(0.5) / std::sinh(1.0),
                                          1e-15));
    CHECK(wrapped_correlation(0.5, 1.0) <= 0.5);
    CHECK_THROWS_AS(wrapped_correlation(0.5, 0.0), std::domain_error);

    // odd in rho, and never exceeds the linear correlation on [0, 1]
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ur(0.0, 1.0);
    std::uniform_real_distribution<double> us(0.01, 10.0);
    for (int i = 0; i < 2000; ++i) {
        const double rho = ur(rng), s2 = us(rng);
        CHECK_THAT(wrapped_correlation(-rho, s2),
                   Catch::Matchers::WithinAbs(-wrapped_correlation(rho, s2),
                                              1e-12));
        CHECK(wrapped_correlation(rho, s2) <= rho + 1e-12);
    }

    // large-variance branch stays finite and within bounds
    CHECK(wrapped_correlation(0.5, 500.0) >= 0.0);
    CHECK(wrapped_correlation(0.5, 500.0) <= 0.5);
}

TEST_CASE("rayleigh_test extremes") {
    std::vector<Angle> same(10, Angle(0.7));
    const RayleighResult coherent = rayleigh_test(same);
    CHECK_THAT(coherent.statistic, Catch::Matchers::WithinAbs(20.0, 1e-12));
    CHECK_THAT(coherent.p_value, Catch::Matchers::WithinAbs(4.54e-5, 1e-6));

    const std::vector<Angle> antipodal{Angle(0.3), Angle(0.3 + pi)};
    const RayleighResult flat = rayleigh_test(antipodal);
    CHECK_THAT(flat.statistic, Catch::Matchers::WithinAbs(0.0, 1e-12));
    CHECK_THAT(flat.p_value, Catch::Matchers::WithinAbs(1.0, 1e-12));

    const std::vector<Angle> one{Angle(0.3)};
    CHECK_THROWS_AS(rayleigh_test(one), insufficient_data_error);
}

TEST_CASE("rayleigh_test calibration under uniformity") {
    // ~5% rejections at the 5% level across replicates of uniform data
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, two_pi);
    int rejections = 0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
        std::vector<Angle> angles;
        for (int i = 0; i < 200; ++i) angles.push_back(Angle(u(rng)));
        if (rayleigh_test(angles).p_value < 0.05) ++rejections;
    }
    // binomial(200, 0.05): mean 10, sd ~3.1
    CHECK(rejections >= 1);
    CHECK(rejections <= 25);
}

TEST_CASE("CircularSample validation") {
    CircularSample s;
    CHECK_THROWS_AS(s.validate(), insufficient_data_error);
    s.angles = {Angle(0.1), Angle(0.2)};
    s.locations = {Point{0, 0}};
    CHECK_THROWS_AS(s.validate(), insufficient_data_error);
    s.locations.push_back(Point{1, 1});
    CHECK_NOTHROW(s.validate());
    CHECK(s.min_separation() > 1.0);
    s.locations[1] = Point{0, 0};
    CHECK(s.min_separation() == 0.0);
}
