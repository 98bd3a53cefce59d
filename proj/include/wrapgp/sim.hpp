#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "wrapgp/circular.hpp"
#include "wrapgp/errors.hpp"
#include "wrapgp/spatial_cov.hpp"

namespace wrapgp {

struct BoundingBox {
    double x_min = 0.0;
    double y_min = 0.0;
    // Square region whose diagonal matches the 290.13 km maximum distance
    // of the Adriatic study extent.
    double x_max = 205.15;
    double y_max = 205.15;
};

struct SimSpec {
    std::size_t n_total = 100;
    double mu = pi;
    double sigma2 = 0.1;
    double phi = 0.021;
    std::size_t n_estimation = 70;
    BoundingBox region;
    std::optional<std::vector<Point>> sites;  // explicit design overrides region
    std::uint64_t seed = 0;

    void validate() const {
        if (!(sigma2 > 0.0)) throw config_error("sim: sigma2 must be > 0");
        if (!(phi > 0.0)) throw config_error("sim: phi must be > 0");
        if (n_total < 2) throw config_error("sim: n_total must be >= 2");
        if (n_estimation >= n_total)
            throw config_error("sim: n_estimation must be < n_total");
        if (sites && sites->size() != n_total)
            throw config_error("sim: explicit site list length != n_total");
    }
};

struct SimTruth {
    double mu = 0.0;
    double sigma2 = 0.0;
    double phi = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> estimation_indices;
    std::vector<std::size_t> validation_indices;
    // Unwrapped field, test/debug channel only; never part of standard
    // outputs.
    std::vector<double> unwrapped;
};

struct SimResult {
    CircularSample estimation;
    CircularSample validation;
    SimTruth truth;
    bool resampled_sites = false;
};

/// Draw a linear GP realization over random (or given) sites, wrap it,
/// and split into estimation and validation sets.
inline SimResult simulate(const SimSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> ux(spec.region.x_min,
                                              spec.region.x_max);
    std::uniform_real_distribution<double> uy(spec.region.y_min,
                                              spec.region.y_max);
    std::normal_distribution<double> std_normal(0.0, 1.0);

    SimResult result;
    std::vector<Point> sites;
    Eigen::MatrixXd chol;
    const int max_attempts = 20;
    for (int attempt = 0;; ++attempt) {
        if (spec.sites) {
            sites = *spec.sites;
        } else {
            sites.clear();
            sites.reserve(spec.n_total);
            for (std::size_t i = 0; i < spec.n_total; ++i)
                sites.push_back(Point{ux(rng), uy(rng)});
        }
        try {
            const CovMatrix cov(
                sites, Kernel{KernelKind::exponential, spec.sigma2, spec.phi});
            chol = cov.llt().matrixL();
            break;
        } catch (const singular_covariance_error&) {
            if (spec.sites || attempt + 1 >= max_attempts) throw;
            result.resampled_sites = true;  // coincident random sites
        }
    }

    const auto n = static_cast<Eigen::Index>(spec.n_total);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = std_normal(rng);
    const Eigen::VectorXd y =
        Eigen::VectorXd::Constant(n, spec.mu) + chol * z;

    std::vector<std::size_t> order(spec.n_total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    result.truth.mu = spec.mu;
    result.truth.sigma2 = spec.sigma2;
    result.truth.phi = spec.phi;
    result.truth.seed = spec.seed;
    result.truth.unwrapped.assign(y.data(), y.data() + n);

    for (std::size_t r = 0; r < spec.n_total; ++r) {
        const std::size_t i = order[r];
        const Angle a = wrap(y(static_cast<Eigen::Index>(i)));
        if (r < spec.n_estimation) {
            result.estimation.angles.push_back(a);
            result.estimation.locations.push_back(sites[i]);
            result.truth.estimation_indices.push_back(i);
        } else {
            result.validation.angles.push_back(a);
            result.validation.locations.push_back(sites[i]);
            result.truth.validation_indices.push_back(i);
        }
    }
    return result;
}

}  // namespace wrapgp
