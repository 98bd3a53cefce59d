#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <thread>
#include <vector>

#include "wrapgp/circular.hpp"
#include "wrapgp/errors.hpp"
#include "wrapgp/inference.hpp"
#include "wrapgp/spatial_cov.hpp"
#include "wrapgp/wrapped_normal.hpp"

namespace wrapgp {

/// Kriged posterior summary at one target location: the posterior mean
/// direction arctan*(g_s, g_c) and the posterior concentration
/// sqrt(g_c^2 + g_s^2).
struct KrigeResult {
    Point target;
    Angle mean_direction;
    double concentration = 0.0;
    double g_c = 0.0;
    double g_s = 0.0;
};

/// Monte Carlo kriging over retained posterior draws: for each draw the
/// predictive conditional of Y(s0) given Y = X + 2 pi K contributes a
/// unit vector at the conditional mean, damped by exp(-variance/2).
inline std::vector<KrigeResult> krige(const PosteriorDraws& draws,
                                      const CircularSample& sample,
                                      const std::vector<Point>& targets,
                                      unsigned n_threads = 1) {
    if (draws.draws.empty())
        throw insufficient_data_error("krige: no posterior draws");
    sample.validate();
    const auto n = static_cast<Eigen::Index>(sample.size());
    const std::size_t t_count = targets.size();
    const std::size_t b_count = draws.draws.size();

    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i)
        x(i) = sample.angles[static_cast<std::size_t>(i)].value();

    const auto accumulate_range = [&](std::size_t b_lo, std::size_t b_hi,
                                      std::vector<double>& gc,
                                      std::vector<double>& gs) {
        for (std::size_t b = b_lo; b < b_hi; ++b) {
            const ChainState& state = draws.draws[b];
            const CovMatrix cov(
                sample.locations,
                Kernel{KernelKind::exponential, state.sigma2,
                       draws.spatial ? state.phi : 1.0});
            Eigen::VectorXd y = x;
            for (Eigen::Index i = 0; i < n; ++i)
                y(i) += two_pi * state.k[static_cast<std::size_t>(i)];
            for (std::size_t t = 0; t < t_count; ++t) {
                const ConditionalGaussian pred =
                    predictive_conditional(targets[t], y, state.mu, cov);
                const double weight = std::exp(-pred.variance / 2.0);
                gc[t] += weight * std::cos(pred.mean);
                gs[t] += weight * std::sin(pred.mean);
            }
        }
    };

    std::vector<double> gc(t_count, 0.0), gs(t_count, 0.0);
    const unsigned workers =
        std::max(1u, std::min<unsigned>(n_threads,
                                        static_cast<unsigned>(b_count)));
    if (workers == 1) {
        accumulate_range(0, b_count, gc, gs);
    } else {
        // Partition draws across threads; the per-target (g_c, g_s) sums
        // merge in fixed thread order.
        std::vector<std::vector<double>> gcs(workers,
                                             std::vector<double>(t_count, 0.0));
        std::vector<std::vector<double>> gss(workers,
                                             std::vector<double>(t_count, 0.0));
        std::vector<std::thread> pool;
        pool.reserve(workers);
        const std::size_t chunk = (b_count + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t lo = w * chunk;
            const std::size_t hi = std::min(b_count, lo + chunk);
            pool.emplace_back([&, lo, hi, w] {
                accumulate_range(lo, hi, gcs[w], gss[w]);
            });
        }
        for (std::thread& th : pool) th.join();
        for (unsigned w = 0; w < workers; ++w)
            for (std::size_t t = 0; t < t_count; ++t) {
                gc[t] += gcs[w][t];
                gs[t] += gss[w][t];
            }
    }

    std::vector<KrigeResult> out;
    out.reserve(t_count);
    for (std::size_t t = 0; t < t_count; ++t) {
        const double c = gc[t] / static_cast<double>(b_count);
        const double s = gs[t] / static_cast<double>(b_count);
        out.push_back(KrigeResult{targets[t], arctan_star(s, c),
                                  std::sqrt(c * c + s * s), c, s});
    }
    return out;
}

/// Bivariate wrapped-normal regression parameters: common variance
/// sigma2 and linear correlation rho between the unwrapped pair.
struct RegressionParams {
    double mu1 = 0.0;
    double mu2 = 0.0;
    double sigma2 = 1.0;
    double rho = 0.0;

    void validate() const {
        if (!(sigma2 > 0.0))
            throw config_error("regression: sigma2 must be > 0");
        if (!(std::abs(rho) < 1.0))
            throw std::domain_error(
                "regression: |rho| must be < 1 (degenerate conditional)");
    }
};

struct RegressionValue {
    Angle mean_direction;
    double concentration = 0.0;
    // p(k)-weighted cosine/sine sums of the conditional mean directions;
    // mean_direction = arctan*(g_s, g_c), and the complex regression value
    // E(e^{iX2}|X1) equals concentration * (g_c + i g_s).
    double g_c = 0.0;
    double g_s = 0.0;
};

/// Conditional mean direction and concentration of X2 given X1 under the
/// bivariate wrapped normal, marginalizing the winding number of X1 over
/// its conditional distribution. The concentration exp(-sigma2(1-rho^2)/2)
/// does not depend on x1.
inline RegressionValue regression_curve(
    const RegressionParams& params, Angle x1,
    std::optional<TruncationWindow> window = std::nullopt) {
    params.validate();
    const double sigma = std::sqrt(params.sigma2);
    const TruncationWindow w = window ? *window : truncation_window(sigma);

    // p(k; x1, theta) from the marginal WN of X1, with the window anchored
    // at the dominant winding as in k_conditional.
    const auto center =
        static_cast<int>(std::lround((params.mu1 - x1.value()) / two_pi));
    std::vector<double> weights(static_cast<std::size_t>(w.size()));
    double max_logw = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < w.size(); ++j) {
        const int k = center + w.lower() + j;
        const double z = (x1.value() + two_pi * k - params.mu1) / sigma;
        weights[static_cast<std::size_t>(j)] = -0.5 * z * z;
        max_logw = std::max(max_logw, weights[static_cast<std::size_t>(j)]);
    }
    double total = 0.0;
    for (double& v : weights) {
        v = std::exp(v - max_logw);
        total += v;
    }

    double c_sum = 0.0, s_sum = 0.0;
    for (int j = 0; j < w.size(); ++j) {
        const int k = center + w.lower() + j;
        const double p = weights[static_cast<std::size_t>(j)] / total;
        const double y1 = x1.value() + two_pi * k;
        const double cond_mean = params.mu2 + params.rho * (y1 - params.mu1);
        c_sum += p * std::cos(cond_mean);
        s_sum += p * std::sin(cond_mean);
    }
    const double conc =
        std::exp(-params.sigma2 * (1.0 - params.rho * params.rho) / 2.0);
    return RegressionValue{arctan_star(s_sum, c_sum), conc, c_sum, s_sum};
}

struct LooOptions {
    bool fast = false;        // reuse full-data draws, drop site j from the
                              // conditioning set only
    std::size_t fast_threshold = 40;  // default mode switches to fast at n >=
};

struct LooReport {
    std::vector<double> per_site_errors;
    double average_prediction_error = 0.0;
};

/// Leave-one-out validation of the spatial model: kriged direction at each
/// held-out site scored by the circular distance 1 - cos.
inline LooReport loo_validate(const CircularSample& sample,
                              KernelKind kernel_kind, const Priors& priors,
                              const McmcConfig& config,
                              LooOptions options = LooOptions{}) {
    sample.validate();
    const std::size_t n = sample.size();
    if (n < 4)
        throw insufficient_data_error("loo_validate: need n >= 4");
    const bool fast = options.fast || n >= options.fast_threshold;

    LooReport report;
    report.per_site_errors.resize(n, 0.0);

    if (!fast) {
        for (std::size_t j = 0; j < n; ++j) {
            CircularSample held = sample;
            held.angles.erase(held.angles.begin() +
                              static_cast<std::ptrdiff_t>(j));
            held.locations.erase(held.locations.begin() +
                                 static_cast<std::ptrdiff_t>(j));
            McmcConfig cfg = config;
            cfg.seed = config.seed + j + 1;
            PosteriorDraws draws;
            try {
                draws = fit_spatial(held, kernel_kind, priors, cfg);
            } catch (const std::exception& e) {
                throw singular_covariance_error(
                    "loo_validate: refit failed holding out site " +
                    std::to_string(j) + ": " + e.what());
            }
            const auto results =
                krige(draws, held, {sample.locations[j]});
            report.per_site_errors[j] =
                circular_distance(results.front().mean_direction,
                                  sample.angles[j]);
        }
    } else {
        const PosteriorDraws draws =
            fit_spatial(sample, kernel_kind, priors, config);
        const auto ni = static_cast<Eigen::Index>(n);
        Eigen::VectorXd x(ni);
        for (Eigen::Index i = 0; i < ni; ++i)
            x(i) = sample.angles[static_cast<std::size_t>(i)].value();
        std::vector<double> gc(n, 0.0), gs(n, 0.0);
        for (const ChainState& state : draws.draws) {
            const CovMatrix cov(sample.locations,
                                Kernel{KernelKind::exponential, state.sigma2,
                                       state.phi});
            Eigen::VectorXd y = x;
            for (Eigen::Index i = 0; i < ni; ++i)
                y(i) += two_pi * state.k[static_cast<std::size_t>(i)];
            // One precision matrix per draw; each held-out site is then the
            // single-site-given-rest conditional, O(n) apiece.
            const Eigen::MatrixXd q =
                cov.llt().solve(Eigen::MatrixXd::Identity(ni, ni));
            const Eigen::VectorXd centered = y.array() - state.mu;
            for (Eigen::Index j = 0; j < ni; ++j) {
                const double qjj = q(j, j);
                const double cross =
                    q.col(j).dot(centered) - qjj * centered(j);
                const double mean = state.mu - cross / qjj;
                const double variance = 1.0 / qjj;
                const double weight = std::exp(-variance / 2.0);
                const auto idx = static_cast<std::size_t>(j);
                gc[idx] += weight * std::cos(mean);
                gs[idx] += weight * std::sin(mean);
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            const Angle dir = arctan_star(gs[j], gc[j]);
            report.per_site_errors[j] = circular_distance(dir, sample.angles[j]);
        }
    }

    double sum = 0.0;
    for (double e : report.per_site_errors) sum += e;
    report.average_prediction_error = sum / static_cast<double>(n);
    return report;
}

/// Average circular distance between a validation set and the nonspatial
/// posterior mean direction.
inline double nonspatial_predict_error(const CircularSample& validation,
                                       const PosteriorDraws& draws_independent) {
    if (draws_independent.draws.empty())
        throw insufficient_data_error("nonspatial_predict_error: no draws");
    validation.validate();
    std::vector<Angle> mu_tilde;
    mu_tilde.reserve(draws_independent.draws.size());
    for (const ChainState& s : draws_independent.draws)
        mu_tilde.push_back(wrap(s.mu));
    const Angle estimate = moments_estimate(mu_tilde).mean_direction;
    double sum = 0.0;
    for (Angle a : validation.angles)
        sum += circular_distance(estimate, a);
    return sum / static_cast<double>(validation.size());
}

}  // namespace wrapgp
