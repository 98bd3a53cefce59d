#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "wrapgp/circular.hpp"
#include "wrapgp/errors.hpp"
#include "wrapgp/spatial_cov.hpp"
#include "wrapgp/wrapped_normal.hpp"

namespace wrapgp {

struct MuPrior {
    double mean = 0.0;
    double variance = 100.0;
};

// Inverse gamma on the variance, density proportional to
// x^{-shape-1} exp(-scale/x); mode = scale/(shape+1).
struct Sigma2Prior {
    double shape = 2.0;
    double scale = 1.0;
    double right_trunc = std::numeric_limits<double>::infinity();
};

struct PhiPrior {
    double lo = 0.001;
    double hi = 1.0;
};

struct Priors {
    MuPrior mu;
    Sigma2Prior sigma2;
    PhiPrior phi;

    void validate() const {
        if (!(mu.variance > 0.0))
            throw config_error("priors: mu variance must be > 0");
        if (!(sigma2.shape > 0.0) || !(sigma2.scale > 0.0))
            throw config_error("priors: sigma2 shape/scale must be > 0");
        if (!(sigma2.right_trunc > 0.0))
            throw config_error("priors: sigma2 right truncation must be > 0");
        if (!(phi.lo >= 0.0) || !(phi.hi > phi.lo))
            throw config_error("priors: phi support must satisfy 0 <= lo < hi");
    }
};

struct SpatialInit {
    double mu;
    double sigma2;
    double phi;
};

struct McmcConfig {
    std::size_t iterations = 30000;
    std::size_t burn_in = 6000;
    std::size_t thin = 10;
    // Proposal covariance for the joint (log sigma2, log phi) random walk.
    Eigen::Matrix2d proposal_cov =
        (Eigen::Matrix2d() << 0.01, 0.0, 0.0, 0.01).finished();
    bool adapt_during_burnin = true;
    std::uint64_t seed = 0;
    std::optional<SpatialInit> init;  // overrides the moments-based start

    void validate() const {
        if (iterations == 0 || burn_in >= iterations)
            throw config_error("mcmc: burn_in must be < iterations");
        if (thin == 0) throw config_error("mcmc: thin must be >= 1");
        Eigen::LLT<Eigen::Matrix2d> llt(proposal_cov);
        if (llt.info() != Eigen::Success)
            throw config_error("mcmc: proposal_cov must be SPD");
    }
};

struct ChainState {
    std::size_t iteration = 0;
    double mu = 0.0;
    double sigma2 = 1.0;
    double phi = 0.0;  // spatial model only
    std::vector<int> k;
    bool accepted = false;  // block (log sigma2, log phi) step
};

struct PosteriorDraws {
    std::vector<ChainState> draws;
    double acceptance_rate = 1.0;
    bool spatial = false;
    std::vector<std::string> warnings;
};

namespace detail {

// Right-truncated inverse gamma via the gamma CDF of the precision:
// 1/sigma2 ~ Gamma(shape, rate scale) restricted to [1/right_trunc, inf).
template <typename Rng>
double sample_inverse_gamma(Rng& rng, double shape, double scale,
                            double right_trunc) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (!std::isfinite(right_trunc)) {
        std::gamma_distribution<double> gamma(shape, 1.0 / scale);
        double lambda = 0.0;
        while (lambda <= 0.0) lambda = gamma(rng);
        return 1.0 / lambda;
    }
    const double lo = 1.0 / right_trunc;
    const double f_lo = boost::math::gamma_p(shape, scale * lo);
    double u = f_lo + (1.0 - f_lo) * unif(rng);
    u = std::min(u, 1.0 - 1e-16);
    const double lambda = boost::math::gamma_p_inv(shape, u) / scale;
    return 1.0 / std::max(lambda, lo);
}

inline double log_inverse_gamma_density(double x, const Sigma2Prior& prior) {
    if (x <= 0.0 || x > prior.right_trunc)
        return -std::numeric_limits<double>::infinity();
    return -(prior.shape + 1.0) * std::log(x) - prior.scale / x;
}

}  // namespace detail

/// Gibbs sampler for the independence wrapped-normal model: conjugate
/// normal update for mu, right-truncated inverse-gamma update for sigma2,
/// and per-observation winding numbers from their adaptive-window
/// conditionals.
inline PosteriorDraws fit_independent(std::span<const Angle> angles,
                                      const Priors& priors,
                                      const McmcConfig& config) {
    priors.validate();
    config.validate();
    const std::size_t n = angles.size();
    if (n < 2)
        throw insufficient_data_error("fit_independent: need n >= 2");

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> std_normal(0.0, 1.0);

    const CircularSummary start = moments_estimate(angles);
    double mu = start.mean_direction.value();
    double sigma2 = std::max(start.variance_hat, 1e-4);
    if (config.init) {
        mu = config.init->mu;
        sigma2 = config.init->sigma2;
    }
    std::vector<int> k(n, 0);

    PosteriorDraws out;
    out.spatial = false;
    out.draws.reserve((config.iterations - config.burn_in) / config.thin);

    const double mu0 = priors.mu.mean;
    const double s02 = priors.mu.variance;

    for (std::size_t it = 1; it <= config.iterations; ++it) {
        // mu | K, sigma2
        double sum_y = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            sum_y += angles[i].value() + two_pi * k[i];
        const double denom = static_cast<double>(n) * s02 + sigma2;
        const double post_mean = (s02 * sum_y + sigma2 * mu0) / denom;
        const double post_var = sigma2 * s02 / denom;
        mu = post_mean + std::sqrt(post_var) * std_normal(rng);

        // sigma2 | K, mu
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = angles[i].value() + two_pi * k[i] - mu;
            ss += r * r;
        }
        sigma2 = detail::sample_inverse_gamma(
            rng, priors.sigma2.shape + static_cast<double>(n) / 2.0,
            priors.sigma2.scale + 0.5 * ss, priors.sigma2.right_trunc);

        // K sweep with the window recomputed from the current sigma
        const double sigma = std::sqrt(sigma2);
        for (std::size_t i = 0; i < n; ++i)
            k[i] = sample_k(k_conditional(angles[i], mu, sigma), rng);

        if (it > config.burn_in && (it - config.burn_in) % config.thin == 0)
            out.draws.push_back(ChainState{it, mu, sigma2, 0.0, k, true});
    }
    return out;
}

/// MCMC for the wrapped spatial GP: conjugate normal update for mu, joint
/// random-walk Metropolis-Hastings on (log sigma2, log phi), and a
/// fixed-order sweep of per-site winding numbers using the conditional
/// mean and variance of each site given the rest.
inline PosteriorDraws fit_spatial(const CircularSample& sample,
                                  KernelKind kernel_kind, const Priors& priors,
                                  const McmcConfig& config) {
    priors.validate();
    config.validate();
    sample.validate();
    const std::size_t n = sample.size();
    if (n < 3)
        throw insufficient_data_error("fit_spatial: need n >= 3");
    if (sample.min_separation() < duplicate_site_tol_km)
        throw singular_covariance_error(
            "fit_spatial: duplicate sites make the no-nugget covariance "
            "singular");

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> std_normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    const CircularSummary start = moments_estimate(sample);
    double mu = start.mean_direction.value();
    double sigma2 = std::max(start.variance_hat, 1e-4);
    double phi = 0.5 * (priors.phi.lo + priors.phi.hi);
    if (config.init) {
        mu = config.init->mu;
        sigma2 = config.init->sigma2;
        phi = config.init->phi;
    }
    std::vector<int> k(n, 0);

    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::VectorXd x(ni);
    for (Eigen::Index i = 0; i < ni; ++i)
        x(i) = sample.angles[static_cast<std::size_t>(i)].value();
    Eigen::VectorXd y = x;  // x + 2 pi k, with k = 0 initially

    Eigen::MatrixXd dist(ni, ni);
    for (Eigen::Index i = 0; i < ni; ++i)
        for (Eigen::Index j = 0; j < ni; ++j)
            dist(i, j) = distance(sample.locations[static_cast<std::size_t>(i)],
                                  sample.locations[static_cast<std::size_t>(j)]);

    const auto build_corr = [&](double decay) {
        return Eigen::MatrixXd((-decay * dist.array()).exp());
    };

    // Correlation-scale state; Sigma = sigma2 * R.
    Eigen::MatrixXd corr = build_corr(phi);
    Eigen::LLT<Eigen::MatrixXd> llt(corr);
    if (llt.info() != Eigen::Success)
        throw singular_covariance_error(
            "fit_spatial: initial correlation matrix is not SPD");
    double log_det_corr =
        2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();

    const auto log_likelihood = [&](const Eigen::VectorXd& yy, double m,
                                    double s2, double ld,
                                    const Eigen::LLT<Eigen::MatrixXd>& f) {
        const Eigen::VectorXd centered = yy.array() - m;
        const double quad = centered.dot(f.solve(centered)) / s2;
        return -0.5 * (static_cast<double>(n) * std::log(two_pi * s2) + ld +
                       quad);
    };

    Eigen::LLT<Eigen::Matrix2d> prop_llt(config.proposal_cov);
    const Eigen::Matrix2d prop_chol = prop_llt.matrixL();
    double log_scale = 0.0;

    PosteriorDraws out;
    out.spatial = true;
    out.draws.reserve((config.iterations - config.burn_in) / config.thin);
    std::size_t accepted_post_burnin = 0;
    std::size_t proposals_post_burnin = 0;
    kernel_kind = KernelKind::exponential;  // only kernel fitted

    for (std::size_t it = 1; it <= config.iterations; ++it) {
        // (a) mu | Y, sigma2, phi (conjugate, precision weighted)
        const Eigen::VectorXd rinv_y = llt.solve(y);
        const Eigen::VectorXd rinv_1 = llt.solve(Eigen::VectorXd::Ones(ni));
        const double prec = rinv_1.sum() / sigma2 + 1.0 / priors.mu.variance;
        const double mean =
            (rinv_y.sum() / sigma2 + priors.mu.mean / priors.mu.variance) /
            prec;
        mu = mean + std_normal(rng) / std::sqrt(prec);

        // (b) joint random walk on (log sigma2, log phi)
        Eigen::Vector2d z(std_normal(rng), std_normal(rng));
        const Eigen::Vector2d step = std::exp(log_scale) * (prop_chol * z);
        const double log_s2_new = std::log(sigma2) + step(0);
        const double log_phi_new = std::log(phi) + step(1);
        const double s2_new = std::exp(log_s2_new);
        const double phi_new = std::exp(log_phi_new);

        bool accept = false;
        double accept_prob = 0.0;
        if (phi_new >= priors.phi.lo && phi_new < priors.phi.hi &&
            s2_new <= priors.sigma2.right_trunc) {
            Eigen::MatrixXd corr_new = build_corr(phi_new);
            Eigen::LLT<Eigen::MatrixXd> llt_new(corr_new);
            if (llt_new.info() == Eigen::Success) {
                const double ld_new = 2.0 * llt_new.matrixL()
                                                .toDenseMatrix()
                                                .diagonal()
                                                .array()
                                                .log()
                                                .sum();
                const double log_post_new =
                    log_likelihood(y, mu, s2_new, ld_new, llt_new) +
                    detail::log_inverse_gamma_density(s2_new, priors.sigma2) +
                    log_s2_new + log_phi_new;  // Jacobian of the log map
                const double log_post_old =
                    log_likelihood(y, mu, sigma2, log_det_corr, llt) +
                    detail::log_inverse_gamma_density(sigma2, priors.sigma2) +
                    std::log(sigma2) + std::log(phi);
                accept_prob =
                    std::min(1.0, std::exp(log_post_new - log_post_old));
                if (unif(rng) < accept_prob) {
                    accept = true;
                    sigma2 = s2_new;
                    phi = phi_new;
                    corr.swap(corr_new);
                    llt = std::move(llt_new);
                    log_det_corr = ld_new;
                }
            }
        }
        if (it > config.burn_in) {
            ++proposals_post_burnin;
            if (accept) ++accepted_post_burnin;
        } else if (config.adapt_during_burnin) {
            // Robbins-Monro scaling toward 0.25 acceptance, frozen after
            // burn-in.
            const double gain =
                1.0 / std::pow(static_cast<double>(it) + 1.0, 0.6);
            log_scale += gain * (accept_prob - 0.25);
        }

        // (c) winding-number sweep in fixed site order; each site uses the
        // conditional mean and variance given the current rest.
        const Eigen::MatrixXd q = llt.solve(
            Eigen::MatrixXd::Identity(ni, ni));  // precision of R
        for (Eigen::Index i = 0; i < ni; ++i) {
            const double qii = q(i, i);
            const Eigen::VectorXd centered = y.array() - mu;
            const double cross = q.col(i).dot(centered) - qii * centered(i);
            const double cond_mean = mu - cross / qii;
            const double cond_var = sigma2 / qii;
            const double cond_sigma = std::sqrt(cond_var);
            const auto idx = static_cast<std::size_t>(i);
            k[idx] = sample_k(
                k_conditional(sample.angles[idx], cond_mean, cond_sigma), rng);
            y(i) = x(i) + two_pi * k[idx];
        }

        if (it > config.burn_in && (it - config.burn_in) % config.thin == 0)
            out.draws.push_back(ChainState{it, mu, sigma2, phi, k, accept});
    }

    out.acceptance_rate =
        proposals_post_burnin == 0
            ? 0.0
            : static_cast<double>(accepted_post_burnin) /
                  static_cast<double>(proposals_post_burnin);
    if (out.acceptance_rate < 0.05 || out.acceptance_rate > 0.6)
        out.warnings.push_back(
            "block (log sigma2, log phi) acceptance rate " +
            std::to_string(out.acceptance_rate) +
            " outside [0.05, 0.6]; consider retuning the proposal");
    // Posterior mass piling at the phi prior bounds suggests the support
    // censors the decay parameter.
    {
        std::size_t at_hi = 0, at_lo = 0;
        for (const ChainState& s : out.draws) {
            if (s.phi > priors.phi.hi - 0.05 * (priors.phi.hi - priors.phi.lo))
                ++at_hi;
            if (s.phi < priors.phi.lo + 0.05 * (priors.phi.hi - priors.phi.lo))
                ++at_lo;
        }
        if (!out.draws.empty()) {
            const double frac_hi =
                static_cast<double>(at_hi) / static_cast<double>(out.draws.size());
            const double frac_lo =
                static_cast<double>(at_lo) / static_cast<double>(out.draws.size());
            if (frac_hi > 0.5)
                out.warnings.push_back(
                    "phi posterior concentrates at the upper prior bound; "
                    "widen the phi prior support");
            else if (frac_lo > 0.5)
                out.warnings.push_back(
                    "phi posterior concentrates at the lower prior bound; "
                    "widen the phi prior support");
        }
    }
    return out;
}

struct IntervalSummary {
    double estimate = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

struct FitSummary {
    Angle mean_direction;
    CredibleArc mean_direction_arc{Angle(0.0), Angle(0.0), 0.0, 0.0};
    IntervalSummary concentration;
    std::optional<IntervalSummary> phi;  // spatial model only
    double acceptance_rate = 1.0;
    double level = 0.95;
};

namespace detail {
inline IntervalSummary equal_tail(std::vector<double> values, double estimate,
                                  double level) {
    std::sort(values.begin(), values.end());
    const double alpha = 1.0 - level;
    return IntervalSummary{estimate, quantile_sorted(values, alpha / 2.0),
                           quantile_sorted(values, 1.0 - alpha / 2.0)};
}

// Mode of a fixed 50-bin histogram over [lo, hi], reported at the bin
// midpoint.
inline double histogram_mode(const std::vector<double>& values, double lo,
                             double hi) {
    constexpr int bins = 50;
    std::vector<int> counts(bins, 0);
    const double width = (hi - lo) / bins;
    if (!(width > 0.0)) return lo;
    for (double v : values) {
        int b = static_cast<int>((v - lo) / width);
        b = std::clamp(b, 0, bins - 1);
        ++counts[b];
    }
    int best = 0;
    for (int b = 1; b < bins; ++b)
        if (counts[b] > counts[best]) best = b;
    return lo + (best + 0.5) * width;
}
}  // namespace detail

/// Posterior summaries on the identifiable quantities only: wrap(mu),
/// the concentration exp(-sigma2/2), and (spatial) phi. phi_support sets
/// the histogram range for the modal estimate; defaults to the draw range.
inline FitSummary summarize(const PosteriorDraws& draws, double level,
                            std::optional<PhiPrior> phi_support = std::nullopt) {
    if (draws.draws.empty())
        throw insufficient_data_error("summarize: no draws");
    if (!(level > 0.0 && level < 1.0))
        throw config_error("summarize: level must be in (0,1)");

    std::vector<Angle> mu_tilde;
    std::vector<double> conc;
    std::vector<double> phis;
    mu_tilde.reserve(draws.draws.size());
    conc.reserve(draws.draws.size());
    for (const ChainState& s : draws.draws) {
        mu_tilde.push_back(wrap(s.mu));
        conc.push_back(std::exp(-s.sigma2 / 2.0));
        if (draws.spatial) phis.push_back(s.phi);
    }

    FitSummary out;
    out.level = level;
    out.acceptance_rate = draws.acceptance_rate;
    out.mean_direction = moments_estimate(mu_tilde).mean_direction;
    out.mean_direction_arc = credible_arc(mu_tilde, level);
    double conc_mean = 0.0;
    for (double c : conc) conc_mean += c;
    conc_mean /= static_cast<double>(conc.size());
    out.concentration = detail::equal_tail(conc, conc_mean, level);
    if (draws.spatial) {
        double lo = phis.front(), hi = phis.front();
        for (double p : phis) {
            lo = std::min(lo, p);
            hi = std::max(hi, p);
        }
        if (phi_support) {
            lo = phi_support->lo;
            hi = phi_support->hi;
        }
        const double mode = detail::histogram_mode(phis, lo, hi);
        out.phi = detail::equal_tail(phis, mode, level);
    }
    return out;
}

}  // namespace wrapgp
