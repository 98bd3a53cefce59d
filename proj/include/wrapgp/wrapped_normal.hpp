#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "wrapgp/circular.hpp"
#include "wrapgp/errors.hpp"

namespace wrapgp {

/// Parameters of the univariate wrapped normal WN(mu, sigma2). mu is the
/// unwrapped mean; the identifiable mean direction is wrap(mu).
struct WnParams {
    double mu = 0.0;
    double sigma2 = 1.0;

    void validate() const {
        if (!(sigma2 > 0.0))
            throw config_error("WnParams: sigma2 must be > 0");
    }

    [[nodiscard]] Angle mean_direction() const { return wrap(mu); }
    [[nodiscard]] double concentration_value() const {
        return std::exp(-sigma2 / 2.0);
    }
};

/// Symmetric winding-number support {-m, ..., m} sized so that the
/// truncated normal mass is at least 0.997.
struct TruncationWindow {
    int m = 1;

    [[nodiscard]] int lower() const noexcept { return -m; }
    [[nodiscard]] int upper() const noexcept { return m; }
    [[nodiscard]] int size() const noexcept { return 2 * m + 1; }
};

/// m = 1 + floor(3 sigma / 2pi), the floor rounding toward zero.
inline TruncationWindow truncation_window(double sigma) {
    if (!(sigma > 0.0))
        throw std::domain_error("truncation_window: sigma must be > 0");
    return TruncationWindow{1 + static_cast<int>(3.0 * sigma / two_pi)};
}

/// Truncated wrapped-normal density at x. The default window comes from
/// truncation_window; callers may widen it (tests use m = 200).
inline double wn_density(Angle x, const WnParams& params,
                         const TruncationWindow& window) {
    params.validate();
    const double sigma = std::sqrt(params.sigma2);
    const double norm = 1.0 / (sigma * std::sqrt(two_pi));
    // Anchor the window at the dominant winding so an unwrapped mu far from
    // [0, 2pi) keeps its mass inside the sum; this also makes the density
    // exactly translation equivariant.
    const auto k0 =
        static_cast<int>(std::lround((params.mu - x.value()) / two_pi));
    double sum = 0.0;
    for (int k = k0 + window.lower(); k <= k0 + window.upper(); ++k) {
        const double z = (x.value() - params.mu + two_pi * k) / sigma;
        sum += std::exp(-0.5 * z * z);
    }
    return norm * sum;
}

inline double wn_density(Angle x, const WnParams& params) {
    return wn_density(x, params, truncation_window(std::sqrt(params.sigma2)));
}

/// Wrap n draws of N(mu, sigma2) onto the circle.
inline std::vector<Angle> wn_sample(const WnParams& params, std::size_t n,
                                    std::uint64_t seed) {
    params.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(params.mu, std::sqrt(params.sigma2));
    std::vector<Angle> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(wrap(normal(rng)));
    return out;
}

/// Conditional distribution of the winding number K given x, mu, sigma,
/// over the adaptive window anchored at the dominant winding `center`.
/// probs[k - lower()] is P(K = k).
struct KConditional {
    TruncationWindow window;
    int center = 0;
    std::vector<double> probs;

    [[nodiscard]] int lower() const noexcept { return center - window.m; }
    [[nodiscard]] int upper() const noexcept { return center + window.m; }

    [[nodiscard]] double prob(int k) const {
        if (k < lower() || k > upper()) return 0.0;
        return probs[static_cast<std::size_t>(k - lower())];
    }

    [[nodiscard]] int mode() const {
        int best = lower();
        for (int k = lower() + 1; k <= upper(); ++k)
            if (prob(k) > prob(best)) best = k;
        return best;
    }
};

inline KConditional k_conditional(Angle x, double mu, double sigma) {
    if (!(sigma > 0.0))
        throw std::domain_error("k_conditional: sigma must be > 0");
    const TruncationWindow window = truncation_window(sigma);
    const auto center =
        static_cast<int>(std::lround((mu - x.value()) / two_pi));
    std::vector<double> logw(window.size());
    double max_logw = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < window.size(); ++j) {
        const int k = center + window.lower() + j;
        const double z = (x.value() + two_pi * k - mu) / sigma;
        logw[static_cast<std::size_t>(j)] = -0.5 * z * z;
        max_logw = std::max(max_logw, logw[static_cast<std::size_t>(j)]);
    }
    double total = 0.0;
    for (double& w : logw) {
        w = std::exp(w - max_logw);
        total += w;
    }
    for (double& w : logw) w /= total;
    return KConditional{window, center, std::move(logw)};
}

/// Draw one winding number from its conditional distribution.
template <typename Rng>
int sample_k(const KConditional& dist, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng);
    for (int k = dist.lower(); k <= dist.upper(); ++k) {
        u -= dist.prob(k);
        if (u <= 0.0) return k;
    }
    return dist.upper();
}

/// Symmetric posterior credible arc: rotate draws by their circular mean
/// into (-pi, pi], take the central `level` empirical quantiles, rotate
/// back.
struct CredibleArc {
    Angle lower;
    Angle upper;
    double half_width_lo;  // signed offsets from the circular mean
    double half_width_hi;
};

namespace detail {
// Empirical quantile with linear interpolation on the sorted vector.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.size() == 1) return sorted.front();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}
}  // namespace detail

inline CredibleArc credible_arc(std::span<const Angle> draws, double level) {
    if (draws.empty())
        throw insufficient_data_error("credible_arc: no draws");
    if (!(level > 0.0 && level < 1.0))
        throw config_error("credible_arc: level must be in (0,1)");
    const CircularSummary summary = moments_estimate(draws);
    const double center = summary.mean_direction.value();
    std::vector<double> dev;
    dev.reserve(draws.size());
    for (Angle a : draws) {
        double d = Angle::wrap_value(a.value() - center + pi) - pi;
        dev.push_back(d);
    }
    std::sort(dev.begin(), dev.end());
    const double alpha = 1.0 - level;
    const double lo = detail::quantile_sorted(dev, alpha / 2.0);
    const double hi = detail::quantile_sorted(dev, 1.0 - alpha / 2.0);
    return CredibleArc{wrap(center + lo), wrap(center + hi), lo, hi};
}

inline CredibleArc credible_arc(const std::vector<Angle>& draws, double level) {
    return credible_arc(std::span<const Angle>(draws), level);
}

}  // namespace wrapgp
