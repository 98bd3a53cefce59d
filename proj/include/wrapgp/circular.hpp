#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "wrapgp/errors.hpp"

namespace wrapgp {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// An angle stored in radians on [0, 2pi). Wrapping is applied on
/// construction, so a value outside the fundamental interval can never
/// be observed.
class Angle {
public:
    Angle() = default;

    explicit Angle(double radians) : value_(wrap_value(radians)) {
        if (!std::isfinite(radians))
            throw std::domain_error("Angle: non-finite input");
    }

    [[nodiscard]] double value() const noexcept { return value_; }

    [[nodiscard]] friend bool operator==(Angle a, Angle b) noexcept {
        return a.value_ == b.value_;
    }

    static double wrap_value(double y) noexcept {
        double x = std::fmod(y, two_pi);
        if (x < 0.0) x += two_pi;
        if (x >= two_pi) x = 0.0;  // fmod rounding at the seam
        return x;
    }

private:
    double value_ = 0.0;
};

/// y mod 2pi on [0, 2pi).
inline Angle wrap(double y) {
    if (!std::isfinite(y)) throw std::domain_error("wrap: non-finite input");
    return Angle(y);
}

/// Quadrant-correct inverse tangent of a (sine-sum, cosine-sum) pair,
/// mapped to [0, 2pi). Undefined at the origin.
inline Angle arctan_star(double s, double c) {
    if (s == 0.0 && c == 0.0)
        throw undefined_direction_error("arctan_star: undefined at C = S = 0");
    return Angle(std::atan2(s, c));
}

/// d(a, b) = 1 - cos(a - b), in [0, 2].
inline double circular_distance(Angle a, Angle b) noexcept {
    return 1.0 - std::cos(a.value() - b.value());
}

struct Point {
    double x = 0.0;  // km
    double y = 0.0;  // km
};

inline double distance(Point a, Point b) noexcept {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Angular observations paired with planar locations.
struct CircularSample {
    std::vector<Angle> angles;
    std::vector<Point> locations;

    [[nodiscard]] std::size_t size() const noexcept { return angles.size(); }

    void validate() const {
        if (angles.empty())
            throw insufficient_data_error("CircularSample: empty sample");
        if (angles.size() != locations.size())
            throw insufficient_data_error(
                "CircularSample: angles/locations length mismatch");
        for (const Point& p : locations)
            if (!std::isfinite(p.x) || !std::isfinite(p.y))
                throw std::domain_error("CircularSample: non-finite location");
    }

    // Smallest pairwise site separation; used to reject (near-)duplicate
    // locations before building a no-nugget covariance.
    [[nodiscard]] double min_separation() const noexcept {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < locations.size(); ++i)
            for (std::size_t j = i + 1; j < locations.size(); ++j)
                best = std::min(best, distance(locations[i], locations[j]));
        return best;
    }
};

inline constexpr double duplicate_site_tol_km = 1e-9;

struct CircularSummary {
    Angle mean_direction;   // arctan*(S, C)
    double concentration;   // sqrt(C^2 + S^2), in (0, 1]
    double variance_hat;    // -2 ln(concentration)
    double c_bar;
    double s_bar;
};

/// Moments estimators for the mean direction and concentration.
inline CircularSummary moments_estimate(std::span<const Angle> angles) {
    if (angles.empty())
        throw insufficient_data_error("moments_estimate: empty sample");
    double c = 0.0, s = 0.0;
    for (Angle a : angles) {
        c += std::cos(a.value());
        s += std::sin(a.value());
    }
    c /= static_cast<double>(angles.size());
    s /= static_cast<double>(angles.size());
    const double r = std::hypot(c, s);
    if (r < 1e-12)
        throw undefined_direction_error(
            "moments_estimate: zero resultant length, direction undefined");
    return CircularSummary{arctan_star(s, c), r, -2.0 * std::log(r), c, s};
}

inline CircularSummary moments_estimate(const CircularSample& sample) {
    return moments_estimate(std::span<const Angle>(sample.angles));
}

/// c = exp(-sigma^2 / 2).
inline double concentration(double sigma2) {
    if (!(sigma2 >= 0.0))
        throw std::domain_error("concentration: sigma2 must be >= 0");
    return std::exp(-sigma2 / 2.0);
}

/// Correlation induced on the wrapped pair by linear correlation rho_lin
/// under common variance sigma2: sinh(rho_lin * sigma2) / sinh(sigma2).
inline double wrapped_correlation(double rho_lin, double sigma2) {
    if (!(sigma2 > 0.0))
        throw std::domain_error("wrapped_correlation: sigma2 must be > 0");
    if (sigma2 > 30.0) {
        // sinh ratio via exponentials; the naive form overflows.
        const double a = rho_lin * sigma2;
        return std::exp(a - sigma2) * (1.0 - std::exp(-2.0 * a)) /
               (1.0 - std::exp(-2.0 * sigma2));
    }
    return std::sinh(rho_lin * sigma2) / std::sinh(sigma2);
}

struct RayleighResult {
    double statistic;
    double p_value;
};

/// Rayleigh uniformity screen: 2 n Rbar^2 against chi^2 with 2 dof.
inline RayleighResult rayleigh_test(std::span<const Angle> angles) {
    const std::size_t n = angles.size();
    if (n < 2)
        throw insufficient_data_error("rayleigh_test: need at least 2 angles");
    double c = 0.0, s = 0.0;
    for (Angle a : angles) {
        c += std::cos(a.value());
        s += std::sin(a.value());
    }
    const double rbar2 = (c * c + s * s) / (static_cast<double>(n) * n);
    const double stat = 2.0 * static_cast<double>(n) * rbar2;
    const double p = std::min(1.0, std::exp(-stat / 2.0));
    return RayleighResult{stat, p};
}

}  // namespace wrapgp
