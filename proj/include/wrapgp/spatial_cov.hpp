#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "wrapgp/circular.hpp"
#include "wrapgp/errors.hpp"

namespace wrapgp {

enum class KernelKind { exponential };

/// Isotropic covariance kernel sigma2 * rho(d). Only the exponential
/// correlation rho(d) = exp(-phi d) is fitted; the kind tag is the
/// extension point.
struct Kernel {
    KernelKind kind = KernelKind::exponential;
    double sigma2 = 1.0;  // partial sill
    double phi = 0.1;     // decay, 1/km

    void validate() const {
        if (!(sigma2 > 0.0)) throw config_error("Kernel: sigma2 must be > 0");
        if (!(phi > 0.0)) throw config_error("Kernel: phi must be > 0");
    }

    [[nodiscard]] double correlation(double d) const noexcept {
        return std::exp(-phi * d);
    }

    // Distance at which the exponential correlation drops to e^-3.
    [[nodiscard]] double practical_range() const noexcept { return 3.0 / phi; }
};

/// Covariance matrix sigma2 * R(phi) over a site set, with a cached
/// Cholesky factor. Immutable once built.
class CovMatrix {
public:
    CovMatrix(std::vector<Point> sites, Kernel kernel)
        : sites_(std::move(sites)), kernel_(kernel) {
        kernel_.validate();
        const auto n = static_cast<Eigen::Index>(sites_.size());
        if (n == 0) throw insufficient_data_error("CovMatrix: no sites");
        mat_.resize(n, n);
        double min_sep = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < n; ++i) {
            mat_(i, i) = kernel_.sigma2;
            for (Eigen::Index j = i + 1; j < n; ++j) {
                const double d = distance(sites_[i], sites_[j]);
                min_sep = std::min(min_sep, d);
                mat_(i, j) = mat_(j, i) =
                    kernel_.sigma2 * kernel_.correlation(d);
            }
        }
        if (n > 1 && min_sep < duplicate_site_tol_km) {
            std::ostringstream msg;
            msg << "singular covariance: duplicate sites (n=" << n
                << ", minimum site separation " << min_sep << " km)";
            throw singular_covariance_error(msg.str());
        }
        llt_.compute(mat_);
        if (llt_.info() != Eigen::Success) {
            // One retry with a tiny diagonal jitter; this is a numerical
            // safeguard, not a modeled nugget.
            jittered_ = true;
            Eigen::MatrixXd bumped = mat_;
            bumped.diagonal().array() += 1e-10 * kernel_.sigma2;
            llt_.compute(bumped);
            if (llt_.info() != Eigen::Success) {
                double min_sep = std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < sites_.size(); ++i)
                    for (std::size_t j = i + 1; j < sites_.size(); ++j)
                        min_sep = std::min(
                            min_sep, distance(sites_[i], sites_[j]));
                std::ostringstream msg;
                msg << "singular covariance (n=" << n
                    << ", minimum site separation " << min_sep << " km)";
                throw singular_covariance_error(msg.str());
            }
        }
    }

    [[nodiscard]] Eigen::Index n() const noexcept { return mat_.rows(); }
    [[nodiscard]] const std::vector<Point>& sites() const noexcept {
        return sites_;
    }
    [[nodiscard]] const Kernel& kernel() const noexcept { return kernel_; }
    [[nodiscard]] const Eigen::MatrixXd& matrix() const noexcept {
        return mat_;
    }
    [[nodiscard]] const Eigen::LLT<Eigen::MatrixXd>& llt() const noexcept {
        return llt_;
    }
    [[nodiscard]] bool jittered() const noexcept { return jittered_; }

    [[nodiscard]] double log_det() const {
        return 2.0 * llt_.matrixL().toDenseMatrix().diagonal().array().log().sum();
    }

private:
    std::vector<Point> sites_;
    Kernel kernel_;
    Eigen::MatrixXd mat_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    bool jittered_ = false;
};

inline CovMatrix build_cov(std::vector<Point> sites, Kernel kernel) {
    return CovMatrix(std::move(sites), kernel);
}

struct ConditionalGaussian {
    double mean = 0.0;
    double variance = 0.0;
};

/// Mean and variance of Y_i | {Y_j, j != i} under N(mu 1, Sigma), via the
/// precision form: variance = 1/Q_ii, mean = mu - (1/Q_ii) sum_{j!=i}
/// Q_ij (y_j - mu).
inline ConditionalGaussian site_conditional(Eigen::Index i,
                                            const Eigen::VectorXd& y,
                                            double mu, const CovMatrix& cov) {
    const Eigen::Index n = cov.n();
    if (i < 0 || i >= n)
        throw std::out_of_range("site_conditional: index out of range");
    if (y.size() != n)
        throw std::invalid_argument("site_conditional: y length mismatch");
    if (n < 2)
        throw insufficient_data_error("site_conditional: need n >= 2");
    // q = Sigma^{-1} e_i is the i-th column of the precision matrix.
    Eigen::VectorXd q = cov.llt().solve(Eigen::VectorXd::Unit(n, i));
    const double qii = q(i);
    const Eigen::VectorXd centered = y.array() - mu;
    const double cross = q.dot(centered) - qii * centered(i);
    return ConditionalGaussian{mu - cross / qii, 1.0 / qii};
}

/// Mean and variance of Y(s0) | Y under the joint normal with covariance
/// sigma2 * [R, rho0; rho0^T, 1]. Variance is clamped at zero if round-off
/// drives it slightly negative.
inline ConditionalGaussian predictive_conditional(Point s0,
                                                  const Eigen::VectorXd& y,
                                                  double mu,
                                                  const CovMatrix& cov) {
    const Eigen::Index n = cov.n();
    if (y.size() != n)
        throw std::invalid_argument("predictive_conditional: y length mismatch");
    // Coincident target: the no-nugget GP interpolates exactly.
    for (Eigen::Index k = 0; k < n; ++k)
        if (distance(s0, cov.sites()[static_cast<std::size_t>(k)]) <
            duplicate_site_tol_km)
            return ConditionalGaussian{y(k), 0.0};
    Eigen::VectorXd rho0(n);
    for (Eigen::Index j = 0; j < n; ++j)
        rho0(j) = cov.kernel().correlation(
            distance(s0, cov.sites()[static_cast<std::size_t>(j)]));
    // Work with the correlation-scale system: Sigma = sigma2 R.
    const Eigen::VectorXd cov0 = cov.kernel().sigma2 * rho0;
    const Eigen::VectorXd w = cov.llt().solve(cov0);
    const Eigen::VectorXd centered = y.array() - mu;
    const double mean = mu + w.dot(centered);
    double variance = cov.kernel().sigma2 - w.dot(cov0);
    if (variance < 0.0) variance = 0.0;
    return ConditionalGaussian{mean, variance};
}

}  // namespace wrapgp
