#pragma once

#include "betaar/bar_model.hpp"
#include "betaar/rng.hpp"

namespace betaar {

/// Multivariate normal with a precomputed Cholesky factor.
class Gaussian {
public:
    Gaussian() = default;
    /// Throws NumericalError if `cov` is not positive definite.
    Gaussian(Vector mean, const Matrix& cov);

    const Vector& mean() const { return mean_; }
    const Matrix& cov() const { return cov_; }
    Eigen::Index dim() const { return mean_.size(); }

    Vector sample(Rng& rng) const;
    double log_density(const Vector& x) const;

private:
    Vector mean_;
    Matrix cov_;
    Matrix chol_;   // lower factor
    double log_norm_ = 0.0;
};

/// Normal N(mu, sigma2) truncated to (lo, hi).
class TruncatedNormal {
public:
    TruncatedNormal(double mu, double sigma2, double lo = -1.0, double hi = 1.0);

    double sample(Rng& rng) const;
    double log_density(double x) const;
    double mu() const { return mu_; }
    double sigma2() const { return sigma_ * sigma_; }

private:
    double mu_, sigma_, lo_, hi_;
    double cdf_lo_, cdf_hi_, log_mass_;
};

/// Result of turning a Hessian of a log-density into a proposal covariance.
struct NegInverse {
    Matrix precision;     ///< -H, ridge-shifted if needed
    Matrix covariance;    ///< inverse of precision
    bool regularized = false;
};

/// Symmetrizes H and returns (-H)^{-1}.  When the smallest eigenvalue of -H
/// is below 1e-8 the spectrum is shifted so that it is at least
/// tau = 1e-6 max(1, ||H||_inf).
NegInverse regularized_neg_inverse(const Matrix& hessian);

} // namespace betaar
