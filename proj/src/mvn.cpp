#include "betaar/mvn.hpp"

#include "betaar/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numbers>

namespace betaar {

namespace {

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double std_normal_quantile(double p)
{
    // Acklam's rational approximation refined by one Halley step
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00, 2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    double x;
    if (p < 0.02425) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p > 1.0 - 0.02425) {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double e = std_normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

} // namespace

Gaussian::Gaussian(Vector mean, const Matrix& cov) : mean_(std::move(mean)), cov_(cov)
{
    if (cov.rows() != mean_.size() || cov.cols() != mean_.size()) {
        throw DimensionError("Gaussian: covariance shape mismatch");
    }
    Eigen::LLT<Matrix> llt(cov_);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("Gaussian: covariance is not positive definite");
    }
    chol_ = llt.matrixL();
    const double log_det = 2.0 * chol_.diagonal().array().log().sum();
    log_norm_ = -0.5 * (static_cast<double>(mean_.size()) * std::log(2.0 * std::numbers::pi) + log_det);
}

Vector Gaussian::sample(Rng& rng) const
{
    Vector z(mean_.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    return mean_ + chol_ * z;
}

double Gaussian::log_density(const Vector& x) const
{
    const Vector w = chol_.triangularView<Eigen::Lower>().solve(x - mean_);
    return log_norm_ - 0.5 * w.squaredNorm();
}

TruncatedNormal::TruncatedNormal(double mu, double sigma2, double lo, double hi)
    : mu_(mu), sigma_(std::sqrt(sigma2)), lo_(lo), hi_(hi)
{
    if (!(sigma2 > 0.0) || !(hi > lo)) {
        throw DomainError("TruncatedNormal: need sigma2 > 0 and lo < hi");
    }
    cdf_lo_ = std_normal_cdf((lo_ - mu_) / sigma_);
    cdf_hi_ = std_normal_cdf((hi_ - mu_) / sigma_);
    const double mass = cdf_hi_ - cdf_lo_;
    if (!(mass > 0.0)) {
        throw NumericalError("TruncatedNormal: no mass inside the truncation interval");
    }
    log_mass_ = std::log(mass);
}

double TruncatedNormal::sample(Rng& rng) const
{
    // inverse cdf; plain rejection would loop when the interval sits in a tail
    for (;;) {
        const double u = cdf_lo_ + rng.uniform() * (cdf_hi_ - cdf_lo_);
        if (u <= 0.0 || u >= 1.0) continue;
        const double x = mu_ + sigma_ * std_normal_quantile(u);
        if (x > lo_ && x < hi_) return x;
    }
}

double TruncatedNormal::log_density(double x) const
{
    if (!(x > lo_ && x < hi_)) return -std::numeric_limits<double>::infinity();
    const double z = (x - mu_) / sigma_;
    return -0.5 * z * z - std::log(sigma_) - 0.5 * std::log(2.0 * std::numbers::pi) - log_mass_;
}

NegInverse regularized_neg_inverse(const Matrix& hessian)
{
    const Matrix neg = -0.5 * (hessian + hessian.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(neg);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("regularized_neg_inverse: eigen-decomposition failed");
    }
    Vector values = eig.eigenvalues();
    NegInverse out;
    const double min_value = values.minCoeff();
    if (!(min_value >= 1e-8)) {
        const double norm_inf = hessian.cwiseAbs().rowwise().sum().maxCoeff();
        const double tau = 1e-6 * std::max(1.0, norm_inf);
        const double shift = tau - std::min(min_value, 0.0);
        values.array() += shift;
        out.regularized = true;
    }
    const Matrix& vecs = eig.eigenvectors();
    out.precision = vecs * values.asDiagonal() * vecs.transpose();
    out.covariance = vecs * values.cwiseInverse().asDiagonal() * vecs.transpose();
    out.covariance = (0.5 * (out.covariance + out.covariance.transpose())).eval();
    return out;
}

} // namespace betaar
