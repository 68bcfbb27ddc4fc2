#pragma once

/** @file
 * The Beta autoregressive process BAR(k).
 *
 * Conditionally on the past, x_t ~ Be(eta_t phi, (1 - eta_t) phi) with
 * eta_t = alpha_0 + alpha_1 x_{t-1} + ... + alpha_k x_{t-k}.  The coefficient
 * vector lives in the open simplex
 *
 *     Delta_{k+1} = { alpha in (0,1)^{k+1} : sum_i alpha_i in (0,1) },
 *
 * which keeps eta_t in (0,1) for every path.
 */

#include "betaar/rng.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace betaar {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Strict-inequality margin used for simplex membership.
inline constexpr double kSimplexMargin = 1e-10;
/// eta_t is clamped to [kEtaClamp, 1 - kEtaClamp] before density evaluation.
inline constexpr double kEtaClamp = 1e-8;

/// True when every alpha_i > margin and sum alpha_i < 1 - margin.
bool in_simplex(const Vector& alpha, double margin = kSimplexMargin);

/// Number of eta clamp events on the calling thread since the last reset.
long long clamp_events();
void reset_clamp_events();

struct BarParams {
    int k = 1;
    Vector alpha;   ///< (alpha_0, ..., alpha_k)
    double phi = 1; ///< precision

    BarParams() = default;
    BarParams(Vector alpha_, double phi_);

    /// Throws DomainError unless alpha in Delta_{k+1} and phi > 0.
    void validate() const;
};

/// Observations in (0,1) plus the conditioning convention: the first k_max
/// values only serve as lags, so the likelihood runs over t0 = k_max + 1
/// (1-based) to T regardless of the fitted order.
class SeriesData {
public:
    SeriesData() = default;
    SeriesData(std::vector<double> values, int k_max);

    const std::vector<double>& values() const { return values_; }
    int k_max() const { return k_max_; }
    /// 1-based index of the first modeled observation.
    int t0() const { return k_max_ + 1; }
    /// 0-based index of the first modeled observation.
    int first() const { return k_max_; }
    int size() const { return static_cast<int>(values_.size()); }
    /// Number of likelihood terms T - t0 + 1.
    int n_terms() const { return size() - k_max_; }

    /// Same values with a different maximum order.
    SeriesData with_k_max(int k_max) const { return SeriesData(values_, k_max); }
    /// Drops the first `count` observations.
    SeriesData drop_front(int count, int k_max) const;
    /// Keeps the first `count` observations.
    SeriesData head(int count) const;

private:
    std::vector<double> values_;
    int k_max_ = 1;
};

/// Precomputed regressors for a fixed order k on a fixed data window:
/// rows z_t' = (1, x_{t-1}, ..., x_{t-k}) for t = t0..T, and the per-term
/// constants log x_t, log(1 - x_t) and A_t = log(x_t / (1 - x_t)).
class Design {
public:
    Design(const SeriesData& data, int k);

    int k() const { return k_; }
    int n_terms() const { return static_cast<int>(x_.size()); }
    const Matrix& z() const { return z_; }
    const Vector& x() const { return x_; }
    const Vector& log_x() const { return log_x_; }
    const Vector& log_1mx() const { return log_1mx_; }
    const Vector& log_odds() const { return log_odds_; }

    /// eta_t = z_t' alpha, clamped into [kEtaClamp, 1 - kEtaClamp].
    Vector eta(const Vector& alpha) const;
    double log_likelihood(const Vector& alpha, double phi) const;

private:
    int k_;
    Matrix z_;
    Vector x_, log_x_, log_1mx_, log_odds_;
};

/// eta_t for lags ordered (x_{t-1}, ..., x_{t-k}).
double conditional_mean(const Vector& alpha, std::span<const double> lags);

/// log density of Be(eta phi, (1 - eta) phi) at x.
double transition_logpdf(double x, double eta, double phi);

double log_likelihood(const BarParams& params, const SeriesData& data);
double log_likelihood(const Vector& alpha, double phi, const SeriesData& data);

/// Draws n observations following `init` (k_max = init.size() conditioning
/// values); the returned series holds init followed by the n draws.
SeriesData simulate(const BarParams& params, int n, std::span<const double> init, Rng& rng);
SeriesData simulate(const BarParams& params, int n, std::span<const double> init,
                    std::uint64_t seed);

/// Stationary mean m solving m = alpha_0 + m * (alpha_1 + ... + alpha_k).
double stationary_mean(const Vector& alpha);

/// Coefficients of the BAR(k+1) obtained by multiplying the lag polynomial
/// by (1 - r L): a*_0 = a_0, a*_1 = a_1 + r, a*_j = a_j - r a_{j-1}.
Vector extend_by_root(const Vector& alpha, double r);

/// Inverse of extend_by_root for the same r: divides the lag polynomial by
/// (1 - r L) and drops the last coefficient.
Vector remove_root(const Vector& extended, double r);

/// True iff extend_by_root(alpha, r) lies in Delta_{k+2}.
bool check_extension_admissible(const Vector& alpha, double r);

/// Reciprocal roots lambda_j of 1 - alpha_1 L - ... - alpha_k L^k.
std::vector<std::complex<double>> reciprocal_roots(const Vector& alpha);

/// Innovations xi_t = x_t - eta_t for 0-based t = from..T-1 (default: the
/// modeled window t0..T).
std::vector<double> innovation_sequence(const Vector& alpha, const SeriesData& data);
std::vector<double> innovation_sequence(const Vector& alpha, const SeriesData& data, int from);

/// log(x / (1 - x)).
double log_odds(double x);

} // namespace betaar
