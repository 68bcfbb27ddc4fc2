#pragma once

/** @file
 * Chain-quality statistics: acceptance rates, effective sample size, the
 * batched two-sample Kolmogorov-Smirnov convergence check, RMSE against a
 * known truth and progressive averages.
 */

#include "betaar/gibbs.hpp"

#include <optional>
#include <span>
#include <vector>

namespace betaar {

struct EssResult {
    double ess = 0.0;
    bool degenerate = false; ///< constant chain; ess is then reported as 0
    int lags_used = 0;
};

/// ESS = N / (1 + 2 sum_t rho_t), with the sum truncated by Geyer's initial
/// positive sequence rule and the result capped at N.
EssResult ess_detail(std::span<const double> chain);
double ess(std::span<const double> chain);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int m = 0; ///< batched draws per half
};

/// Splits the chain into two halves, keeps every G-th draw of each, and
/// returns the two-sample KS distance with its asymptotic p-value.
KsResult ks_convergence(std::span<const double> chain, int G = 50);

/// Asymptotic two-sample KS p-value for distance d with sample sizes n, m.
double ks_p_value(double d, int n, int m);

/// Per-coordinate sqrt(mean((estimate - truth)^2)) over replications.
Vector rmse(const std::vector<Vector>& estimates, const Vector& truth);

double acceptance_rate(std::span<const char> indicators);
std::vector<double> progressive_means(std::span<const double> chain);

/// Per-parameter summaries of one fixed-order chain (alpha_0..alpha_k, phi).
struct DiagnosticsReport {
    std::vector<double> mean;
    std::vector<double> sd;
    std::vector<double> ess;
    std::vector<double> ks_statistic;
    std::vector<double> ks_p_value;
    double alpha_acceptance = 0.0;
    double phi_acceptance = 0.0;
    /// KS averaged over parameters and over the last `ks_window` iteration counts.
    double ks_avg_statistic = 0.0;
    double ks_avg_p_value = 0.0;
    std::optional<Vector> error; ///< posterior mean minus truth, when supplied
    int G = 50;
};

/// Builds the report on post-burn-in draws.  The averaged KS figures are
/// computed on the chain truncated at each of the last `ks_window` lengths.
DiagnosticsReport diagnose(const ChainTrace& trace, int G = 50, int ks_window = 100,
                           const std::optional<Vector>& truth_with_phi = std::nullopt);

} // namespace betaar
