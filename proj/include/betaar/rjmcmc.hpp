#pragma once

/** @file
 * Reversible-jump samplers over the order k of a BAR(k).
 *
 * Two alternative schemes are provided and a run uses exactly one:
 *
 *  - Stationarity: birth/death of one real reciprocal root r of the lag
 *    polynomial, moving between k and k + 1.  The truncated-normal proposal
 *    for r is calibrated at the centring point r = 0.
 *  - Convexity: jumps between any two orders with Gaussian proposals
 *    centred on Newton approximations of the conditional modes.
 *
 * Between jumps the chain runs the within-model Gibbs sweep of gibbs.hpp.
 */

#include "betaar/bar_model.hpp"
#include "betaar/gibbs.hpp"
#include "betaar/mvn.hpp"
#include "betaar/posterior.hpp"
#include "betaar/priors.hpp"
#include "betaar/rng.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace betaar {

enum class JumpScheme { Stationarity, Convexity };

const char* to_string(JumpScheme scheme);
JumpScheme parse_jump_scheme(const std::string& name);

struct RjConfig {
    JumpScheme scheme = JumpScheme::Convexity;
    int n_iter = 100000;
    int burn_in = 10000;
    double sigma_phi = 1.0;
    int k_init = 1;
    std::uint64_t seed = 1;

    void validate(int k_max) const;
};

struct RjState {
    int k = 1;
    Vector alpha;
    double phi = 1.0;
};

// ---------------------------------------------------------------------------
// Stationarity scheme

/// Calibrated truncated-normal proposal for the new root.
struct RootProposalParams {
    double mu = 0.0;
    double sigma2 = 0.25;
    double U1 = 0.0, U2 = 0.0, U3 = 0.0;
    bool fallback = false; ///< denominator was not positive; default used
};

inline constexpr double kFallbackRootSigma2 = 0.25;

/// Solves the first- and second-order conditions of log A_{k,k+1} at r = 0.
/// Requires k < data.k_max() so that xi_{t0 - 1} is available.
RootProposalParams root_proposal_params(const Vector& alpha, double phi, const SeriesData& data,
                                        const RootPrior& root_prior);

/// The displayed log acceptance ratio of the centring construction as a
/// function of r (additive constant C = 0), with g_t(r) = eta_t + r xi_{t-1},
/// and its first two derivatives.
double stationarity_log_ratio(double r, const Vector& alpha, double phi, const SeriesData& data,
                              const RootPrior& root_prior, double mu, double sigma2);
double stationarity_log_ratio_dr(double r, const Vector& alpha, double phi, const SeriesData& data,
                                 const RootPrior& root_prior, double mu, double sigma2);
double stationarity_log_ratio_drr(double r, const Vector& alpha, double phi, const SeriesData& data,
                                  const RootPrior& root_prior, double mu, double sigma2);

/// log A_{k,k+1} = log L(extend_by_root(alpha, r)) + log f(r) - log L(alpha) - log q(r).
double birth_log_acceptance(const Vector& alpha, double r, double phi, const SeriesData& data,
                            const RootPrior& root_prior, const RootProposalParams& params);

/// The root a death move removes from `alpha` (order >= 2): the real
/// reciprocal root in (-1, 0) closest to zero whose removal leaves a point of
/// the lower-dimensional simplex.  Empty when no root qualifies.
std::optional<double> removable_root(const Vector& alpha);

// ---------------------------------------------------------------------------
// Convexity scheme

struct ConvexityProposal {
    Vector mu;
    Matrix sigma;
    bool regularized = false;
};

/// Solves the gradient and Hessian matching conditions at u_tilde:
/// Sigma^{-1} = -H g(u_tilde), mu = u_tilde + Sigma grad g(u_tilde).
ConvexityProposal convexity_proposal_params(const AlphaTarget& target, const Vector& u_tilde, double phi);
/// Same, evaluated at the cached mode of target.k().
ConvexityProposal convexity_proposal_params(const ModeCache& cache, const AlphaTarget& target, double phi);

/// Orders reachable from k: {max(1, k-2), ..., min(k_max, k+2)} minus k.
std::vector<int> convexity_neighbours(int k, int k_max);

/// log Z_k(phi) of the unnormalized alpha prior over Delta_{k+1}, estimated
/// once per order by Monte Carlo over a fixed set of uniform simplex points
/// and tabulated on a log(phi) grid for the modified Gaussian.  Zero for the
/// (already normalized) Beta-type prior.
class PriorNormalizer {
public:
    explicit PriorNormalizer(AlphaPriorFamily family, int n_samples = 20000, std::uint64_t seed = 7);

    double log_normalizer(int k, double phi);

private:
    struct Table {
        std::vector<double> log_z; // per grid point (size 1 when phi-free)
    };
    const Table& table(int k);

    AlphaPriorFamily family_;
    int n_samples_;
    std::uint64_t seed_;
    std::map<int, Table> tables_;
};

/// Pieces of the convexity acceptance ratio, kept for inspection.
struct ConvexityRatio {
    double log_lik_new = 0, log_lik_old = 0;
    double log_prior_new = 0, log_prior_old = 0;
    double log_q_new = 0, log_q_old = 0;
    double log_p_forward = 0, log_p_reverse = 0;
    double total = 0;
};

// ---------------------------------------------------------------------------
// Driver

/// Counters of one RJ run.
struct RjStats {
    long long jump_attempts = 0, jump_accepts = 0;
    long long birth_attempts = 0, birth_accepts = 0;
    long long death_attempts = 0, death_accepts = 0;
    long long impossible_moves = 0;      ///< birth at k_max, death at k = 1 or with no removable root
    long long inadmissible_roots = 0;    ///< birth draws leaving the simplex
    long long calibration_fallbacks = 0;
    long long outside_simplex = 0;       ///< convexity draws outside the simplex
    long long alpha_accepts = 0, phi_accepts = 0, sweeps = 0;
    long long newton_steps = 0;
    long long clamp_events = 0;

    double jump_acceptance() const;
};

/// Shared state of one RJ chain: the data, priors, per-order targets and
/// mode cache.
class RjSampler {
public:
    RjSampler(const SeriesData& data, PriorSpec priors, RjConfig config);

    const SeriesData& data() const { return data_; }
    const PriorSpec& priors() const { return priors_; }
    const RjConfig& config() const { return config_; }
    const AlphaTarget& target(int k);
    ModeCache& cache() { return cache_; }
    PriorNormalizer& normalizer() { return normalizer_; }
    RjStats& stats() { return stats_; }

    /// Within-model sweep at the current order.
    SweepOutcome gibbs(RjState& state, Rng& rng);

    MhOutcome stationarity_birth(RjState& state, Rng& rng);
    MhOutcome stationarity_death(RjState& state, Rng& rng);
    /// Birth or death with probability 1/2 each.
    MhOutcome stationarity_jump(RjState& state, Rng& rng);

    /// Full decomposition of the convexity acceptance ratio for a proposed
    /// move from state to (k_new, u).  Proposals are the calibrations at the
    /// cached modes of both orders.
    ConvexityRatio convexity_ratio(const RjState& state, int k_new, const Vector& u,
                                   const ConvexityProposal& forward, const ConvexityProposal& reverse);
    MhOutcome convexity_jump(RjState& state, Rng& rng);

    MhOutcome jump(RjState& state, Rng& rng);

private:
    SeriesData data_;
    PriorSpec priors_;
    RjConfig config_;
    std::vector<std::optional<AlphaTarget>> targets_;
    ModeCache cache_;
    PriorNormalizer normalizer_;
    RjStats stats_;
};

struct ModelPosterior {
    std::vector<double> probs; ///< probs[k - 1] = p(k | x), k = 1..k_max
    int mode = 1;
    double mean = 0.0;
    double sd = 0.0;

    static ModelPosterior from_visits(const std::vector<int>& ks, int k_max);
};

/// Full trace of an RJ chain; alpha has k_max + 1 columns, NaN past k.
struct RjTrace {
    std::vector<int> k;
    std::vector<double> phi;
    Matrix alpha;
    std::vector<char> jump_accepted;
    int burn_in = 0;

    /// Post-burn-in draws at order k as a fixed-order trace.
    ChainTrace at_order(int k) const;
};

struct RjResult {
    ModelPosterior posterior;
    RjTrace trace;
    RjStats stats;
};

RjResult run_rjmcmc(const SeriesData& data, const PriorSpec& priors, const RjConfig& config);

} // namespace betaar
