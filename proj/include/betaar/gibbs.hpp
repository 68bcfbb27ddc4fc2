#pragma once

/** @file
 * Metropolis-Hastings within Gibbs for (alpha, phi) at a fixed order k.
 *
 * Each sweep performs one Newton step on the cached conditional mode, an
 * independence M-H step for alpha with proposal N(mode, Sigma), and a
 * gamma random-walk M-H step for phi.
 */

#include "betaar/bar_model.hpp"
#include "betaar/posterior.hpp"
#include "betaar/priors.hpp"
#include "betaar/rng.hpp"

#include <cstdint>
#include <vector>

namespace betaar {

struct GibbsConfig {
    int n_iter = 10000;
    int burn_in = 1000;
    double sigma_phi = 1.0; ///< gamma random-walk tuning; proposal variance is 1/sigma_phi
    std::uint64_t seed = 1;

    void validate() const;
};

struct ChainState {
    int k = 1;
    Vector alpha;
    double phi = 1.0;
};

struct ChainTrace {
    int k = 1;
    Matrix alpha;                     ///< n_iter x (k + 1), burn-in included
    std::vector<double> phi;
    std::vector<char> alpha_accepted;
    std::vector<char> phi_accepted;
    long long clamp_events = 0;
    long long newton_steps = 0;
    int burn_in = 0;

    /// Post-burn-in draws of coefficient j.
    std::vector<double> alpha_column(int j) const;
    std::vector<double> phi_kept() const;
};

struct MhOutcome {
    bool accepted = false;
    double log_ratio = 0.0;
};

/// log of [pi(cand) q(cur)] / [pi(cur) q(cand)] for the independence
/// proposal; -infinity when the candidate leaves the simplex.
double alpha_log_acceptance(const Vector& current, const Vector& candidate, double phi,
                            const AlphaTarget& target, const Gaussian& proposal);

/// Independence M-H step with candidate drawn from N(entry.mode, entry.sigma).
MhOutcome alpha_mh_step(ChainState& state, const ModeEntry& entry, const AlphaTarget& target,
                        Rng& rng);

/// Shape and rate of the gamma random-walk proposal centred at phi.
struct GammaProposal {
    double shape;
    double rate;
};
GammaProposal phi_proposal(double phi, double sigma);

/// log phi full conditional: log-likelihood plus gamma log prior.
double log_conditional_phi(double phi, const Vector& alpha, const Design& design,
                           const PhiPrior& prior);

/// Log acceptance ratio of the gamma random walk written with its explicit
/// Gamma-function correction terms.
double phi_log_acceptance(double phi_old, double phi_new, const Vector& alpha, const Design& design,
                          const PhiPrior& prior, double sigma);

MhOutcome phi_mh_step(ChainState& state, const Design& design, const PhiPrior& prior, double sigma,
                      Rng& rng);

/// Outcome of one full within-model sweep.
struct SweepOutcome {
    MhOutcome alpha;
    MhOutcome phi;
};

SweepOutcome gibbs_sweep(ChainState& state, ModeCache& cache, const AlphaTarget& target,
                         const PhiPrior& phi_prior, double sigma_phi, Rng& rng);

/// Starting state: phi at the prior mean c/d and alpha at the warmed-up
/// conditional mode for that phi (the mode entry is created in `cache`).
ChainState initial_state(const AlphaTarget& target, ModeCache& cache, const PhiPrior& phi_prior);

ChainTrace run_chain(const SeriesData& data, const PriorSpec& priors, int k, const GibbsConfig& config);

} // namespace betaar
