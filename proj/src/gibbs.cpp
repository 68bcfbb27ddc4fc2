#include "betaar/gibbs.hpp"

#include "betaar/errors.hpp"
#include "betaar/specfn.hpp"

#include <cmath>
#include <limits>

namespace betaar {

void GibbsConfig::validate() const
{
    if (n_iter < 1) throw ConfigError("n_iter must be positive");
    if (burn_in < 0 || burn_in >= n_iter) throw ConfigError("burn_in must lie in [0, n_iter)");
    if (!(sigma_phi > 0.0)) throw ConfigError("sigma_phi must be positive");
}

std::vector<double> ChainTrace::alpha_column(int j) const
{
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(alpha.rows() - burn_in));
    for (Eigen::Index i = burn_in; i < alpha.rows(); ++i) out.push_back(alpha(i, j));
    return out;
}

std::vector<double> ChainTrace::phi_kept() const
{
    return std::vector<double>(phi.begin() + burn_in, phi.end());
}

double alpha_log_acceptance(const Vector& current, const Vector& candidate, double phi,
                            const AlphaTarget& target, const Gaussian& proposal)
{
    if (!in_simplex(candidate)) return -std::numeric_limits<double>::infinity();
    return target.log_density(candidate, phi) - target.log_density(current, phi)
           + proposal.log_density(current) - proposal.log_density(candidate);
}

MhOutcome alpha_mh_step(ChainState& state, const ModeEntry& entry, const AlphaTarget& target, Rng& rng)
{
    const Gaussian proposal(entry.mode, entry.sigma);
    const Vector candidate = proposal.sample(rng);
    MhOutcome out;
    if (!in_simplex(candidate)) {
        out.log_ratio = -std::numeric_limits<double>::infinity();
        return out;
    }
    out.log_ratio = alpha_log_acceptance(state.alpha, candidate, state.phi, target, proposal);
    if (out.log_ratio >= 0.0 || std::log(rng.uniform()) < out.log_ratio) {
        state.alpha = candidate;
        out.accepted = true;
    }
    return out;
}

GammaProposal phi_proposal(double phi, double sigma) { return {sigma * phi * phi, sigma * phi}; }

double log_conditional_phi(double phi, const Vector& alpha, const Design& design, const PhiPrior& prior)
{
    if (!(phi > 0.0)) return -std::numeric_limits<double>::infinity();
    return design.log_likelihood(alpha, phi) + log_prior_phi(prior, phi);
}

double phi_log_acceptance(double phi_old, double phi_new, const Vector& alpha, const Design& design,
                          const PhiPrior& prior, double sigma)
{
    const double shape_old = sigma * phi_old * phi_old;
    const double shape_new = sigma * phi_new * phi_new;
    const double correction = specfn::ln_gamma(shape_old) + (shape_new - 1.0) * std::log(phi_old)
                              + shape_new * std::log(sigma * phi_new) - specfn::ln_gamma(shape_new)
                              - (shape_old - 1.0) * std::log(phi_new)
                              - shape_old * std::log(sigma * phi_old);
    return log_conditional_phi(phi_new, alpha, design, prior)
           - log_conditional_phi(phi_old, alpha, design, prior) + correction;
}

MhOutcome phi_mh_step(ChainState& state, const Design& design, const PhiPrior& prior, double sigma,
                      Rng& rng)
{
    const GammaProposal q = phi_proposal(state.phi, sigma);
    const double candidate = rng.gamma(q.shape, q.rate);
    MhOutcome out;
    if (!(candidate > 0.0) || std::isinf(candidate)) {
        out.log_ratio = -std::numeric_limits<double>::infinity();
        return out;
    }
    out.log_ratio = phi_log_acceptance(state.phi, candidate, state.alpha, design, prior, sigma);
    if (out.log_ratio >= 0.0 || std::log(rng.uniform()) < out.log_ratio) {
        state.phi = candidate;
        out.accepted = true;
    }
    return out;
}

SweepOutcome gibbs_sweep(ChainState& state, ModeCache& cache, const AlphaTarget& target,
                         const PhiPrior& phi_prior, double sigma_phi, Rng& rng)
{
    SweepOutcome out;
    const ModeEntry& entry = newton_mode_step(cache, target, state.phi);
    out.alpha = alpha_mh_step(state, entry, target, rng);
    out.phi = phi_mh_step(state, target.design(), phi_prior, sigma_phi, rng);
    return out;
}

ChainState initial_state(const AlphaTarget& target, ModeCache& cache, const PhiPrior& phi_prior)
{
    ChainState state;
    state.k = target.k();
    state.phi = phi_prior.c / phi_prior.d;
    state.alpha = ensure_mode(cache, target, state.phi).mode;
    return state;
}

ChainTrace run_chain(const SeriesData& data, const PriorSpec& priors, int k, const GibbsConfig& config)
{
    config.validate();
    if (k < 1 || k > data.k_max()) throw ConfigError("run_chain: order must satisfy 1 <= k <= k_max");

    Rng rng(config.seed);
    const AlphaTarget target(data, k, priors.alpha.for_order(k));
    ModeCache cache;
    ChainState state = initial_state(target, cache, priors.phi);

    ChainTrace trace;
    trace.k = k;
    trace.burn_in = config.burn_in;
    trace.alpha.resize(config.n_iter, k + 1);
    trace.phi.reserve(static_cast<std::size_t>(config.n_iter));
    trace.alpha_accepted.reserve(static_cast<std::size_t>(config.n_iter));
    trace.phi_accepted.reserve(static_cast<std::size_t>(config.n_iter));

    const long long clamps_before = clamp_events();
    for (int it = 0; it < config.n_iter; ++it) {
        const SweepOutcome s = gibbs_sweep(state, cache, target, priors.phi, config.sigma_phi, rng);
        trace.alpha.row(it) = state.alpha.transpose();
        trace.phi.push_back(state.phi);
        trace.alpha_accepted.push_back(s.alpha.accepted ? 1 : 0);
        trace.phi_accepted.push_back(s.phi.accepted ? 1 : 0);
    }
    trace.clamp_events = clamp_events() - clamps_before;
    trace.newton_steps = cache.newton_steps();
    return trace;
}

} // namespace betaar
