#include "betaar/rjmcmc.hpp"

#include "betaar/errors.hpp"
#include "betaar/specfn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace betaar {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool accept(double log_ratio, Rng& rng)
{
    return log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio;
}

double inner_clamp(double eta) { return std::clamp(eta, kEtaClamp, 1.0 - kEtaClamp); }

// Innovations xi_{t-1} and fitted means eta_t = x_t - xi_t over the modeled window.
struct LaggedInnovations {
    std::vector<double> xi_prev;
    std::vector<double> eta;
    std::vector<double> x;
};

LaggedInnovations lagged_innovations(const Vector& alpha, const SeriesData& data)
{
    const int k = static_cast<int>(alpha.size()) - 1;
    if (k >= data.k_max()) {
        throw DimensionError("root calibration needs k < k_max");
    }
    const std::vector<double> xi = innovation_sequence(alpha, data, data.first() - 1);
    LaggedInnovations out;
    const auto& v = data.values();
    for (int t = data.first(); t < data.size(); ++t) {
        const std::size_t i = static_cast<std::size_t>(t - data.first());
        out.xi_prev.push_back(xi[i]);
        out.eta.push_back(inner_clamp(v[t] - xi[i + 1]));
        out.x.push_back(v[t]);
    }
    return out;
}

// Newton polish of a real root of lambda^m - a_1 lambda^{m-1} - ... - a_m.
double polish_root(const Vector& alpha, double lambda)
{
    const Eigen::Index m = alpha.size() - 1;
    for (int iter = 0; iter < 8; ++iter) {
        double p = 1.0, dp = 0.0;
        for (Eigen::Index j = 1; j <= m; ++j) {
            dp = dp * lambda + p;
            p = p * lambda - alpha[j];
        }
        if (dp == 0.0) break;
        const double step = p / dp;
        lambda -= step;
        if (std::abs(step) < 1e-16) break;
    }
    return lambda;
}

} // namespace

const char* to_string(JumpScheme scheme)
{
    return scheme == JumpScheme::Stationarity ? "stationarity" : "convexity";
}

JumpScheme parse_jump_scheme(const std::string& name)
{
    if (name == "stationarity") return JumpScheme::Stationarity;
    if (name == "convexity") return JumpScheme::Convexity;
    throw ConfigError("unknown jump scheme '" + name + "' (stationarity | convexity)");
}

void RjConfig::validate(int k_max) const
{
    if (n_iter < 1) throw ConfigError("n_iter must be positive");
    if (burn_in < 0 || burn_in >= n_iter) throw ConfigError("burn_in must lie in [0, n_iter)");
    if (!(sigma_phi > 0.0)) throw ConfigError("sigma_phi must be positive");
    if (k_init < 1 || k_init > k_max) throw ConfigError("k_init must lie in [1, k_max]");
}

// ---------------------------------------------------------------------------

RootProposalParams root_proposal_params(const Vector& alpha, double phi, const SeriesData& data,
                                        const RootPrior& root_prior)
{
    const LaggedInnovations li = lagged_innovations(alpha, data);
    RootProposalParams out;
    for (std::size_t t = 0; t < li.x.size(); ++t) {
        const double a = li.eta[t] * phi;
        const double b = (1.0 - li.eta[t]) * phi;
        const double xp = li.xi_prev[t];
        out.U1 += xp * (specfn::digamma(b) - specfn::digamma(a));
        out.U2 += xp * (std::log(li.x[t]) - std::log1p(-li.x[t]));
        out.U3 += xp * xp * (specfn::trigamma(a) + specfn::trigamma(b));
    }
    const double denom = root_prior.a + root_prior.b - 2.0 + phi * phi * out.U3;
    if (!(denom > 0.0) || !std::isfinite(denom)) {
        out.mu = 0.0;
        out.sigma2 = kFallbackRootSigma2;
        out.fallback = true;
        return out;
    }
    out.mu = ((root_prior.a - root_prior.b) + phi * (out.U2 + out.U1)) / denom;
    out.sigma2 = 1.0 / denom;
    return out;
}

double stationarity_log_ratio(double r, const Vector& alpha, double phi, const SeriesData& data,
                              const RootPrior& root_prior, double mu, double sigma2)
{
    const LaggedInnovations li = lagged_innovations(alpha, data);
    double sum = (r - mu) * (r - mu) / (2.0 * sigma2);
    for (std::size_t t = 0; t < li.x.size(); ++t) {
        const double g = inner_clamp(li.eta[t] + r * li.xi_prev[t]);
        sum += -specfn::ln_beta(g * phi, (1.0 - g) * phi) + (g * phi - 1.0) * std::log(li.x[t])
               + ((1.0 - g) * phi - 1.0) * std::log1p(-li.x[t]);
    }
    return sum + log_prior_root(root_prior, r);
}

double stationarity_log_ratio_dr(double r, const Vector& alpha, double phi, const SeriesData& data,
                                 const RootPrior& root_prior, double mu, double sigma2)
{
    const LaggedInnovations li = lagged_innovations(alpha, data);
    double sum = 0.0;
    for (std::size_t t = 0; t < li.x.size(); ++t) {
        const double g = inner_clamp(li.eta[t] + r * li.xi_prev[t]);
        sum += li.xi_prev[t] * phi
               * (specfn::digamma((1.0 - g) * phi) - specfn::digamma(g * phi) + std::log(li.x[t])
                  - std::log1p(-li.x[t]));
    }
    return sum + (r - mu) / sigma2 + d_log_prior_root(root_prior, r);
}

double stationarity_log_ratio_drr(double r, const Vector& alpha, double phi, const SeriesData& data,
                                  const RootPrior& root_prior, double /*mu*/, double sigma2)
{
    const LaggedInnovations li = lagged_innovations(alpha, data);
    double sum = 0.0;
    for (std::size_t t = 0; t < li.x.size(); ++t) {
        const double g = inner_clamp(li.eta[t] + r * li.xi_prev[t]);
        sum -= li.xi_prev[t] * li.xi_prev[t] * phi * phi
               * (specfn::trigamma(g * phi) + specfn::trigamma((1.0 - g) * phi));
    }
    return sum + 1.0 / sigma2 + d2_log_prior_root(root_prior, r);
}

double birth_log_acceptance(const Vector& alpha, double r, double phi, const SeriesData& data,
                            const RootPrior& root_prior, const RootProposalParams& params)
{
    const Vector extended = extend_by_root(alpha, r);
    if (!in_simplex(extended)) return kNegInf;
    const TruncatedNormal q(params.mu, params.sigma2);
    return log_likelihood(extended, phi, data) - log_likelihood(alpha, phi, data)
           + log_density_root(root_prior, r) - q.log_density(r);
}

std::optional<double> removable_root(const Vector& alpha)
{
    if (alpha.size() < 3) return std::nullopt;
    std::optional<double> best;
    for (const auto& lambda : reciprocal_roots(alpha)) {
        if (std::abs(lambda.imag()) > 1e-8 * std::max(1.0, std::abs(lambda))) continue;
        const double r = polish_root(alpha, lambda.real());
        if (!(r > -1.0 && r < 0.0)) continue;
        if (!in_simplex(remove_root(alpha, r))) continue;
        if (!best || r > *best) best = r;
    }
    return best;
}

// ---------------------------------------------------------------------------

ConvexityProposal convexity_proposal_params(const AlphaTarget& target, const Vector& u_tilde, double phi)
{
    const auto derivs = target.derivatives(u_tilde, phi);
    const NegInverse inv = regularized_neg_inverse(derivs.hessian);
    ConvexityProposal out;
    out.sigma = inv.covariance;
    out.mu = u_tilde + inv.covariance * derivs.gradient;
    out.regularized = inv.regularized;
    return out;
}

ConvexityProposal convexity_proposal_params(const ModeCache& cache, const AlphaTarget& target, double phi)
{
    return convexity_proposal_params(target, cache.at(target.k()).mode, phi);
}

std::vector<int> convexity_neighbours(int k, int k_max)
{
    std::vector<int> out;
    for (int j = std::max(1, k - 2); j <= std::min(k_max, k + 2); ++j) {
        if (j != k) out.push_back(j);
    }
    return out;
}

namespace {

constexpr double kLogPhiLo = 0.0;  // phi = 1
constexpr double kLogPhiHi = 9.21; // phi ~ 1e4
constexpr int kPhiGrid = 61;

double log_sum_exp(const std::vector<double>& v)
{
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

} // namespace

PriorNormalizer::PriorNormalizer(AlphaPriorFamily family, int n_samples, std::uint64_t seed)
    : family_(std::move(family)), n_samples_(n_samples), seed_(seed)
{
    if (n_samples_ < 1) throw ConfigError("PriorNormalizer: need at least one sample");
}

const PriorNormalizer::Table& PriorNormalizer::table(int k)
{
    auto it = tables_.find(k);
    if (it != tables_.end()) return it->second;

    Table table;
    if (family_.kind == AlphaPriorKind::BetaType) {
        table.log_z = {0.0};
        return tables_[k] = std::move(table);
    }
    const AlphaPrior prior = family_.for_order(k);
    Rng rng = Rng::stream(seed_, static_cast<std::uint64_t>(k));
    std::vector<double> gauss(static_cast<std::size_t>(n_samples_));
    std::vector<double> boundary(gauss.size());
    const Vector& nu = std::visit([](const auto& p) -> const Vector& { return p.nu; }, prior.spec());
    for (std::size_t i = 0; i < gauss.size(); ++i) {
        const Vector a = sample_uniform_simplex(k, rng);
        const Vector d = a - nu;
        gauss[i] = -0.5 * d.dot(prior.upsilon_inv() * d);
        boundary[i] = a[0] * (1.0 - a.sum());
    }
    const double log_vol = -specfn::ln_gamma(k + 2.0);
    const double log_n = std::log(static_cast<double>(n_samples_));
    if (family_.kind == AlphaPriorKind::TruncGauss) {
        table.log_z = {log_vol + log_sum_exp(gauss) - log_n};
    } else {
        std::vector<double> terms(gauss.size());
        for (int g = 0; g < kPhiGrid; ++g) {
            const double phi = std::exp(kLogPhiLo + (kLogPhiHi - kLogPhiLo) * g / (kPhiGrid - 1));
            for (std::size_t i = 0; i < terms.size(); ++i) {
                terms[i] = gauss[i] - family_.kappa / (phi * phi * std::max(boundary[i], 1e-300));
            }
            table.log_z.push_back(log_vol + log_sum_exp(terms) - log_n);
        }
    }
    return tables_[k] = std::move(table);
}

double PriorNormalizer::log_normalizer(int k, double phi)
{
    const Table& t = table(k);
    if (t.log_z.size() == 1) return t.log_z[0];
    const double pos = (std::log(phi) - kLogPhiLo) / (kLogPhiHi - kLogPhiLo) * (kPhiGrid - 1);
    if (pos <= 0.0) return t.log_z.front();
    if (pos >= kPhiGrid - 1) return t.log_z.back();
    const auto i = static_cast<std::size_t>(pos);
    const double w = pos - static_cast<double>(i);
    return (1.0 - w) * t.log_z[i] + w * t.log_z[i + 1];
}

// ---------------------------------------------------------------------------

double RjStats::jump_acceptance() const
{
    return jump_attempts == 0 ? 0.0 : static_cast<double>(jump_accepts) / static_cast<double>(jump_attempts);
}

RjSampler::RjSampler(const SeriesData& data, PriorSpec priors, RjConfig config)
    : data_(data), priors_(std::move(priors)), config_(config),
      targets_(static_cast<std::size_t>(data.k_max()) + 1), normalizer_(priors_.alpha)
{
    config_.validate(data_.k_max());
}

const AlphaTarget& RjSampler::target(int k)
{
    if (k < 1 || k > data_.k_max()) throw DimensionError("RjSampler: order out of range");
    auto& slot = targets_[static_cast<std::size_t>(k)];
    if (!slot) slot.emplace(data_, k, priors_.alpha.for_order(k));
    return *slot;
}

SweepOutcome RjSampler::gibbs(RjState& state, Rng& rng)
{
    ChainState cs{state.k, state.alpha, state.phi};
    const SweepOutcome out = gibbs_sweep(cs, cache_, target(state.k), priors_.phi, config_.sigma_phi, rng);
    state.alpha = std::move(cs.alpha);
    state.phi = cs.phi;
    ++stats_.sweeps;
    stats_.alpha_accepts += out.alpha.accepted;
    stats_.phi_accepts += out.phi.accepted;
    return out;
}

MhOutcome RjSampler::stationarity_birth(RjState& state, Rng& rng)
{
    MhOutcome out;
    out.log_ratio = kNegInf;
    if (state.k >= data_.k_max()) {
        ++stats_.impossible_moves;
        return out;
    }
    ++stats_.birth_attempts;
    const RootProposalParams params = root_proposal_params(state.alpha, state.phi, data_, priors_.root);
    if (params.fallback) ++stats_.calibration_fallbacks;
    const TruncatedNormal q(params.mu, params.sigma2);
    const double r = q.sample(rng);
    const Vector extended = extend_by_root(state.alpha, r);
    if (!in_simplex(extended)) {
        ++stats_.inadmissible_roots;
        return out;
    }
    // the reverse death must remove exactly this root
    const std::optional<double> selected = removable_root(extended);
    if (!selected || std::abs(*selected - r) > 1e-9) {
        ++stats_.impossible_moves;
        return out;
    }
    out.log_ratio = birth_log_acceptance(state.alpha, r, state.phi, data_, priors_.root, params);
    if (accept(out.log_ratio, rng)) {
        state.k += 1;
        state.alpha = extended;
        out.accepted = true;
        ++stats_.birth_accepts;
    }
    return out;
}

MhOutcome RjSampler::stationarity_death(RjState& state, Rng& rng)
{
    MhOutcome out;
    out.log_ratio = kNegInf;
    if (state.k <= 1) {
        ++stats_.impossible_moves;
        return out;
    }
    const std::optional<double> r = removable_root(state.alpha);
    if (!r) {
        ++stats_.impossible_moves;
        return out;
    }
    ++stats_.death_attempts;
    const Vector reduced = remove_root(state.alpha, *r);
    const RootProposalParams params = root_proposal_params(reduced, state.phi, data_, priors_.root);
    if (params.fallback) ++stats_.calibration_fallbacks;
    out.log_ratio = -birth_log_acceptance(reduced, *r, state.phi, data_, priors_.root, params);
    if (std::isnan(out.log_ratio)) out.log_ratio = kNegInf;
    if (accept(out.log_ratio, rng)) {
        state.k -= 1;
        state.alpha = reduced;
        out.accepted = true;
        ++stats_.death_accepts;
    }
    return out;
}

MhOutcome RjSampler::stationarity_jump(RjState& state, Rng& rng)
{
    return rng.uniform() < 0.5 ? stationarity_birth(state, rng) : stationarity_death(state, rng);
}

ConvexityRatio RjSampler::convexity_ratio(const RjState& state, int k_new, const Vector& u,
                                          const ConvexityProposal& forward,
                                          const ConvexityProposal& reverse)
{
    const AlphaTarget& t_old = target(state.k);
    const AlphaTarget& t_new = target(k_new);
    ConvexityRatio c;
    c.log_lik_new = t_new.design().log_likelihood(u, state.phi);
    c.log_lik_old = t_old.design().log_likelihood(state.alpha, state.phi);
    c.log_prior_new = log_prior_alpha(t_new.prior(), u, state.phi) - normalizer_.log_normalizer(k_new, state.phi);
    c.log_prior_old = log_prior_alpha(t_old.prior(), state.alpha, state.phi)
                      - normalizer_.log_normalizer(state.k, state.phi);
    c.log_q_new = Gaussian(forward.mu, forward.sigma).log_density(u);
    c.log_q_old = Gaussian(reverse.mu, reverse.sigma).log_density(state.alpha);
    c.log_p_forward = -std::log(static_cast<double>(convexity_neighbours(state.k, data_.k_max()).size()));
    c.log_p_reverse = -std::log(static_cast<double>(convexity_neighbours(k_new, data_.k_max()).size()));
    c.total = c.log_lik_new + c.log_prior_new - c.log_lik_old - c.log_prior_old + c.log_p_reverse
              - c.log_p_forward + c.log_q_old - c.log_q_new;
    return c;
}

MhOutcome RjSampler::convexity_jump(RjState& state, Rng& rng)
{
    MhOutcome out;
    out.log_ratio = kNegInf;
    const std::vector<int> nb = convexity_neighbours(state.k, data_.k_max());
    if (nb.empty()) {
        ++stats_.impossible_moves;
        return out;
    }
    const int k_new = nb[std::min(nb.size() - 1, static_cast<std::size_t>(rng.uniform() * nb.size()))];
    ++stats_.jump_attempts;

    const AlphaTarget& t_new = target(k_new);
    newton_mode_step(cache_, t_new, state.phi);
    const ConvexityProposal forward = convexity_proposal_params(cache_, t_new, state.phi);
    const Vector u = Gaussian(forward.mu, forward.sigma).sample(rng);
    if (!in_simplex(u)) {
        ++stats_.outside_simplex;
        return out;
    }
    const AlphaTarget& t_old = target(state.k);
    ensure_mode(cache_, t_old, state.phi);
    const ConvexityProposal reverse = convexity_proposal_params(cache_, t_old, state.phi);
    out.log_ratio = convexity_ratio(state, k_new, u, forward, reverse).total;
    if (std::isnan(out.log_ratio)) out.log_ratio = kNegInf;
    if (accept(out.log_ratio, rng)) {
        state.k = k_new;
        state.alpha = u;
        out.accepted = true;
        ++stats_.jump_accepts;
    }
    return out;
}

MhOutcome RjSampler::jump(RjState& state, Rng& rng)
{
    if (config_.scheme == JumpScheme::Convexity) return convexity_jump(state, rng);
    const long long before = stats_.birth_accepts + stats_.death_accepts;
    const long long attempts_before = stats_.birth_attempts + stats_.death_attempts;
    MhOutcome out = stationarity_jump(state, rng);
    stats_.jump_attempts += stats_.birth_attempts + stats_.death_attempts - attempts_before;
    stats_.jump_accepts += stats_.birth_accepts + stats_.death_accepts - before;
    return out;
}

// ---------------------------------------------------------------------------

ModelPosterior ModelPosterior::from_visits(const std::vector<int>& ks, int k_max)
{
    if (ks.empty()) throw ConfigError("ModelPosterior: no visits");
    ModelPosterior mp;
    std::vector<long long> counts(static_cast<std::size_t>(k_max), 0);
    for (int k : ks) {
        if (k < 1 || k > k_max) throw DimensionError("ModelPosterior: order out of range");
        ++counts[static_cast<std::size_t>(k - 1)];
    }
    const double n = static_cast<double>(ks.size());
    mp.probs.resize(counts.size());
    long long best = -1;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        mp.probs[i] = static_cast<double>(counts[i]) / n;
        mp.mean += static_cast<double>(i + 1) * static_cast<double>(counts[i]) / n;
        if (counts[i] > best) {
            best = counts[i];
            mp.mode = static_cast<int>(i + 1);
        }
    }
    double var = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double d = static_cast<double>(i + 1) - mp.mean;
        var += d * d * static_cast<double>(counts[i]) / n;
    }
    mp.sd = std::sqrt(var);
    return mp;
}

ChainTrace RjTrace::at_order(int order) const
{
    ChainTrace out;
    out.k = order;
    out.burn_in = 0;
    std::vector<Eigen::Index> rows;
    for (std::size_t i = static_cast<std::size_t>(burn_in); i < k.size(); ++i) {
        if (k[i] == order) rows.push_back(static_cast<Eigen::Index>(i));
    }
    out.alpha.resize(static_cast<Eigen::Index>(rows.size()), order + 1);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.alpha.row(static_cast<Eigen::Index>(r)) = alpha.row(rows[r]).head(order + 1);
        out.phi.push_back(phi[static_cast<std::size_t>(rows[r])]);
    }
    return out;
}

RjResult run_rjmcmc(const SeriesData& data, const PriorSpec& priors, const RjConfig& config)
{
    RjSampler sampler(data, priors, config);
    Rng rng(config.seed);
    const int k_max = data.k_max();

    RjState state;
    {
        const ChainState init = initial_state(sampler.target(config.k_init), sampler.cache(), priors.phi);
        state.k = config.k_init;
        state.alpha = init.alpha;
        state.phi = init.phi;
    }

    RjResult result;
    RjTrace& trace = result.trace;
    trace.burn_in = config.burn_in;
    trace.alpha = Matrix::Constant(config.n_iter, k_max + 1, std::numeric_limits<double>::quiet_NaN());
    trace.k.reserve(static_cast<std::size_t>(config.n_iter));
    trace.phi.reserve(static_cast<std::size_t>(config.n_iter));
    trace.jump_accepted.reserve(static_cast<std::size_t>(config.n_iter));

    const long long clamps_before = clamp_events();
    for (int it = 0; it < config.n_iter; ++it) {
        sampler.gibbs(state, rng);
        const MhOutcome j = sampler.jump(state, rng);
        trace.k.push_back(state.k);
        trace.phi.push_back(state.phi);
        trace.alpha.row(it).head(state.k + 1) = state.alpha.transpose();
        trace.jump_accepted.push_back(j.accepted ? 1 : 0);
    }
    result.stats = sampler.stats();
    result.stats.clamp_events = clamp_events() - clamps_before;
    result.stats.newton_steps = sampler.cache().newton_steps();
    result.posterior = ModelPosterior::from_visits(
        std::vector<int>(trace.k.begin() + config.burn_in, trace.k.end()), k_max);
    return result;
}

} // namespace betaar
