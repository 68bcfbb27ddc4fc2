#include "betaar/posterior.hpp"

#include "betaar/errors.hpp"
#include "betaar/specfn.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace betaar {

AlphaTarget::AlphaTarget(const SeriesData& data, int k, AlphaPrior prior)
    : design_(data, k), prior_(std::move(prior))
{
    if (prior_.k() != k) {
        throw DimensionError("AlphaTarget: prior dimension does not match the order");
    }
}

double AlphaTarget::log_density(const Vector& alpha, double phi) const
{
    if (alpha.size() != k() + 1) {
        throw DimensionError("AlphaTarget::log_density: alpha has wrong length");
    }
    if (!in_simplex(alpha)) return -std::numeric_limits<double>::infinity();
    const Vector eta = design_.eta(alpha);
    const Vector& odds = design_.log_odds();
    double sum = 0.0;
    for (Eigen::Index t = 0; t < eta.size(); ++t) {
        sum += -specfn::ln_beta(eta[t] * phi, (1.0 - eta[t]) * phi) + odds[t] * eta[t] * phi;
    }
    return sum + log_prior_alpha(prior_, alpha, phi);
}

Vector AlphaTarget::likelihood_gradient(const Vector& alpha, double phi) const
{
    const Vector eta = design_.eta(alpha);
    const Vector& odds = design_.log_odds();
    Vector w(eta.size());
    for (Eigen::Index t = 0; t < eta.size(); ++t) {
        w[t] = (odds[t] - specfn::digamma(eta[t] * phi) + specfn::digamma((1.0 - eta[t]) * phi)) * phi;
    }
    return design_.z().transpose() * w;
}

Matrix AlphaTarget::likelihood_hessian(const Vector& alpha, double phi) const
{
    const Vector eta = design_.eta(alpha);
    Vector w(eta.size());
    for (Eigen::Index t = 0; t < eta.size(); ++t) {
        w[t] = (specfn::trigamma(eta[t] * phi) + specfn::trigamma((1.0 - eta[t]) * phi)) * phi * phi;
    }
    const Matrix& z = design_.z();
    return -(z.transpose() * w.asDiagonal() * z);
}

Vector AlphaTarget::gradient(const Vector& alpha, double phi) const
{
    return likelihood_gradient(alpha, phi) + grad_log_prior_alpha(prior_, alpha, phi);
}

Matrix AlphaTarget::hessian(const Vector& alpha, double phi) const
{
    return likelihood_hessian(alpha, phi) + hess_log_prior_alpha(prior_, alpha, phi);
}

AlphaTarget::Derivatives AlphaTarget::derivatives(const Vector& alpha, double phi) const
{
    const Vector eta = design_.eta(alpha);
    const Vector& odds = design_.log_odds();
    Vector wg(eta.size()), wh(eta.size());
    for (Eigen::Index t = 0; t < eta.size(); ++t) {
        const double a = eta[t] * phi;
        const double b = (1.0 - eta[t]) * phi;
        wg[t] = (odds[t] - specfn::digamma(a) + specfn::digamma(b)) * phi;
        wh[t] = (specfn::trigamma(a) + specfn::trigamma(b)) * phi * phi;
    }
    const Matrix& z = design_.z();
    Derivatives out;
    out.gradient = z.transpose() * wg + grad_log_prior_alpha(prior_, alpha, phi);
    out.hessian = -(z.transpose() * wh.asDiagonal() * z) + hess_log_prior_alpha(prior_, alpha, phi);
    return out;
}

double log_posterior_alpha(const Vector& alpha, double phi, const SeriesData& data,
                           const AlphaPrior& prior)
{
    return AlphaTarget(data, static_cast<int>(alpha.size()) - 1, prior).log_density(alpha, phi);
}

Vector grad_alpha(const Vector& alpha, double phi, const SeriesData& data, const AlphaPrior& prior)
{
    return AlphaTarget(data, static_cast<int>(alpha.size()) - 1, prior).gradient(alpha, phi);
}

Matrix hess_alpha(const Vector& alpha, double phi, const SeriesData& data, const AlphaPrior& prior)
{
    return AlphaTarget(data, static_cast<int>(alpha.size()) - 1, prior).hessian(alpha, phi);
}

const ModeEntry& ModeCache::at(int k) const
{
    auto it = entries_.find(k);
    if (it == entries_.end()) throw ConfigError("ModeCache: no entry for this order");
    return it->second;
}

ModeEntry& ModeCache::at(int k)
{
    auto it = entries_.find(k);
    if (it == entries_.end()) throw ConfigError("ModeCache: no entry for this order");
    return it->second;
}

ModeEntry& ModeCache::initialize(const AlphaTarget& target, double phi)
{
    ModeEntry entry;
    entry.mode = target.prior().center();
    entry.hessian = target.hessian(entry.mode, phi);
    const NegInverse inv = regularized_neg_inverse(entry.hessian);
    entry.sigma = inv.covariance;
    entry.regularized = inv.regularized;
    return entries_[target.k()] = std::move(entry);
}

namespace {

// Constraint j of the simplex as slack(alpha) = normal' alpha + offset >= 0:
// alpha_j >= 0 for j <= k and 1 - sum(alpha) >= 0 for j = k + 1.
Vector constraint_normal(Eigen::Index dim, Eigen::Index j)
{
    return j < dim ? Vector::Unit(dim, j) : Vector(-Vector::Ones(dim));
}

double constraint_slack(const Vector& alpha, Eigen::Index j)
{
    return j < alpha.size() ? alpha[j] : 1.0 - alpha.sum();
}

// Newton direction Sigma grad g restricted to the face where the constraints
// in `active` hold with equality.  Constraints whose multipliers show that g
// increases towards the interior are released one at a time.
Vector projected_direction(const Vector& alpha, const Vector& grad, const Matrix& sigma)
{
    const Eigen::Index dim = alpha.size();
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j <= dim; ++j) {
        if (constraint_slack(alpha, j) < kActiveSlack) active.push_back(j);
    }
    const Vector d0 = sigma * grad;
    while (!active.empty()) {
        Matrix A(dim, static_cast<Eigen::Index>(active.size()));
        for (std::size_t c = 0; c < active.size(); ++c) {
            A.col(static_cast<Eigen::Index>(c)) = constraint_normal(dim, active[c]);
        }
        const Matrix SA = sigma * A;
        const Vector mu = -(A.transpose() * SA).ldlt().solve(A.transpose() * d0);
        Eigen::Index worst = 0;
        if (mu.minCoeff(&worst) < 0.0) {
            active.erase(active.begin() + worst);
            continue;
        }
        return d0 + SA * mu;
    }
    return d0;
}

// Largest t with alpha + t * d still in the closed simplex.
double max_feasible_step(const Vector& alpha, const Vector& d)
{
    double t = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j <= alpha.size(); ++j) {
        const double rate = constraint_normal(alpha.size(), j).dot(d);
        const double slack = constraint_slack(alpha, j);
        if (rate < 0.0 && slack >= kActiveSlack) t = std::min(t, slack / -rate);
    }
    return t;
}

void damped_newton_step(ModeEntry& entry, const AlphaTarget& target, double phi)
{
    const Vector start = entry.mode;
    const auto derivs = target.derivatives(start, phi);
    const NegInverse inv = regularized_neg_inverse(derivs.hessian);
    const Vector direction = projected_direction(start, derivs.gradient, inv.covariance);
    const double base = target.log_density(start, phi);
    // steps whose gain is below rounding noise of g are still taken
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(base));

    double step = std::min(1.0, 0.999 * max_feasible_step(start, direction));
    for (int halving = 0; halving <= kMaxHalvings; ++halving, step *= 0.5) {
        const Vector candidate = start + step * direction;
        if (!in_simplex(candidate)) continue;
        if (target.log_density(candidate, phi) >= base - slack) {
            entry.mode = candidate;
            break;
        }
    }
    entry.hessian = derivs.hessian;
    entry.sigma = inv.covariance;
    entry.regularized = inv.regularized;
    ++entry.iterations;
}

} // namespace

ModeEntry& ensure_mode(ModeCache& cache, const AlphaTarget& target, double phi)
{
    if (cache.contains(target.k())) return cache.at(target.k());
    ModeEntry& entry = cache.initialize(target, phi);
    for (int i = 0; i < kWarmupSteps; ++i) {
        cache.count_step();
        damped_newton_step(entry, target, phi);
    }
    return entry;
}

const ModeEntry& newton_mode_step(ModeCache& cache, const AlphaTarget& target, double phi)
{
    ModeEntry& entry = ensure_mode(cache, target, phi);
    cache.count_step();
    damped_newton_step(entry, target, phi);
    return entry;
}

} // namespace betaar
