#pragma once

/** @file
 * Full conditional of alpha given phi, its analytic derivatives, and the
 * damped Newton-Raphson recursion that tracks the conditional mode in every
 * dimension visited by a chain.
 *
 * Up to terms constant in alpha,
 *
 *   g(alpha) = sum_t [ -log B(eta_t phi, (1 - eta_t) phi) + A_t eta_t phi ] + log f(alpha),
 *
 * with gradient  sum_t (A_t - psi(eta_t phi) + psi((1 - eta_t) phi)) phi z_t + grad log f
 * and Hessian   -sum_t (psi'(eta_t phi) + psi'((1 - eta_t) phi)) phi^2 z_t z_t' + hess log f.
 */

#include "betaar/bar_model.hpp"
#include "betaar/mvn.hpp"
#include "betaar/priors.hpp"

#include <map>

namespace betaar {

/// Log full conditional of alpha for one order k on one data window.
class AlphaTarget {
public:
    AlphaTarget(const SeriesData& data, int k, AlphaPrior prior);

    int k() const { return design_.k(); }
    const Design& design() const { return design_; }
    const AlphaPrior& prior() const { return prior_; }

    /// -infinity outside the simplex.
    double log_density(const Vector& alpha, double phi) const;
    /// Likelihood part of the gradient / Hessian only.
    Vector likelihood_gradient(const Vector& alpha, double phi) const;
    Matrix likelihood_hessian(const Vector& alpha, double phi) const;

    Vector gradient(const Vector& alpha, double phi) const;
    Matrix hessian(const Vector& alpha, double phi) const;

    struct Derivatives {
        Vector gradient;
        Matrix hessian;
    };
    /// Gradient and Hessian sharing one pass over the data.
    Derivatives derivatives(const Vector& alpha, double phi) const;

private:
    Design design_;
    AlphaPrior prior_;
};

double log_posterior_alpha(const Vector& alpha, double phi, const SeriesData& data,
                           const AlphaPrior& prior);
Vector grad_alpha(const Vector& alpha, double phi, const SeriesData& data, const AlphaPrior& prior);
Matrix hess_alpha(const Vector& alpha, double phi, const SeriesData& data, const AlphaPrior& prior);

/// Per-dimension Newton state.  `mode` is the current estimate u^(j);
/// `hessian` and `sigma` were evaluated at the previous estimate u^(j-1),
/// which is what the mode-centred Gibbs proposal N(u^(j), Sigma^(j-1)) uses.
struct ModeEntry {
    Vector mode;
    Matrix hessian;
    Matrix sigma;
    int iterations = 0;
    bool regularized = false;
};

class ModeCache {
public:
    bool contains(int k) const { return entries_.count(k) != 0; }
    const ModeEntry& at(int k) const;
    ModeEntry& at(int k);
    /// Creates the entry at the prior centre with its Hessian evaluated there.
    ModeEntry& initialize(const AlphaTarget& target, double phi);
    /// Total number of Newton steps performed through this cache.
    long long newton_steps() const { return newton_steps_; }
    void count_step() { ++newton_steps_; }
    const std::map<int, ModeEntry>& entries() const { return entries_; }

private:
    std::map<int, ModeEntry> entries_;
    long long newton_steps_ = 0;
};

inline constexpr int kMaxHalvings = 30;
/// Simplex constraints with less slack than this are treated as active.
inline constexpr double kActiveSlack = 1e-6;
/// Newton steps taken when a dimension is visited for the first time.
inline constexpr int kWarmupSteps = 20;

/// Returns the entry for target.k(), creating it at the prior centre and
/// running kWarmupSteps Newton steps if it does not exist yet.
ModeEntry& ensure_mode(ModeCache& cache, const AlphaTarget& target, double phi);

/// One damped Newton step u <- u + step * d with d = Sigma grad g(u), projected
/// onto the face of any active simplex constraints.  `step` starts at 1 (or
/// just short of the first constraint it would cross) and is halved until g
/// does not decrease.
/// Calls ensure_mode first.  Returns the updated entry.
const ModeEntry& newton_mode_step(ModeCache& cache, const AlphaTarget& target, double phi);

} // namespace betaar
