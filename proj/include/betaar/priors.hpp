#pragma once

/** @file
 * Priors for BAR(k) parameters.
 *
 * Coefficients alpha in Delta_{k+1} get one of three families:
 *
 *  - TruncGauss:    N(nu, Upsilon) truncated to the simplex;
 *  - ModTruncGauss: the same times exp(-kappa / (phi^2 alpha_0 (1 - sum alpha))),
 *                   which pushes the density to zero at the simplex boundary;
 *  - BetaType:      the stick-breaking law alpha_j = v_j prod_{i<j} (1 - v_i)
 *                   with independent v_j ~ Be(nu_j, gamma_j).
 *
 * Gaussian log-densities are returned unnormalized (the truncation constant
 * depends on the dimension; see PriorNormalizer in rjmcmc.hpp for
 * cross-dimensional ratios).  The Beta-type density is fully normalized.
 */

#include "betaar/bar_model.hpp"
#include "betaar/rng.hpp"

#include <optional>
#include <string>
#include <variant>

namespace betaar {

enum class AlphaPriorKind { TruncGauss, ModTruncGauss, BetaType };

struct TruncGauss {
    Vector nu;
    Matrix upsilon;
};

struct ModTruncGauss {
    Vector nu;
    Matrix upsilon;
    double kappa = 10.0;
};

struct BetaType {
    Vector nu;
    Vector gamma;
};

/// A validated alpha prior for one dimension k + 1.
class AlphaPrior {
public:
    using Spec = std::variant<TruncGauss, ModTruncGauss, BetaType>;

    explicit AlphaPrior(Spec spec);

    AlphaPriorKind kind() const;
    int k() const { return static_cast<int>(dim()) - 1; }
    Eigen::Index dim() const;
    const Spec& spec() const { return spec_; }

    /// Inverse covariance for the Gaussian families (empty for BetaType).
    const Matrix& upsilon_inv() const { return upsilon_inv_; }
    /// Gaussian mean (Gaussian families) or stick-breaking mean (BetaType),
    /// projected into the simplex.  Starting point for mode searches.
    Vector center() const;

private:
    Spec spec_;
    Matrix upsilon_inv_;
};

struct PhiPrior {
    double c = 2.0;  ///< shape
    double d = 0.04; ///< rate
};

/// u ~ Be(a, b) with root r = 2u - 1.
struct RootPrior {
    double a = 2.0;
    double b = 2.0;
};

/// Dimension-free description of an alpha prior family; for_order() builds
/// the concrete prior for a given k using the default hyperparameter rules
/// nu = (k+2)^{-1} iota, Upsilon = s I (Gaussians) and nu = (k+1) iota,
/// gamma = (k+2) iota (Beta-type) unless overridden.
struct AlphaPriorFamily {
    AlphaPriorKind kind = AlphaPriorKind::ModTruncGauss;
    double upsilon_scale = 100.0;
    double kappa = 10.0;
    std::optional<double> nu_value;     ///< constant Gaussian mean override
    std::optional<double> beta_nu;      ///< constant Beta-type nu override
    std::optional<double> beta_gamma;   ///< constant Beta-type gamma override

    AlphaPrior for_order(int k) const;
};

struct PriorSpec {
    AlphaPriorFamily alpha;
    PhiPrior phi;
    RootPrior root;
};

const char* to_string(AlphaPriorKind kind);
AlphaPriorKind parse_alpha_prior_kind(const std::string& name);

/// Unnormalized log prior of alpha (phi only enters the modified Gaussian).
/// Returns -infinity outside the simplex.
double log_prior_alpha(const AlphaPrior& prior, const Vector& alpha, double phi);
Vector grad_log_prior_alpha(const AlphaPrior& prior, const Vector& alpha, double phi);
Matrix hess_log_prior_alpha(const AlphaPrior& prior, const Vector& alpha, double phi);

/// Exact draw from the prior.  Truncated Gaussians are sampled by rejection,
/// alternating a Gaussian envelope with a uniform-on-simplex envelope; throws
/// NumericalError after `max_attempts` rejected proposals.
Vector sample_alpha_prior(const AlphaPrior& prior, double phi, Rng& rng,
                          int max_attempts = 100000);

/// Uniform draw on Delta_{k+1}.
Vector sample_uniform_simplex(int k, Rng& rng);

/// alpha_j = v_j prod_{i<j} (1 - v_i).
Vector stick_breaking(const Vector& v);
/// v_j = alpha_j / A_j with A_j = 1 - sum_{i<j} alpha_i.
Vector inverse_stick_breaking(const Vector& alpha);

/// (c - 1) log phi - d phi; -infinity for phi <= 0.
double log_prior_phi(const PhiPrior& prior, double phi);

/// (a - 1) log(1 + r) + (b - 1) log(1 - r); -infinity outside (-1, 1).
double log_prior_root(const RootPrior& prior, double r);
double d_log_prior_root(const RootPrior& prior, double r);
double d2_log_prior_root(const RootPrior& prior, double r);
/// Normalized density of r = 2u - 1, u ~ Be(a, b).
double log_density_root(const RootPrior& prior, double r);

} // namespace betaar
