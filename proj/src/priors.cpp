#include "betaar/priors.hpp"

#include "betaar/errors.hpp"
#include "betaar/specfn.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

namespace betaar {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Matrix checked_inverse(const Matrix& upsilon)
{
    if (upsilon.rows() != upsilon.cols()) {
        throw DimensionError("AlphaPrior: Upsilon must be square");
    }
    if ((upsilon - upsilon.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + upsilon.cwiseAbs().maxCoeff())) {
        throw DomainError("AlphaPrior: Upsilon must be symmetric");
    }
    Eigen::LLT<Matrix> llt(upsilon);
    if (llt.info() != Eigen::Success) {
        throw DomainError("AlphaPrior: Upsilon must be positive definite");
    }
    return llt.solve(Matrix::Identity(upsilon.rows(), upsilon.cols()));
}

Vector project_interior(Vector v)
{
    constexpr double floor = 1e-4;
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = std::max(v[i], floor);
    const double sum = v.sum();
    if (sum > 1.0 - floor) v *= (1.0 - 10.0 * floor) / sum;
    return v;
}

// alpha_0 (1 - sum alpha), the product pushed to zero at the boundary
double boundary_product(const Vector& alpha) { return alpha[0] * (1.0 - alpha.sum()); }

double quad_form(const Vector& diff, const Matrix& inv) { return diff.dot(inv * diff); }

// A_i = 1 - sum_{j<i} alpha_j, i = 0..k+1
Vector partial_remainders(const Vector& alpha)
{
    const Eigen::Index n = alpha.size();
    Vector rem(n + 1);
    rem[0] = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) rem[i + 1] = rem[i] - alpha[i];
    return rem;
}

void require_interior(const Vector& alpha, const AlphaPrior& prior, const char* fn)
{
    if (alpha.size() != prior.dim()) {
        throw DimensionError(std::string(fn) + ": alpha has wrong length");
    }
    if (!in_simplex(alpha)) {
        throw DomainError(std::string(fn) + ": alpha must lie strictly inside the simplex");
    }
}

} // namespace

AlphaPrior::AlphaPrior(Spec spec) : spec_(std::move(spec))
{
    std::visit(Overloaded{
                   [&](const TruncGauss& p) {
                       if (p.nu.size() < 2 || p.upsilon.rows() != p.nu.size()) {
                           throw DimensionError("TruncGauss: nu/Upsilon size mismatch");
                       }
                       upsilon_inv_ = checked_inverse(p.upsilon);
                   },
                   [&](const ModTruncGauss& p) {
                       if (p.nu.size() < 2 || p.upsilon.rows() != p.nu.size()) {
                           throw DimensionError("ModTruncGauss: nu/Upsilon size mismatch");
                       }
                       if (!(p.kappa > 0.0)) throw DomainError("ModTruncGauss: kappa must be positive");
                       upsilon_inv_ = checked_inverse(p.upsilon);
                   },
                   [&](const BetaType& p) {
                       if (p.nu.size() < 2 || p.gamma.size() != p.nu.size()) {
                           throw DimensionError("BetaType: nu/gamma size mismatch");
                       }
                       if ((p.nu.array() <= 0.0).any() || (p.gamma.array() <= 0.0).any()) {
                           throw DomainError("BetaType: shapes must be positive");
                       }
                   },
               },
               spec_);
}

AlphaPriorKind AlphaPrior::kind() const
{
    return std::visit(Overloaded{
                          [](const TruncGauss&) { return AlphaPriorKind::TruncGauss; },
                          [](const ModTruncGauss&) { return AlphaPriorKind::ModTruncGauss; },
                          [](const BetaType&) { return AlphaPriorKind::BetaType; },
                      },
                      spec_);
}

Eigen::Index AlphaPrior::dim() const
{
    return std::visit([](const auto& p) { return p.nu.size(); }, spec_);
}

Vector AlphaPrior::center() const
{
    return std::visit(Overloaded{
                          [](const TruncGauss& p) { return project_interior(p.nu); },
                          [](const ModTruncGauss& p) { return project_interior(p.nu); },
                          [](const BetaType& p) {
                              const Vector mean_v = p.nu.cwiseQuotient(p.nu + p.gamma);
                              return project_interior(stick_breaking(mean_v));
                          },
                      },
                      spec_);
}

AlphaPrior AlphaPriorFamily::for_order(int k) const
{
    if (k < 1) throw ConfigError("AlphaPriorFamily: order must be at least 1");
    const Eigen::Index n = k + 1;
    switch (kind) {
    case AlphaPriorKind::TruncGauss:
        return AlphaPrior(TruncGauss{Vector::Constant(n, nu_value.value_or(1.0 / (k + 2))),
                                     upsilon_scale * Matrix::Identity(n, n)});
    case AlphaPriorKind::ModTruncGauss:
        return AlphaPrior(ModTruncGauss{Vector::Constant(n, nu_value.value_or(1.0 / (k + 2))),
                                        upsilon_scale * Matrix::Identity(n, n), kappa});
    case AlphaPriorKind::BetaType:
        return AlphaPrior(BetaType{Vector::Constant(n, beta_nu.value_or(k + 1.0)),
                                   Vector::Constant(n, beta_gamma.value_or(k + 2.0))});
    }
    throw ConfigError("AlphaPriorFamily: unknown kind");
}

const char* to_string(AlphaPriorKind kind)
{
    switch (kind) {
    case AlphaPriorKind::TruncGauss: return "truncgauss";
    case AlphaPriorKind::ModTruncGauss: return "modtruncgauss";
    case AlphaPriorKind::BetaType: return "betatype";
    }
    return "unknown";
}

AlphaPriorKind parse_alpha_prior_kind(const std::string& name)
{
    if (name == "truncgauss") return AlphaPriorKind::TruncGauss;
    if (name == "modtruncgauss") return AlphaPriorKind::ModTruncGauss;
    if (name == "betatype") return AlphaPriorKind::BetaType;
    throw ConfigError("unknown prior family '" + name + "' (truncgauss | modtruncgauss | betatype)");
}

double log_prior_alpha(const AlphaPrior& prior, const Vector& alpha, double phi)
{
    if (alpha.size() != prior.dim()) {
        throw DimensionError("log_prior_alpha: alpha has wrong length");
    }
    if (!in_simplex(alpha)) return kNegInf;
    return std::visit(
        Overloaded{
            [&](const TruncGauss& p) { return -0.5 * quad_form(alpha - p.nu, prior.upsilon_inv()); },
            [&](const ModTruncGauss& p) {
                return -0.5 * quad_form(alpha - p.nu, prior.upsilon_inv())
                       - p.kappa / (phi * phi * boundary_product(alpha));
            },
            [&](const BetaType& p) {
                const Vector rem = partial_remainders(alpha);
                double lp = 0.0;
                for (Eigen::Index i = 0; i < alpha.size(); ++i) {
                    lp += -specfn::ln_beta(p.nu[i], p.gamma[i])
                          + (p.nu[i] - 1.0) * std::log(alpha[i] / rem[i])
                          + (p.gamma[i] - 1.0) * std::log(rem[i + 1] / rem[i]);
                    if (i >= 1) lp -= std::log(rem[i]);
                }
                return lp;
            },
        },
        prior.spec());
}

Vector grad_log_prior_alpha(const AlphaPrior& prior, const Vector& alpha, double phi)
{
    require_interior(alpha, prior, "grad_log_prior_alpha");
    return std::visit(
        Overloaded{
            [&](const TruncGauss& p) -> Vector { return -prior.upsilon_inv() * (alpha - p.nu); },
            [&](const ModTruncGauss& p) -> Vector {
                const double h = boundary_product(alpha);
                // d = e_1 - D alpha with D = iota e_1' + e_1 iota'
                Vector d = Vector::Constant(alpha.size(), -alpha[0]);
                d[0] += 1.0 - alpha.sum();
                return -prior.upsilon_inv() * (alpha - p.nu) + p.kappa / (phi * phi * h * h) * d;
            },
            [&](const BetaType& p) -> Vector {
                const Eigen::Index n = alpha.size();
                const Vector rem = partial_remainders(alpha);
                Vector g(n);
                for (Eigen::Index h = 0; h < n; ++h) {
                    double v = (p.nu[h] - 1.0) / alpha[h];
                    for (Eigen::Index i = h + 1; i < n; ++i) v += (p.nu[i] + p.gamma[i] - 1.0) / rem[i];
                    for (Eigen::Index i = h; i < n; ++i) v -= (p.gamma[i] - 1.0) / rem[i + 1];
                    g[h] = v;
                }
                return g;
            },
        },
        prior.spec());
}

Matrix hess_log_prior_alpha(const AlphaPrior& prior, const Vector& alpha, double phi)
{
    require_interior(alpha, prior, "hess_log_prior_alpha");
    return std::visit(
        Overloaded{
            [&](const TruncGauss&) -> Matrix { return -prior.upsilon_inv(); },
            [&](const ModTruncGauss& p) -> Matrix {
                const Eigen::Index n = alpha.size();
                const double h = boundary_product(alpha);
                const double scale = p.kappa / (phi * phi);
                Vector d = Vector::Constant(n, -alpha[0]);
                d[0] += 1.0 - alpha.sum();
                Matrix big_d = Matrix::Zero(n, n);
                big_d.row(0).setOnes();
                big_d.col(0).array() += 1.0;
                // the Hessian of h is -D
                return -prior.upsilon_inv() - scale / (h * h) * big_d
                       - 2.0 * scale / (h * h * h) * d * d.transpose();
            },
            [&](const BetaType& p) -> Matrix {
                const Eigen::Index n = alpha.size();
                const Vector rem = partial_remainders(alpha);
                Matrix hess(n, n);
                for (Eigen::Index h = 0; h < n; ++h) {
                    for (Eigen::Index l = h; l < n; ++l) {
                        double v = h == l ? (1.0 - p.nu[h]) / (alpha[h] * alpha[h]) : 0.0;
                        for (Eigen::Index i = l + 1; i < n; ++i) {
                            v += (p.nu[i] + p.gamma[i] - 1.0) / (rem[i] * rem[i]);
                        }
                        for (Eigen::Index i = l; i < n; ++i) {
                            v -= (p.gamma[i] - 1.0) / (rem[i + 1] * rem[i + 1]);
                        }
                        hess(h, l) = v;
                        hess(l, h) = v;
                    }
                }
                return hess;
            },
        },
        prior.spec());
}

Vector sample_uniform_simplex(int k, Rng& rng)
{
    Vector e(k + 2);
    for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = -std::log(rng.uniform());
    return e.head(k + 1) / e.sum();
}

Vector sample_alpha_prior(const AlphaPrior& prior, double phi, Rng& rng, int max_attempts)
{
    if (const auto* p = std::get_if<BetaType>(&prior.spec())) {
        for (int attempt = 0; attempt < max_attempts; ++attempt) {
            Vector v(p->nu.size());
            for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.beta(p->nu[i], p->gamma[i]);
            Vector alpha = stick_breaking(v);
            if (in_simplex(alpha)) return alpha;
        }
        throw NumericalError("sample_alpha_prior: rejection budget exhausted");
    }

    const Vector& nu = std::visit([](const auto& q) -> const Vector& { return q.nu; }, prior.spec());
    const Matrix& upsilon = std::holds_alternative<TruncGauss>(prior.spec())
                                ? std::get<TruncGauss>(prior.spec()).upsilon
                                : std::get<ModTruncGauss>(prior.spec()).upsilon;
    const double kappa = std::holds_alternative<ModTruncGauss>(prior.spec())
                             ? std::get<ModTruncGauss>(prior.spec()).kappa
                             : 0.0;
    const Matrix chol = Eigen::LLT<Matrix>(upsilon).matrixL();
    const int k = prior.k();

    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        Vector alpha;
        double log_accept = 0.0;
        if (attempt % 2 == 0) {
            // Gaussian envelope: exact once the draw lands in the simplex
            Vector z(nu.size());
            for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
            alpha = nu + chol * z;
            if (!in_simplex(alpha)) continue;
        } else {
            // uniform envelope: the Gaussian kernel is bounded by one
            alpha = sample_uniform_simplex(k, rng);
            if (!in_simplex(alpha)) continue;
            log_accept -= 0.5 * quad_form(alpha - nu, prior.upsilon_inv());
        }
        if (kappa > 0.0) log_accept -= kappa / (phi * phi * boundary_product(alpha));
        if (log_accept >= 0.0 || std::log(rng.uniform()) < log_accept) return alpha;
    }
    throw NumericalError("sample_alpha_prior: rejection budget exhausted");
}

Vector stick_breaking(const Vector& v)
{
    Vector alpha(v.size());
    double remaining = 1.0;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        alpha[j] = v[j] * remaining;
        remaining *= 1.0 - v[j];
    }
    return alpha;
}

Vector inverse_stick_breaking(const Vector& alpha)
{
    Vector v(alpha.size());
    double remaining = 1.0;
    for (Eigen::Index j = 0; j < alpha.size(); ++j) {
        v[j] = alpha[j] / remaining;
        remaining -= alpha[j];
    }
    return v;
}

double log_prior_phi(const PhiPrior& prior, double phi)
{
    if (!(phi > 0.0)) return kNegInf;
    return (prior.c - 1.0) * std::log(phi) - prior.d * phi;
}

double log_prior_root(const RootPrior& prior, double r)
{
    if (!(r > -1.0 && r < 1.0)) return kNegInf;
    return (prior.a - 1.0) * std::log1p(r) + (prior.b - 1.0) * std::log1p(-r);
}

double d_log_prior_root(const RootPrior& prior, double r)
{
    return (prior.a - 1.0) / (1.0 + r) - (prior.b - 1.0) / (1.0 - r);
}

double d2_log_prior_root(const RootPrior& prior, double r)
{
    return -(prior.a - 1.0) / ((1.0 + r) * (1.0 + r)) - (prior.b - 1.0) / ((1.0 - r) * (1.0 - r));
}

double log_density_root(const RootPrior& prior, double r)
{
    if (!(r > -1.0 && r < 1.0)) return kNegInf;
    return (prior.a - 1.0) * std::log((1.0 + r) / 2.0) + (prior.b - 1.0) * std::log((1.0 - r) / 2.0)
           - specfn::ln_beta(prior.a, prior.b) - std::log(2.0);
}

} // namespace betaar
