#include "betaar/bar_model.hpp"

#include "betaar/errors.hpp"
#include "betaar/specfn.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <string>

namespace betaar {

namespace {

thread_local long long g_clamp_events = 0;

double clamp_eta(double eta)
{
    if (eta < kEtaClamp) {
        ++g_clamp_events;
        return kEtaClamp;
    }
    if (eta > 1.0 - kEtaClamp) {
        ++g_clamp_events;
        return 1.0 - kEtaClamp;
    }
    return eta;
}

void require_open_unit(double x, const char* what)
{
    if (!(x > 0.0 && x < 1.0)) {
        std::ostringstream os;
        os << what << ": value " << x << " outside (0,1)";
        throw DomainError(os.str());
    }
}

} // namespace

bool in_simplex(const Vector& alpha, double margin)
{
    if (alpha.size() < 1) return false;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
        if (!(alpha[i] > margin)) return false;
        sum += alpha[i];
    }
    return sum < 1.0 - margin;
}

long long clamp_events() { return g_clamp_events; }
void reset_clamp_events() { g_clamp_events = 0; }

BarParams::BarParams(Vector alpha_, double phi_)
    : k(static_cast<int>(alpha_.size()) - 1), alpha(std::move(alpha_)), phi(phi_)
{
    validate();
}

void BarParams::validate() const
{
    if (k < 1 || alpha.size() != k + 1) {
        throw DimensionError("BarParams: alpha must have k + 1 >= 2 entries");
    }
    if (!in_simplex(alpha)) {
        throw DomainError("BarParams: alpha outside the simplex");
    }
    if (!(phi > 0.0) || std::isinf(phi)) {
        throw DomainError("BarParams: phi must be positive");
    }
}

SeriesData::SeriesData(std::vector<double> values, int k_max)
    : values_(std::move(values)), k_max_(k_max)
{
    if (k_max_ < 1) {
        throw ConfigError("SeriesData: k_max must be at least 1");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!(values_[i] > 0.0 && values_[i] < 1.0)) {
            std::ostringstream os;
            os << "SeriesData: observation " << i << " = " << values_[i] << " outside (0,1)";
            throw DomainError(os.str());
        }
    }
}

SeriesData SeriesData::drop_front(int count, int k_max) const
{
    if (count < 0 || count > size()) {
        throw DimensionError("SeriesData::drop_front: bad count");
    }
    return SeriesData(std::vector<double>(values_.begin() + count, values_.end()), k_max);
}

SeriesData SeriesData::head(int count) const
{
    if (count < 0 || count > size()) {
        throw DimensionError("SeriesData::head: bad count");
    }
    return SeriesData(std::vector<double>(values_.begin(), values_.begin() + count), k_max_);
}

Design::Design(const SeriesData& data, int k) : k_(k)
{
    if (k < 1 || k > data.k_max()) {
        throw DimensionError("Design: order must satisfy 1 <= k <= k_max");
    }
    if (data.n_terms() < 1) {
        throw DimensionError("Design: series shorter than k_max + 1");
    }
    const auto& v = data.values();
    const int m = data.n_terms();
    const int first = data.first();
    z_.resize(m, k + 1);
    x_.resize(m);
    log_x_.resize(m);
    log_1mx_.resize(m);
    log_odds_.resize(m);
    for (int row = 0; row < m; ++row) {
        const int t = first + row;
        z_(row, 0) = 1.0;
        for (int j = 1; j <= k; ++j) z_(row, j) = v[t - j];
        x_[row] = v[t];
        log_x_[row] = std::log(v[t]);
        log_1mx_[row] = std::log1p(-v[t]);
        log_odds_[row] = log_x_[row] - log_1mx_[row];
    }
}

Vector Design::eta(const Vector& alpha) const
{
    if (alpha.size() != k_ + 1) {
        throw DimensionError("Design::eta: alpha has wrong length");
    }
    Vector eta = z_ * alpha;
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = clamp_eta(eta[i]);
    return eta;
}

double Design::log_likelihood(const Vector& alpha, double phi) const
{
    const Vector eta = this->eta(alpha);
    double sum = 0.0;
    for (Eigen::Index t = 0; t < eta.size(); ++t) {
        const double a = eta[t] * phi;
        const double b = (1.0 - eta[t]) * phi;
        sum += -specfn::ln_beta(a, b) + (a - 1.0) * log_x_[t] + (b - 1.0) * log_1mx_[t];
    }
    return sum;
}

double conditional_mean(const Vector& alpha, std::span<const double> lags)
{
    if (static_cast<std::size_t>(alpha.size()) != lags.size() + 1) {
        throw DimensionError("conditional_mean: alpha must have one more entry than lags");
    }
    double eta = alpha[0];
    for (std::size_t j = 0; j < lags.size(); ++j) eta += alpha[static_cast<Eigen::Index>(j) + 1] * lags[j];
    return eta;
}

double transition_logpdf(double x, double eta, double phi)
{
    require_open_unit(x, "transition_logpdf");
    const double a = eta * phi;
    const double b = (1.0 - eta) * phi;
    if (!(a > 0.0) || !(b > 0.0)) {
        throw DomainError("transition_logpdf: Beta shapes must be positive");
    }
    return -specfn::ln_beta(a, b) + (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
}

double log_likelihood(const Vector& alpha, double phi, const SeriesData& data)
{
    const int k = static_cast<int>(alpha.size()) - 1;
    return Design(data, k).log_likelihood(alpha, phi);
}

double log_likelihood(const BarParams& params, const SeriesData& data)
{
    return log_likelihood(params.alpha, params.phi, data);
}

SeriesData simulate(const BarParams& params, int n, std::span<const double> init, Rng& rng)
{
    params.validate();
    if (n < 1) throw ConfigError("simulate: n must be positive");
    const int k_max = static_cast<int>(init.size());
    if (k_max < params.k) {
        throw DimensionError("simulate: need at least k initial values");
    }
    for (double v : init) require_open_unit(v, "simulate: initial value");

    std::vector<double> values(init.begin(), init.end());
    values.reserve(init.size() + static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const std::size_t t = values.size();
        double eta = params.alpha[0];
        for (int j = 1; j <= params.k; ++j) eta += params.alpha[j] * values[t - j];
        values.push_back(rng.beta(eta * params.phi, (1.0 - eta) * params.phi));
    }
    return SeriesData(std::move(values), std::max(k_max, 1));
}

SeriesData simulate(const BarParams& params, int n, std::span<const double> init,
                    std::uint64_t seed)
{
    Rng rng(seed);
    return simulate(params, n, init, rng);
}

double stationary_mean(const Vector& alpha)
{
    return alpha[0] / (1.0 - alpha.tail(alpha.size() - 1).sum());
}

Vector extend_by_root(const Vector& alpha, double r)
{
    const Eigen::Index k = alpha.size() - 1;
    Vector out(k + 2);
    out[0] = alpha[0];
    out[1] = alpha[1] + r;
    for (Eigen::Index j = 2; j <= k + 1; ++j) {
        const double aj = j <= k ? alpha[j] : 0.0;
        out[j] = aj - r * alpha[j - 1];
    }
    return out;
}

Vector remove_root(const Vector& extended, double r)
{
    const Eigen::Index k = extended.size() - 2;
    if (k < 1) throw DimensionError("remove_root: need at least order 2");
    Vector out(k + 1);
    out[0] = extended[0];
    out[1] = extended[1] - r;
    for (Eigen::Index j = 2; j <= k; ++j) out[j] = extended[j] + r * out[j - 1];
    return out;
}

bool check_extension_admissible(const Vector& alpha, double r)
{
    return in_simplex(extend_by_root(alpha, r));
}

std::vector<std::complex<double>> reciprocal_roots(const Vector& alpha)
{
    // lambda^k - a_1 lambda^{k-1} - ... - a_k = 0, companion matrix form
    const Eigen::Index k = alpha.size() - 1;
    if (k < 1) return {};
    Matrix companion = Matrix::Zero(k, k);
    for (Eigen::Index j = 0; j < k; ++j) companion(0, j) = alpha[j + 1];
    for (Eigen::Index i = 1; i < k; ++i) companion(i, i - 1) = 1.0;
    Eigen::EigenSolver<Matrix> solver(companion, false);
    std::vector<std::complex<double>> roots;
    roots.reserve(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) roots.push_back(solver.eigenvalues()[i]);
    return roots;
}

std::vector<double> innovation_sequence(const Vector& alpha, const SeriesData& data, int from)
{
    const int k = static_cast<int>(alpha.size()) - 1;
    if (k < 1 || k > data.k_max()) {
        throw DimensionError("innovation_sequence: order must satisfy 1 <= k <= k_max");
    }
    if (from < k) {
        throw DimensionError("innovation_sequence: not enough lags before the first index");
    }
    const auto& v = data.values();
    std::vector<double> xi;
    xi.reserve(v.size() - static_cast<std::size_t>(from));
    for (int t = from; t < data.size(); ++t) {
        double eta = alpha[0];
        for (int j = 1; j <= k; ++j) eta += alpha[j] * v[t - j];
        xi.push_back(v[t] - eta);
    }
    return xi;
}

std::vector<double> innovation_sequence(const Vector& alpha, const SeriesData& data)
{
    return innovation_sequence(alpha, data, data.first());
}

double log_odds(double x)
{
    require_open_unit(x, "log_odds");
    return std::log(x) - std::log1p(-x);
}

} // namespace betaar
