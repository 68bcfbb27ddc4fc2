#include "betaar/diagnostics.hpp"

#include "betaar/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace betaar {

EssResult ess_detail(std::span<const double> chain)
{
    const std::size_t n = chain.size();
    if (n < 10) throw ConfigError("ess: chain must have at least 10 draws");
    const double mean = std::accumulate(chain.begin(), chain.end(), 0.0) / static_cast<double>(n);
    std::vector<double> c(chain.begin(), chain.end());
    for (double& v : c) v -= mean;
    const double c0 = std::inner_product(c.begin(), c.end(), c.begin(), 0.0) / static_cast<double>(n);
    EssResult out;
    if (!(c0 > 1e-300 * (1.0 + mean * mean))) {
        out.degenerate = true;
        return out;
    }
    auto rho = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) s += c[i] * c[i + lag];
        return s / static_cast<double>(n) / c0;
    };
    // pairs Gamma_m = rho_{2m} + rho_{2m+1}, stop at the first non-positive pair
    double sum = 0.0; // sum of rho_t for t >= 1
    std::size_t lag = 0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
        const double r0 = m == 0 ? 1.0 : rho(2 * m);
        const double r1 = rho(2 * m + 1);
        double pair = r0 + r1;
        if (!(pair > 0.0)) break;
        pair = std::min(pair, prev_pair); // monotone sequence
        prev_pair = pair;
        sum += pair;
        lag = 2 * m + 1;
    }
    // sum of pairs counts rho_0 = 1 once; sum_{t>=1} rho_t = pairs - 1
    const double tau = 2.0 * sum - 1.0;
    out.lags_used = static_cast<int>(lag);
    out.ess = std::min(static_cast<double>(n), static_cast<double>(n) / std::max(tau, 1e-12));
    return out;
}

double ess(std::span<const double> chain) { return ess_detail(chain).ess; }

double ks_p_value(double d, int n, int m)
{
    if (d <= 0.0) return 1.0;
    const double ne = static_cast<double>(n) * m / (n + m);
    const double sq = std::sqrt(ne);
    const double lambda = (sq + 0.12 + 0.11 / sq) * d;
    // Kolmogorov survival function Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2)
    if (lambda < 0.2) return 1.0;
    double sum = 0.0, sign = 1.0;
    for (int j = 1; j <= 200; ++j) {
        const double term = sign * std::exp(-2.0 * j * j * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-16 * std::abs(sum)) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_convergence(std::span<const double> chain, int G)
{
    if (G < 1) throw ConfigError("ks_convergence: batch size must be positive");
    const std::size_t n = chain.size();
    if (n < 4 * static_cast<std::size_t>(G)) {
        throw ConfigError("ks_convergence: chain must have at least 4G draws");
    }
    const std::size_t half = n / 2;
    std::vector<double> a, b;
    for (std::size_t j = G - 1; j < half; j += static_cast<std::size_t>(G)) {
        a.push_back(chain[j]);
        b.push_back(chain[half + j]);
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    KsResult out;
    out.statistic = d;
    out.m = static_cast<int>(a.size());
    out.p_value = ks_p_value(d, out.m, out.m);
    return out;
}

Vector rmse(const std::vector<Vector>& estimates, const Vector& truth)
{
    if (estimates.empty()) throw ConfigError("rmse: no replications");
    Vector acc = Vector::Zero(truth.size());
    for (const Vector& e : estimates) {
        if (e.size() != truth.size()) throw DimensionError("rmse: dimension mismatch");
        acc += (e - truth).cwiseAbs2();
    }
    return (acc / static_cast<double>(estimates.size())).cwiseSqrt();
}

double acceptance_rate(std::span<const char> indicators)
{
    if (indicators.empty()) throw ConfigError("acceptance_rate: empty input");
    const auto hits = std::count_if(indicators.begin(), indicators.end(), [](char c) { return c != 0; });
    return static_cast<double>(hits) / static_cast<double>(indicators.size());
}

std::vector<double> progressive_means(std::span<const double> chain)
{
    if (chain.empty()) throw ConfigError("progressive_means: empty input");
    std::vector<double> out;
    out.reserve(chain.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < chain.size(); ++i) {
        sum += chain[i];
        out.push_back(sum / static_cast<double>(i + 1));
    }
    return out;
}

DiagnosticsReport diagnose(const ChainTrace& trace, int G, int ks_window,
                           const std::optional<Vector>& truth_with_phi)
{
    DiagnosticsReport rep;
    rep.G = G;
    const int n_par = static_cast<int>(trace.alpha.cols()) + 1;
    std::vector<std::vector<double>> cols;
    for (int j = 0; j + 1 < n_par; ++j) cols.push_back(trace.alpha_column(j));
    cols.push_back(trace.phi_kept());

    for (const auto& c : cols) {
        const double m = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
        double v = 0.0;
        for (double x : c) v += (x - m) * (x - m);
        rep.mean.push_back(m);
        rep.sd.push_back(std::sqrt(v / std::max<std::size_t>(1, c.size() - 1)));
        rep.ess.push_back(ess(c));
        const KsResult ks = ks_convergence(c, G);
        rep.ks_statistic.push_back(ks.statistic);
        rep.ks_p_value.push_back(ks.p_value);
    }

    const std::span<const char> a_acc(trace.alpha_accepted);
    const std::span<const char> p_acc(trace.phi_accepted);
    rep.alpha_acceptance = acceptance_rate(a_acc.subspan(static_cast<std::size_t>(trace.burn_in)));
    rep.phi_acceptance = acceptance_rate(p_acc.subspan(static_cast<std::size_t>(trace.burn_in)));

    double s_sum = 0.0, p_sum = 0.0;
    int count = 0;
    for (const auto& c : cols) {
        const int len = static_cast<int>(c.size());
        const int window = std::min(ks_window, len - 4 * G);
        for (int w = 0; w < std::max(window, 1); ++w) {
            const KsResult ks = ks_convergence(std::span<const double>(c).first(static_cast<std::size_t>(len - w)), G);
            s_sum += ks.statistic;
            p_sum += ks.p_value;
            ++count;
        }
    }
    rep.ks_avg_statistic = s_sum / count;
    rep.ks_avg_p_value = p_sum / count;

    if (truth_with_phi) {
        if (truth_with_phi->size() != n_par) throw DimensionError("diagnose: truth has wrong length");
        Vector err(n_par);
        for (int j = 0; j < n_par; ++j) err[j] = rep.mean[static_cast<std::size_t>(j)] - (*truth_with_phi)[j];
        rep.error = err;
    }
    return rep;
}

} // namespace betaar
