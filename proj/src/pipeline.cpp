#include "betaar/pipeline.hpp"

#include "betaar/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace betaar {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v, int digits = 17)
{
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

double to_double(const std::string& key, const std::string& value)
{
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
    }
}

long long to_int(const std::string& key, const std::string& value)
{
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + value + "'");
    }
}

bool to_bool(const std::string& key, const std::string& value)
{
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("config key '" + key + "': expected true or false, got '" + value + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& value)
{
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(to_double(key, item));
    }
    return out;
}

// "default" clears an optional hyperparameter override
std::optional<double> to_optional(const std::string& key, const std::string& value)
{
    if (value == "default") return std::nullopt;
    return to_double(key, value);
}

std::string join(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
    return s;
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// configuration

const char* to_string(Command c)
{
    switch (c) {
    case Command::Simulate: return "simulate";
    case Command::Fit: return "fit";
    case Command::Select: return "select";
    case Command::Diagnose: return "diagnose";
    case Command::Replicate: return "replicate";
    }
    return "unknown";
}

Command parse_command(const std::string& name)
{
    if (name == "simulate") return Command::Simulate;
    if (name == "fit") return Command::Fit;
    if (name == "select") return Command::Select;
    if (name == "diagnose") return Command::Diagnose;
    if (name == "replicate") return Command::Replicate;
    throw ConfigError("unknown command '" + name + "' (simulate | fit | select | diagnose | replicate)");
}

void ExperimentConfig::apply(const std::string& key, const std::string& value)
{
    auto& fam = priors.alpha;
    if (key == "command") command = parse_command(value);
    else if (key == "data") data = value;
    else if (key == "out") out = value;
    else if (key == "k") k = static_cast<int>(to_int(key, value));
    else if (key == "k_max") k_max = static_cast<int>(to_int(key, value));
    else if (key == "prior") fam.kind = parse_alpha_prior_kind(value);
    else if (key == "upsilon_scale") fam.upsilon_scale = to_double(key, value);
    else if (key == "kappa") fam.kappa = to_double(key, value);
    else if (key == "nu") fam.nu_value = to_optional(key, value);
    else if (key == "beta_nu") fam.beta_nu = to_optional(key, value);
    else if (key == "beta_gamma") fam.beta_gamma = to_optional(key, value);
    else if (key == "phi_c") priors.phi.c = to_double(key, value);
    else if (key == "phi_d") priors.phi.d = to_double(key, value);
    else if (key == "root_a") priors.root.a = to_double(key, value);
    else if (key == "root_b") priors.root.b = to_double(key, value);
    else if (key == "scheme") rj.scheme = parse_jump_scheme(value);
    else if (key == "k_init") rj.k_init = static_cast<int>(to_int(key, value));
    else if (key == "n_iter") n_iter = static_cast<int>(to_int(key, value));
    else if (key == "burn_in") burn_in = static_cast<int>(to_int(key, value));
    else if (key == "sigma_phi") sigma_phi = to_double(key, value);
    else if (key == "seed") seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "replications") replications = static_cast<int>(to_int(key, value));
    else if (key == "workers") workers = static_cast<int>(to_int(key, value));
    else if (key == "detrend") detrend = to_bool(key, value);
    else if (key == "sim_alpha") sim_alpha = to_list(key, value);
    else if (key == "sim_phi") sim_phi = to_double(key, value);
    else if (key == "sim_n") sim_n = static_cast<int>(to_int(key, value));
    else if (key == "generator") generator = value;
    else if (key == "G") G = static_cast<int>(to_int(key, value));
    else if (key == "ks_window") ks_window = static_cast<int>(to_int(key, value));
    else throw ConfigError("unknown config key '" + key + "'");
}

int ExperimentConfig::effective_k_max() const
{
    if (k_max > 0) return k_max;
    return command == Command::Select ? 6 : k;
}

void ExperimentConfig::validate() const
{
    if (k < 1) throw ConfigError("k must be at least 1");
    if (k_max < 0) throw ConfigError("k_max must be nonnegative");
    if (command != Command::Select && k > effective_k_max()) throw ConfigError("k must not exceed k_max");
    if (n_iter < 1) throw ConfigError("n_iter must be positive");
    if (burn_in < 0 || burn_in >= n_iter) throw ConfigError("burn_in must lie in [0, n_iter)");
    if (!(sigma_phi > 0.0)) throw ConfigError("sigma_phi must be positive");
    if (replications < 1) throw ConfigError("replications must be positive");
    if (workers < 1) throw ConfigError("workers must be positive");
    if (!(priors.phi.c > 0.0) || !(priors.phi.d > 0.0)) throw ConfigError("phi_c and phi_d must be positive");
    if (!(priors.root.a > 0.0) || !(priors.root.b > 0.0)) throw ConfigError("root_a and root_b must be positive");
    if (!(priors.alpha.upsilon_scale > 0.0)) throw ConfigError("upsilon_scale must be positive");
    if (!(priors.alpha.kappa > 0.0)) throw ConfigError("kappa must be positive");
    if (sim_n < 1) throw ConfigError("sim_n must be positive");
    if (!(sim_phi > 0.0)) throw ConfigError("sim_phi must be positive");
    if (G < 1) throw ConfigError("G must be positive");
    if (ks_window < 1) throw ConfigError("ks_window must be positive");
    if (!sim_alpha.empty() && sim_alpha.size() < 2) throw ConfigError("sim_alpha needs at least two entries");
}

std::string ExperimentConfig::manifest() const
{
    const auto& fam = priors.alpha;
    auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string("default"); };
    std::ostringstream m;
    m << "command=" << to_string(command) << '\n'
      << "data=" << data << '\n'
      << "out=" << out << '\n'
      << "k=" << k << '\n'
      << "k_max=" << effective_k_max() << '\n'
      << "prior=" << to_string(fam.kind) << '\n'
      << "upsilon_scale=" << fmt(fam.upsilon_scale) << '\n'
      << "kappa=" << fmt(fam.kappa) << '\n'
      << "nu=" << opt(fam.nu_value) << '\n'
      << "beta_nu=" << opt(fam.beta_nu) << '\n'
      << "beta_gamma=" << opt(fam.beta_gamma) << '\n'
      << "phi_c=" << fmt(priors.phi.c) << '\n'
      << "phi_d=" << fmt(priors.phi.d) << '\n'
      << "root_a=" << fmt(priors.root.a) << '\n'
      << "root_b=" << fmt(priors.root.b) << '\n'
      << "scheme=" << to_string(rj.scheme) << '\n'
      << "k_init=" << rj.k_init << '\n'
      << "n_iter=" << n_iter << '\n'
      << "burn_in=" << burn_in << '\n'
      << "sigma_phi=" << fmt(sigma_phi) << '\n'
      << "seed=" << seed << '\n'
      << "replications=" << replications << '\n'
      << "workers=" << workers << '\n'
      << "detrend=" << (detrend ? "true" : "false") << '\n'
      << "sim_alpha=" << join(sim_alpha) << '\n'
      << "sim_phi=" << fmt(sim_phi) << '\n'
      << "sim_n=" << sim_n << '\n'
      << "generator=" << generator << '\n'
      << "G=" << G << '\n'
      << "ks_window=" << ks_window << '\n';
    return m.str();
}

ExperimentConfig parse_config_text(const std::string& text)
{
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        cfg.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

ExperimentConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

// ---------------------------------------------------------------------------
// series I/O

std::vector<double> load_series(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read data file " + path.string());
    std::vector<double> values;
    std::vector<int> value_lines;
    std::string line;
    int lineno = 0;
    bool header_allowed = true;
    while (std::getline(in, line)) {
        ++lineno;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            field = trim(field);
            if (field.empty()) continue;
            char* end = nullptr;
            const double v = std::strtod(field.c_str(), &end);
            if (end == field.c_str() || *end != '\0') {
                if (header_allowed && values.empty()) {
                    header_allowed = false;
                    break; // header line
                }
                throw DomainError(path.string() + ": line " + std::to_string(lineno)
                                  + ": cannot parse '" + field + "'");
            }
            values.push_back(v);
            value_lines.push_back(lineno);
        }
        if (!values.empty()) header_allowed = false;
    }
    std::string bad;
    int n_bad = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0 && values[i] < 1.0)) {
            if (n_bad++ < 20) {
                bad += (bad.empty() ? "" : ", ") + std::string("index ") + std::to_string(i) + " (line "
                       + std::to_string(value_lines[i]) + ", value " + fmt(values[i], 6) + ")";
            }
        }
    }
    if (n_bad > 0) {
        throw DomainError(path.string() + ": " + std::to_string(n_bad)
                          + " value(s) outside the open interval (0,1): " + bad);
    }
    if (values.empty()) throw DomainError(path.string() + ": no observations");
    return values;
}

SeriesData load_series(const fs::path& path, int k_max) { return SeriesData(load_series(path), k_max); }

void write_series(const fs::path& path, const std::vector<double>& values)
{
    auto out = open_out(path);
    for (double v : values) out << fmt(v) << '\n';
}

// ---------------------------------------------------------------------------
// detrending

namespace {

struct LineFit {
    double g0, g1, sse;
};

LineFit fit_fixed_intercept(const std::vector<double>& x, const std::vector<double>& s, double g0)
{
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        num += s[t] * (x[t] - g0);
        den += s[t] * s[t];
    }
    return {g0, num / den, 0.0};
}

// gamma0 + gamma1 = c fixed: x_t - c s_t = gamma0 (1 - s_t)
LineFit fit_fixed_endpoint(const std::vector<double>& x, const std::vector<double>& s, double c)
{
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        num += (1.0 - s[t]) * (x[t] - c * s[t]);
        den += (1.0 - s[t]) * (1.0 - s[t]);
    }
    const double g0 = den > 0.0 ? num / den : c;
    return {g0, c - g0, 0.0};
}

double sse_of(const std::vector<double>& x, const std::vector<double>& s, double g0, double g1)
{
    double e = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        const double r = x[t] - g0 - g1 * s[t];
        e += r * r;
    }
    return e;
}

} // namespace

DetrendResult detrend(const std::vector<double>& series)
{
    const std::size_t T = series.size();
    if (T < 3) throw DomainError("detrend: need at least 3 observations");
    for (std::size_t i = 0; i < T; ++i) {
        if (!(series[i] > 0.0 && series[i] < 1.0)) {
            throw DomainError("detrend: observation " + std::to_string(i) + " outside (0,1)");
        }
    }
    std::vector<double> s(T);
    for (std::size_t t = 0; t < T; ++t) s[t] = static_cast<double>(t + 1) / static_cast<double>(T);

    DetrendResult res;
    res.original = series;
    const bool constant = std::all_of(series.begin(), series.end(), [&](double v) { return v == series[0]; });
    if (constant) {
        res.gamma0 = series[0];
        res.gamma1 = 0.0;
        res.detrended = series;
        return res;
    }

    double sm = 0.0, xm = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        sm += s[t];
        xm += series[t];
    }
    sm /= static_cast<double>(T);
    xm /= static_cast<double>(T);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        sxy += (s[t] - sm) * (series[t] - xm);
        sxx += (s[t] - sm) * (s[t] - sm);
    }
    double g1 = sxy / sxx;
    double g0 = xm - g1 * sm;

    auto feasible = [](double a, double b) { return a > 0.0 && a < 1.0 && a + b > 0.0 && a + b < 1.0; };
    if (!feasible(g0, g1)) {
        constexpr double eps = 1e-9;
        std::vector<LineFit> candidates = {
            fit_fixed_intercept(series, s, eps), fit_fixed_intercept(series, s, 1.0 - eps),
            fit_fixed_endpoint(series, s, eps), fit_fixed_endpoint(series, s, 1.0 - eps)};
        bool found = false;
        LineFit best{0, 0, std::numeric_limits<double>::infinity()};
        for (auto& c : candidates) {
            // project the re-fitted free coordinate back into its range as well
            if (!feasible(c.g0, c.g1)) {
                c.g0 = std::clamp(c.g0, eps, 1.0 - eps);
                c.g1 = std::clamp(c.g0 + c.g1, eps, 1.0 - eps) - c.g0;
            }
            c.sse = sse_of(series, s, c.g0, c.g1);
            if (feasible(c.g0, c.g1) && c.sse < best.sse) {
                best = c;
                found = true;
            }
        }
        if (!found) throw NumericalError("detrend: no feasible constrained fit");
        g0 = best.g0;
        g1 = best.g1;
        res.constrained = true;
    }
    res.gamma0 = g0;
    res.gamma1 = g1;

    // Newey-West standard error of the slope with Bartlett weights
    const int L = static_cast<int>(std::floor(4.0 * std::pow(static_cast<double>(T) / 100.0, 2.0 / 9.0)));
    std::vector<double> u(T);
    for (std::size_t t = 0; t < T; ++t) u[t] = (s[t] - sm) * (series[t] - g0 - g1 * s[t]);
    double omega = 0.0;
    for (std::size_t t = 0; t < T; ++t) omega += u[t] * u[t];
    for (int l = 1; l <= L; ++l) {
        const double w = 1.0 - static_cast<double>(l) / (L + 1);
        double acc = 0.0;
        for (std::size_t t = static_cast<std::size_t>(l); t < T; ++t) acc += u[t] * u[t - l];
        omega += 2.0 * w * acc;
    }
    res.slope_se = std::sqrt(std::max(omega, 0.0)) / sxx;

    res.detrended.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        res.detrended[t] = series[t] - g1 * s[t];
        if (!(res.detrended[t] > 0.0 && res.detrended[t] < 1.0)) {
            throw DomainError("detrend: detrended observation " + std::to_string(t) + " leaves (0,1)");
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// synthetic data

std::vector<double> synthetic_series(const BarParams& params, int n, Rng& rng, int warmup)
{
    params.validate();
    if (n < 1 || warmup < 0) throw ConfigError("synthetic_series: bad length");
    const double m = stationary_mean(params.alpha);
    const std::vector<double> init(static_cast<std::size_t>(params.k), m);
    const SeriesData s = simulate(params, n + warmup, init, rng);
    const auto& v = s.values();
    return std::vector<double>(v.end() - n, v.end());
}

std::vector<double> generate_named_series(const std::string& name, Rng& rng)
{
    if (name == "unemployment_us") {
        Vector a(3);
        a << 0.011, 0.547, 0.272;
        return synthetic_series(BarParams(a, 130.0), 467, rng);
    }
    if (name == "unemployment_eu") {
        Vector a(6);
        a << 0.029, 0.544, 0.076, 0.010, 0.024, 0.011;
        return synthetic_series(BarParams(a, 128.0), 180, rng);
    }
    if (name == "capacity") {
        Vector a(7);
        a << 0.397, 0.196, 0.075, 0.065, 0.045, 0.053, 0.049;
        const int n = 521;
        std::vector<double> y = synthetic_series(BarParams(a, 300.0), n, rng);
        const double shift = 0.843 - stationary_mean(a);
        for (int t = 0; t < n; ++t) {
            y[static_cast<std::size_t>(t)] += shift - 0.066 * static_cast<double>(t + 1) / n;
        }
        return y;
    }
    throw ConfigError("unknown generator '" + name + "' (unemployment_us | unemployment_eu | capacity)");
}

// ---------------------------------------------------------------------------
// traces and reports

void write_chain_trace(const fs::path& path, const ChainTrace& trace)
{
    auto out = open_out(path);
    out << "iter";
    for (int j = 0; j <= trace.k; ++j) out << " alpha" << j;
    out << " phi\n";
    for (Eigen::Index i = 0; i < trace.alpha.rows(); ++i) {
        out << i + 1;
        for (Eigen::Index j = 0; j < trace.alpha.cols(); ++j) out << ' ' << fmt(trace.alpha(i, j));
        out << ' ' << fmt(trace.phi[static_cast<std::size_t>(i)]) << '\n';
    }
}

ChainTrace read_chain_trace(const fs::path& path, int burn_in)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read trace " + path.string());
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::vector<std::string> cols;
    for (std::string c; hs >> c;) cols.push_back(c);
    if (cols.size() < 4 || cols.front() != "iter" || cols.back() != "phi") {
        throw DomainError(path.string() + ": not a fixed-order trace (header iter alpha0.. phi)");
    }
    const int k = static_cast<int>(cols.size()) - 3;
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::istringstream ls(line);
        std::vector<double> row;
        for (std::string f; ls >> f;) {
            char* end = nullptr;
            row.push_back(std::strtod(f.c_str(), &end));
            if (*end != '\0') throw DomainError(path.string() + ": line " + std::to_string(lineno) + ": bad number");
        }
        if (row.size() != cols.size()) {
            throw DomainError(path.string() + ": line " + std::to_string(lineno) + ": wrong column count");
        }
        rows.push_back(std::move(row));
    }
    if (burn_in < 0 || burn_in >= static_cast<int>(rows.size())) {
        throw ConfigError("burn_in must be smaller than the trace length");
    }
    ChainTrace t;
    t.k = k;
    t.burn_in = burn_in;
    t.alpha.resize(static_cast<Eigen::Index>(rows.size()), k + 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int j = 0; j <= k; ++j) t.alpha(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j + 1)];
        t.phi.push_back(rows[i].back());
        t.alpha_accepted.push_back(i > 0 && rows[i][1] != rows[i - 1][1]);
        t.phi_accepted.push_back(i > 0 && rows[i].back() != rows[i - 1].back());
    }
    return t;
}

void write_rj_trace(const fs::path& path, const RjTrace& trace)
{
    auto out = open_out(path);
    out << "iter k phi";
    for (Eigen::Index j = 0; j < trace.alpha.cols(); ++j) out << " alpha" << j;
    out << '\n';
    for (std::size_t i = 0; i < trace.k.size(); ++i) {
        out << i + 1 << ' ' << trace.k[i] << ' ' << fmt(trace.phi[i]);
        for (Eigen::Index j = 0; j < trace.alpha.cols(); ++j) out << ' ' << fmt(trace.alpha(static_cast<Eigen::Index>(i), j));
        out << '\n';
    }
}

void write_model_posterior(const fs::path& path, const ModelPosterior& mp)
{
    auto out = open_out(path);
    out << "k probability\n";
    for (std::size_t i = 0; i < mp.probs.size(); ++i) out << i + 1 << ' ' << fmt(mp.probs[i]) << '\n';
    out << "mode " << mp.mode << '\n';
    out << "mean " << fmt(mp.mean) << '\n';
    out << "sd " << fmt(mp.sd) << '\n';
}

void write_report(const fs::path& path, const DiagnosticsReport& rep)
{
    auto out = open_out(path);
    out << "parameter mean sd ess ks_statistic ks_p_value";
    if (rep.error) out << " error";
    out << '\n';
    const std::size_t n = rep.mean.size();
    for (std::size_t j = 0; j < n; ++j) {
        out << (j + 1 == n ? std::string("phi") : "alpha" + std::to_string(j)) << ' ' << fmt(rep.mean[j], 10) << ' '
            << fmt(rep.sd[j], 10) << ' ' << fmt(rep.ess[j], 10) << ' ' << fmt(rep.ks_statistic[j], 10) << ' '
            << fmt(rep.ks_p_value[j], 10);
        if (rep.error) out << ' ' << fmt((*rep.error)[static_cast<Eigen::Index>(j)], 10);
        out << '\n';
    }
    out << "# alpha_acceptance " << fmt(rep.alpha_acceptance, 10) << '\n';
    out << "# phi_acceptance " << fmt(rep.phi_acceptance, 10) << '\n';
    out << "# ks_avg_statistic " << fmt(rep.ks_avg_statistic, 10) << '\n';
    out << "# ks_avg_p_value " << fmt(rep.ks_avg_p_value, 10) << '\n';
    out << "# G " << rep.G << '\n';
}

namespace {

void write_xy(const fs::path& path, const std::vector<double>& x, const std::vector<double>& y)
{
    auto out = open_out(path);
    out << "x y\n";
    for (std::size_t i = 0; i < x.size(); ++i) out << fmt(x[i]) << ' ' << fmt(y[i]) << '\n';
}

void write_progressive(const fs::path& dir, const ChainTrace& trace, std::vector<fs::path>& files)
{
    std::vector<double> iters(trace.phi.size());
    for (std::size_t i = 0; i < iters.size(); ++i) iters[i] = static_cast<double>(i + 1);
    for (int j = 0; j <= trace.k; ++j) {
        std::vector<double> col(trace.phi.size());
        for (std::size_t i = 0; i < col.size(); ++i) col[i] = trace.alpha(static_cast<Eigen::Index>(i), j);
        const fs::path p = dir / ("progressive_alpha" + std::to_string(j) + ".txt");
        write_xy(p, iters, progressive_means(col));
        files.push_back(p);
    }
    const fs::path p = dir / "progressive_phi.txt";
    write_xy(p, iters, progressive_means(trace.phi));
    files.push_back(p);
}

std::vector<double> obtain_series(const ExperimentConfig& cfg, Rng& rng)
{
    if (!cfg.data.empty()) return load_series(cfg.data);
    if (!cfg.generator.empty()) return generate_named_series(cfg.generator, rng);
    if (!cfg.sim_alpha.empty()) {
        const Vector a = Eigen::Map<const Vector>(cfg.sim_alpha.data(), static_cast<Eigen::Index>(cfg.sim_alpha.size()));
        return synthetic_series(BarParams(a, cfg.sim_phi), cfg.sim_n, rng);
    }
    throw ConfigError("no data: set data, generator or sim_alpha");
}

std::vector<double> maybe_detrend(const ExperimentConfig& cfg, std::vector<double> values, const fs::path& dir,
                                  std::vector<fs::path>& files)
{
    if (!cfg.detrend) return values;
    const DetrendResult d = detrend(values);
    const fs::path p = dir / "detrend.txt";
    auto out = open_out(p);
    out << "gamma0=" << fmt(d.gamma0) << '\n'
        << "gamma1=" << fmt(d.gamma1) << '\n'
        << "slope_se=" << fmt(d.slope_se) << '\n'
        << "constrained=" << (d.constrained ? "true" : "false") << '\n';
    files.push_back(p);
    const fs::path s = dir / "detrended_series.txt";
    write_series(s, d.detrended);
    files.push_back(s);
    return d.detrended;
}

GibbsConfig gibbs_config(const ExperimentConfig& cfg, std::uint64_t seed)
{
    GibbsConfig g;
    g.n_iter = cfg.n_iter;
    g.burn_in = cfg.burn_in;
    g.sigma_phi = cfg.sigma_phi;
    g.seed = seed;
    return g;
}

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t index) { return Rng::stream(seed, index).engine()(); }

} // namespace

RunResult run_experiment(const ExperimentConfig& cfg)
{
    cfg.validate();
    const fs::path dir = cfg.out;
    fs::create_directories(dir);
    RunResult res;
    {
        const fs::path p = dir / "manifest.txt";
        auto out = open_out(p);
        out << cfg.manifest();
        res.files.push_back(p);
    }
    const int k_max = cfg.effective_k_max();

    switch (cfg.command) {
    case Command::Simulate: {
        Rng rng = Rng::stream(cfg.seed, 0);
        const std::vector<double> values = maybe_detrend(cfg, obtain_series(cfg, rng), dir, res.files);
        const fs::path p = dir / "series.txt";
        write_series(p, values);
        res.files.push_back(p);
        break;
    }
    case Command::Fit: {
        Rng rng = Rng::stream(cfg.seed, 0);
        const std::vector<double> values = maybe_detrend(cfg, obtain_series(cfg, rng), dir, res.files);
        const SeriesData data(values, k_max);
        const ChainTrace trace = run_chain(data, cfg.priors, cfg.k, gibbs_config(cfg, derived_seed(cfg.seed, 1)));
        std::optional<Vector> truth;
        if (cfg.data.empty() && cfg.generator.empty() && static_cast<int>(cfg.sim_alpha.size()) == cfg.k + 1) {
            truth = Vector(cfg.k + 2);
            for (int j = 0; j <= cfg.k; ++j) (*truth)[j] = cfg.sim_alpha[static_cast<std::size_t>(j)];
            (*truth)[cfg.k + 1] = cfg.sim_phi;
        }
        const DiagnosticsReport rep = diagnose(trace, cfg.G, cfg.ks_window, truth);
        const fs::path t = dir / "trace.txt";
        write_chain_trace(t, trace);
        res.files.push_back(t);
        const fs::path r = dir / "report.txt";
        write_report(r, rep);
        res.files.push_back(r);
        write_progressive(dir, trace, res.files);
        res.report = rep;
        break;
    }
    case Command::Select: {
        Rng rng = Rng::stream(cfg.seed, 0);
        const std::vector<double> values = maybe_detrend(cfg, obtain_series(cfg, rng), dir, res.files);
        const SeriesData data(values, k_max);
        RjConfig rc = cfg.rj;
        rc.n_iter = cfg.n_iter;
        rc.burn_in = cfg.burn_in;
        rc.sigma_phi = cfg.sigma_phi;
        rc.seed = derived_seed(cfg.seed, 1);
        const RjResult rj = run_rjmcmc(data, cfg.priors, rc);
        const fs::path t = dir / "trace.txt";
        write_rj_trace(t, rj.trace);
        res.files.push_back(t);
        const fs::path m = dir / "model_posterior.txt";
        write_model_posterior(m, rj.posterior);
        res.files.push_back(m);
        std::vector<double> ks, probs = rj.posterior.probs;
        for (int k = 1; k <= k_max; ++k) ks.push_back(k);
        const fs::path bars = dir / "model_probs.txt";
        write_xy(bars, ks, probs);
        res.files.push_back(bars);
        const fs::path r = dir / "report.txt";
        {
            auto out = open_out(r);
            const RjStats& s = rj.stats;
            out << "statistic value\n"
                << "jump_acceptance " << fmt(s.jump_acceptance(), 10) << '\n'
                << "jump_attempts " << s.jump_attempts << '\n'
                << "jump_accepts " << s.jump_accepts << '\n'
                << "birth_attempts " << s.birth_attempts << '\n'
                << "birth_accepts " << s.birth_accepts << '\n'
                << "death_attempts " << s.death_attempts << '\n'
                << "death_accepts " << s.death_accepts << '\n'
                << "impossible_moves " << s.impossible_moves << '\n'
                << "inadmissible_roots " << s.inadmissible_roots << '\n'
                << "calibration_fallbacks " << s.calibration_fallbacks << '\n'
                << "outside_simplex " << s.outside_simplex << '\n'
                << "alpha_acceptance " << fmt(static_cast<double>(s.alpha_accepts) / s.sweeps, 10) << '\n'
                << "phi_acceptance " << fmt(static_cast<double>(s.phi_accepts) / s.sweeps, 10) << '\n'
                << "newton_steps " << s.newton_steps << '\n'
                << "clamp_events " << s.clamp_events << '\n';
        }
        res.files.push_back(r);
        res.model_posterior = rj.posterior;
        break;
    }
    case Command::Diagnose: {
        if (cfg.data.empty()) throw ConfigError("diagnose needs data = <trace file>");
        const ChainTrace trace = read_chain_trace(cfg.data, cfg.burn_in);
        const DiagnosticsReport rep = diagnose(trace, cfg.G, cfg.ks_window);
        const fs::path r = dir / "report.txt";
        write_report(r, rep);
        res.files.push_back(r);
        write_progressive(dir, trace, res.files);
        res.report = rep;
        break;
    }
    case Command::Replicate: {
        if (static_cast<int>(cfg.sim_alpha.size()) != cfg.k + 1) {
            throw ConfigError("replicate needs sim_alpha with k + 1 entries");
        }
        const Vector a = Eigen::Map<const Vector>(cfg.sim_alpha.data(), cfg.k + 1);
        const BarParams truth(a, cfg.sim_phi);
        truth.validate();
        Vector truth_vec(cfg.k + 2);
        truth_vec << a, cfg.sim_phi;

        const int R = cfg.replications;
        std::vector<Vector> means(static_cast<std::size_t>(R));
        std::vector<DiagnosticsReport> reports(static_cast<std::size_t>(R));
        std::vector<std::string> errors(static_cast<std::size_t>(R));
        std::atomic<int> next{0};
        auto worker = [&]() {
            for (int r = next++; r < R; r = next++) {
                const auto i = static_cast<std::size_t>(r);
                try {
                    Rng data_rng = Rng::stream(cfg.seed, 2 * i);
                    const std::vector<double> values = synthetic_series(truth, cfg.sim_n, data_rng);
                    const SeriesData data(values, k_max);
                    const ChainTrace trace =
                        run_chain(data, cfg.priors, cfg.k, gibbs_config(cfg, derived_seed(cfg.seed, 2 * i + 1)));
                    reports[i] = diagnose(trace, cfg.G, cfg.ks_window, truth_vec);
                    means[i] = Eigen::Map<const Vector>(reports[i].mean.data(), cfg.k + 2);
                    write_chain_trace(dir / ("trace_" + std::to_string(r) + ".txt"), trace);
                } catch (const std::exception& e) {
                    errors[i] = e.what();
                }
            }
        };
        const int n_workers = std::min(cfg.workers, R);
        std::vector<std::thread> pool;
        for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
        worker();
        for (auto& t : pool) t.join();
        for (int r = 0; r < R; ++r) {
            if (!errors[static_cast<std::size_t>(r)].empty()) {
                throw NumericalError("replication " + std::to_string(r) + ": " + errors[static_cast<std::size_t>(r)]);
            }
            res.files.push_back(dir / ("trace_" + std::to_string(r) + ".txt"));
        }

        ReplicateSummary sum;
        sum.k = cfg.k;
        sum.rmse = rmse(means, truth_vec);
        double ess_total = 0.0;
        for (const auto& rep : reports) {
            sum.acc += rep.alpha_acceptance / R;
            sum.ks += rep.ks_avg_p_value / R;
            for (double e : rep.ess) ess_total += e;
        }
        sum.ess = ess_total / (R * static_cast<double>(cfg.k + 2));
        const fs::path p = dir / "rmse.txt";
        {
            auto out = open_out(p);
            out << "k";
            for (int j = 0; j <= cfg.k; ++j) out << " alpha" << j;
            out << " phi ACC ESS KS\n" << cfg.k;
            for (Eigen::Index j = 0; j < sum.rmse.size(); ++j) out << ' ' << fmt(sum.rmse[j], 6);
            out << ' ' << fmt(sum.acc, 6) << ' ' << fmt(sum.ess, 6) << ' ' << fmt(sum.ks, 6) << '\n';
        }
        res.files.push_back(p);
        res.replicate = sum;
        break;
    }
    }
    return res;
}

} // namespace betaar
