#pragma once

/** @file
 * Data ingestion, constrained detrending, experiment configuration and the
 * orchestration behind the `betaar` command-line tool.
 */

#include "betaar/bar_model.hpp"
#include "betaar/diagnostics.hpp"
#include "betaar/gibbs.hpp"
#include "betaar/priors.hpp"
#include "betaar/rjmcmc.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace betaar {

enum class Command { Simulate, Fit, Select, Diagnose, Replicate };

const char* to_string(Command c);
Command parse_command(const std::string& name);

/// Flat key = value configuration.  Every field below has the same key in
/// the config file; `apply` accepts one pair at a time so command-line
/// overrides can be layered on top of a file.
struct ExperimentConfig {
    Command command = Command::Fit;
    std::string data;            ///< input series (fit/select/replicate) or trace (diagnose)
    std::string out = "out";
    int k = 1;
    int k_max = 0;               ///< 0: k for fit/replicate, 6 for select
    PriorSpec priors;
    RjConfig rj;                 ///< scheme, k_init (n_iter etc. taken from below)
    int n_iter = 10000;
    int burn_in = 1000;
    double sigma_phi = 1.0;
    std::uint64_t seed = 1;
    int replications = 10;
    int workers = 1;
    bool detrend = false;
    std::vector<double> sim_alpha;
    double sim_phi = 100.0;
    int sim_n = 300;
    std::string generator;       ///< unemployment_us | unemployment_eu | capacity
    int G = 50;
    int ks_window = 100;

    void apply(const std::string& key, const std::string& value);
    void validate() const;
    int effective_k_max() const;
    /// All keys in a fixed order, one "key=value" per line.
    std::string manifest() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// One numeric column, optional header line, comma- or newline-separated.
/// Throws DomainError naming the line for unparsable rows and listing every
/// row outside (0,1).
std::vector<double> load_series(const std::filesystem::path& path);
SeriesData load_series(const std::filesystem::path& path, int k_max);
/// One value per line with 17 significant digits.
void write_series(const std::filesystem::path& path, const std::vector<double>& values);

struct DetrendResult {
    double gamma0 = 0.0;
    double gamma1 = 0.0;
    double slope_se = 0.0;      ///< Newey-West standard error of gamma1
    bool constrained = false;   ///< least-squares solution was projected
    std::vector<double> detrended;
    std::vector<double> original;
};

/// Least squares x_t = gamma0 + gamma1 t/T subject to gamma0 in (0,1) and
/// gamma0 + gamma1 in (0,1); returns x_t - gamma1 t/T.
DetrendResult detrend(const std::vector<double>& series);

/// n observations from a BAR(k) after `warmup` discarded draws started at the
/// stationary mean.
std::vector<double> synthetic_series(const BarParams& params, int n, Rng& rng, int warmup = 100);

/// Series shaped like the empirical applications: "unemployment_us"
/// (BAR(2), n = 467), "unemployment_eu" (BAR(5), n = 180) and "capacity"
/// (BAR(6) plus a downward linear drift, n = 521).
std::vector<double> generate_named_series(const std::string& name, Rng& rng);

/// Fixed-order trace as columnar text: iter alpha0..alphak phi.
void write_chain_trace(const std::filesystem::path& path, const ChainTrace& trace);
ChainTrace read_chain_trace(const std::filesystem::path& path, int burn_in);
/// RJ trace: iter k phi alpha0..alpha_kmax, "nan" for inactive coefficients.
void write_rj_trace(const std::filesystem::path& path, const RjTrace& trace);
/// One "k probability" row per order, then mode, mean and sd.
void write_model_posterior(const std::filesystem::path& path, const ModelPosterior& mp);
void write_report(const std::filesystem::path& path, const DiagnosticsReport& rep);

/// Replicate summary: RMSE per parameter with mean acceptance, ESS and KS.
struct ReplicateSummary {
    int k = 1;
    Vector rmse;       ///< alpha_0..alpha_k, phi
    double acc = 0.0;  ///< mean alpha-step acceptance
    double ess = 0.0;  ///< mean ESS over parameters and replications
    double ks = 0.0;   ///< mean averaged KS p-value
};

struct RunResult {
    std::vector<std::filesystem::path> files;
    std::optional<ModelPosterior> model_posterior;
    std::optional<DiagnosticsReport> report;
    std::optional<ReplicateSummary> replicate;
};

RunResult run_experiment(const ExperimentConfig& config);

} // namespace betaar
