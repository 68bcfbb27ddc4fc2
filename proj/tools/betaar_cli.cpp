// Command-line front end: betaar <simulate|fit|select|diagnose|replicate> [options]

#include "betaar/errors.hpp"
#include "betaar/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Bayesian inference for Beta autoregressive processes"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string data_path;
    std::vector<std::string> overrides;

    for (const char* name : {"simulate", "fit", "select", "diagnose", "replicate"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "key = value configuration file");
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--data", data_path, "input series (trace file for diagnose)");
        sub->add_option("--set", overrides, "extra key=value settings, applied last");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        betaar::ExperimentConfig cfg;
        if (!config_path.empty()) cfg = betaar::load_config(config_path);
        cfg.command = betaar::parse_command(app.get_subcommands().front()->get_name());
        if (seed) cfg.seed = *seed;
        if (!out_dir.empty()) cfg.out = out_dir;
        if (!data_path.empty()) cfg.data = data_path;
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw betaar::ConfigError("--set expects key=value, got '" + kv + "'");
            cfg.apply(kv.substr(0, eq), kv.substr(eq + 1));
        }

        const betaar::RunResult res = betaar::run_experiment(cfg);
        if (res.model_posterior) {
            const auto& mp = *res.model_posterior;
            std::cout << "mode " << mp.mode << " mean " << mp.mean << " sd " << mp.sd << '\n';
        }
        if (res.report) {
            std::cout << "alpha acceptance " << res.report->alpha_acceptance << ", KS average p-value "
                      << res.report->ks_avg_p_value << '\n';
        }
        if (res.replicate) {
            std::cout << "RMSE";
            for (Eigen::Index j = 0; j < res.replicate->rmse.size(); ++j) std::cout << ' ' << res.replicate->rmse[j];
            std::cout << '\n';
        }
        std::cout << "wrote " << res.files.size() << " files to " << cfg.out << '\n';
        return kOk;
    } catch (const betaar::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const betaar::DimensionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const betaar::DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    } catch (const betaar::NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumerical;
    }
}
