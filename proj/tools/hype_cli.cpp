#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "hype/config.hpp"
#include "hype/errors.hpp"
#include "hype/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"hype: hidden-state noise fine-tuning experiments"};
    std::string config_path, out_dir, formats;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::size_t> threads;
    app.add_option("--config", config_path, "experiment config file")->required();
    app.add_option("--out", out_dir, "output directory (overrides HYPE_OUT_DIR and the config)");
    app.add_option("--format", formats, "json, csv or json,csv");
    app.add_option("--seed-override", seed_override, "run every seeded command with this single seed");
    app.add_option("--threads", threads, "parallel grid cells")->check(CLI::PositiveNumber);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? hype::kExitOk : hype::kExitConfig;
    }

    std::cout.setf(std::ios::unitbuf);
    try {
        auto config = hype::load_config(config_path);
        if (const char* env = std::getenv("HYPE_OUT_DIR"); env && *env) config.output_dir = env;
        if (!out_dir.empty()) config.output_dir = out_dir;
        if (!formats.empty()) config.formats = hype::parse_formats(formats);
        if (seed_override) {
            config.train.seeds = {*seed_override};
            config.pretrain.seed = *seed_override;
            config.probe.seed = *seed_override;
        }
        if (threads) config.threads = *threads;

        const auto outcome = hype::run_experiment(config, std::cout);
        for (const auto& p : outcome.written) std::cout << "wrote " << p.string() << "\n";
        for (const auto& f : outcome.report.failures) std::cerr << "failure: " << f << "\n";
        return outcome.failed ? hype::kExitRun : hype::kExitOk;
    } catch (const std::exception& e) {
        const int code = hype::exit_code_for(e);
        std::cerr << (code == hype::kExitConfig ? "config error: " : code == hype::kExitIo ? "i/o error: " : "run failure: ")
                  << e.what() << "\n";
        return code;
    }
}
