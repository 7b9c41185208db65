#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "hype/config.hpp"
#include "hype/data.hpp"
#include "hype/model.hpp"
#include "hype/report.hpp"
#include "hype/trainer.hpp"

namespace hype {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRun = 3;
inline constexpr int kExitIo = 4;

// Maps an in-flight exception onto an exit code.
int exit_code_for(const std::exception& error);

// Vocabulary file saved next to every checkpoint.
std::filesystem::path vocab_path_for(const std::filesystem::path& checkpoint);

struct LoadedTasks {
    Tokenizer tokenizer;
    std::vector<TaskData> tasks;
    std::vector<TokenSequence> pretrain_corpus;
};

// Tokenizer, task data and the unlabeled corpus the config describes.
LoadedTasks load_tasks(const ExperimentConfig& config);

struct RunOutcome {
    MetricReport report;
    std::vector<std::filesystem::path> written;
    // Some task/technique cell finished with every run aborted.
    bool failed = false;
};

/// Validates the config, executes its command and writes the resolved config,
/// run records, checkpoints and the report under config.output_dir.
/// Progress goes to `log`, one line per finished run. On a mid-run error a
/// failure.json record is left next to any partial artifacts and the error
/// is rethrown.
RunOutcome run_experiment(const ExperimentConfig& config, std::ostream& log);

}  // namespace hype
