#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hype/model.hpp"
#include "hype/pretrain.hpp"
#include "hype/probe.hpp"
#include "hype/synthetic.hpp"
#include "hype/trainer.hpp"

namespace hype {

enum class Command { finetune, grid, probe, similarity, pretrain, compare };

std::string to_string(Command command);
Command parse_command(const std::string& text);

struct OutputFormats {
    bool json = true;
    bool csv = true;
};

// "json", "csv" or "json,csv".
OutputFormats parse_formats(const std::string& text);

struct DataSection {
    std::string source = "synthetic";  // synthetic | files
    std::uint64_t synthetic_seed = 7;
    SyntheticOptions synthetic;
    // Synthetic task names, in report order.
    std::vector<std::string> tasks{"acceptability", "match", "similarity"};
    // File source: one task.
    std::string task = "task";
    std::filesystem::path train_path, dev_path;
    std::string format;  // jsonl | tsv; empty = from the extension
    std::string metric = "accuracy";
    std::filesystem::path vocab_path;  // empty = next to the checkpoint, else built from the data
    std::size_t max_len = 64;
    std::size_t subsample = 0;  // 0 = full training split
    std::uint64_t subsample_seed = 0;
};

struct ModelSection {
    std::filesystem::path checkpoint;  // empty = pretrain (or random init at 0 steps)
    ModelConfig config;
};

struct PretrainSection {
    std::size_t steps = 2000;
    std::uint64_t seed = 1;
    PretrainOptions options;
};

struct TrainSection {
    TrainRunConfig base;  // noise and dropout come from their own sections
    std::vector<double> lrs{1e-5, 2e-5, 3e-5, 4e-5};
    std::vector<std::uint64_t> seeds{1, 2, 3};
};

struct Technique {
    std::string name;
    NoiseSpec noise;
    DropoutSpec dropout{0.1};
    bool combine_dropout_with_noise = false;
};

struct ProbeSection {
    std::vector<std::filesystem::path> checkpoints;  // empty = the resolved backbone
    std::string task;                                // empty = the first task
    std::uint64_t seed = 1;
    ProbeSettings settings;
};

struct SimilaritySection {
    std::vector<std::filesystem::path> checkpoints;
    std::string task;
    std::string split = "dev";  // dev | train
    SimilarityOptions options;
    // compare: also report similarity curves of the best-lr runs.
    bool in_compare = false;
};

struct ExperimentConfig {
    Command command = Command::finetune;
    std::string name = "experiment";
    std::filesystem::path output_dir = "hype_out";
    std::size_t threads = 1;
    OutputFormats formats;
    std::string baseline;  // compare: technique the deltas are taken against
    bool save_checkpoints = false;

    DataSection data;
    ModelSection model;
    PretrainSection pretrain;
    TrainSection train;
    // finetune/grid use techniques.front(); compare runs them all.
    std::vector<Technique> techniques;
    ProbeSection probe;
    SimilaritySection similarity;

    // Cross-field checks and referenced-path existence. Throws ConfigError.
    void validate() const;
};

/// Parses INI-style text: "[section]" headers and "key = value" lines.
/// Unknown sections or keys are rejected with a ConfigError naming them.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Relative paths in the config resolve against `base`.
void resolve_paths(ExperimentConfig& config, const std::filesystem::path& base);

// Every setting with defaults expanded, in a form parse_config accepts.
std::string resolved_config_text(const ExperimentConfig& config);

}  // namespace hype
