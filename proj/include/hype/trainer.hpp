#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hype/batch.hpp"
#include "hype/data.hpp"
#include "hype/metrics.hpp"
#include "hype/model.hpp"
#include "hype/optim.hpp"
#include "hype/perturb.hpp"

namespace hype {

/// A task ready for training: tokenized once, shared by every run.
struct TaskData {
    std::string name;
    MetricKind metric = MetricKind::accuracy;
    bool regression = false;
    std::size_t n_classes = 2;  // ignored for regression
    std::vector<TokenSequence> train_inputs, dev_inputs;
    std::vector<double> train_targets, dev_targets;
    std::size_t pad_id = 0;
};

// Unlabeled examples are dropped from both splits.
TaskData make_task_data(const std::string& name, MetricKind metric, const Dataset& train, const Dataset& dev,
                        const Tokenizer& tokenizer, std::size_t max_len = 128);

struct TrainRunConfig {
    std::string task;
    std::string checkpoint;  // provenance only: where the backbone came from
    NoiseSpec noise;
    DropoutSpec dropout{0.1};
    bool combine_dropout_with_noise = false;
    double peak_lr = 2e-5;
    std::size_t epochs = 3;
    std::size_t batch_size = 16;
    double warmup_fraction = 0.10;
    std::uint64_t seed = 0;
    AdamWConfig adam;
    bool decay_all = false;
    std::size_t eval_batch_size = 64;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch;  // 1-based
    double train_loss;  // mean over the epoch's steps
    double dev_score;   // metric x 100
    bool degenerate;
};

struct RunRecord {
    TrainRunConfig config;
    std::vector<EpochRecord> epochs;
    std::vector<double> step_losses;
    double final_score = 0.0;
    std::string checkpoint_id;  // hex digest of the serialized final state
    bool aborted = false;
    std::string diagnostic;
    double wall_clock_seconds = 0.0;
    // Final fine-tuned state; absent once dropped by the caller.
    std::shared_ptr<const ModelState> state;

    // Byte-stable JSON. Wall-clock time is left out unless asked for, so two
    // identical runs serialize identically.
    std::string to_json(bool include_wall_clock = false) const;
};

struct FinetuneHooks {
    // Receives the perturbation record of every evaluation forward pass.
    PerturbationTrace* eval_trace = nullptr;
    // Receives the perturbation record of every training forward pass.
    PerturbationTrace* train_trace = nullptr;
};

/// Fine-tunes a copy of `pretrained` on `task`: perturbed forward passes while
/// training, clean forward passes for the end-of-epoch dev evaluation.
/// A non-finite training loss stops the run and marks it aborted.
RunRecord finetune(const ModelState& pretrained, const TaskData& task, const TrainRunConfig& config,
                   const FinetuneHooks& hooks = {});

// Dev-set predictions in eval mode: argmax class or regression score.
std::vector<double> predict(const ModelState& state, const TaskData& task, std::size_t batch_size = 64);
MetricResult evaluate(const ModelState& state, const TaskData& task, std::size_t batch_size = 64);

struct Aggregate {
    double mean = 0.0;
    double std = 0.0;  // population std over seeds
    std::size_t n = 0;
};
Aggregate aggregate_scores(const std::vector<double>& scores);

struct LrSummary {
    double lr;
    Aggregate score;
    std::size_t aborted;
};

struct GridResult {
    std::vector<RunRecord> records;  // sorted by (lr, seed)
    std::vector<LrSummary> per_lr;
    double best_lr = 0.0;
    Aggregate best;
    bool any_aborted = false;
    bool all_aborted = false;

    std::vector<const RunRecord*> best_runs() const;
};

struct GridOptions {
    std::size_t threads = 1;
    bool keep_states = false;
    // Called once per finished record, in completion order.
    std::function<void(const RunRecord&)> on_record;
};

/// Runs every (lr, seed) cell. The best lr has the highest seed-mean score
/// over non-aborted runs; ties go to the smaller lr.
GridResult grid_search(const ModelState& pretrained, const TaskData& task, const TrainRunConfig& base,
                       const std::vector<double>& lrs, const std::vector<std::uint64_t>& seeds,
                       const GridOptions& options = {});

std::string hex_digest(const std::string& bytes);

}  // namespace hype
