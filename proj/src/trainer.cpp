#include "hype/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <thread>

#include "hype/errors.hpp"
#include "hype/json_writer.hpp"
#include "hype/ops.hpp"

namespace hype {

namespace {

std::vector<std::size_t> class_labels(std::span<const double> targets) {
    std::vector<std::size_t> out(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) out[i] = static_cast<std::size_t>(targets[i]);
    return out;
}

Tensor task_loss(const TaskData& task, const Tensor& outputs, std::span<const double> targets) {
    if (task.regression) {
        std::vector<double> t(targets.begin(), targets.end());
        return ops::mse(outputs, Tensor::from({targets.size(), 1}, std::move(t)));
    }
    const auto labels = class_labels(targets);
    return ops::cross_entropy(outputs, labels);
}

// Fisher-Yates over 0..n-1 driven by the run's shuffle stream for `epoch`.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    RngStream rng({seed, epoch, 0, Purpose::shuffle});
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    return order;
}

Json mask_json(const NoiseSpec& spec) {
    if (!spec.layer_mask) return "all";
    Json arr = Json::array();
    for (auto l : *spec.layer_mask) arr.push_back(l);
    return arr;
}

Json config_json(const TrainRunConfig& c) {
    Json j;
    j["task"] = c.task;
    j["checkpoint"] = c.checkpoint;
    j["noise"] = {{"form", to_string(c.noise.form)},
                  {"sigma", c.noise.sigma},
                  {"position", to_string(c.noise.position)},
                  {"layers", mask_json(c.noise)}};
    j["dropout"] = c.dropout.rate;
    j["combine_dropout_with_noise"] = c.combine_dropout_with_noise;
    j["peak_lr"] = c.peak_lr;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["warmup_fraction"] = c.warmup_fraction;
    j["seed"] = c.seed;
    j["adam"] = {{"beta1", c.adam.beta1},
                 {"beta2", c.adam.beta2},
                 {"eps", c.adam.eps},
                 {"weight_decay", c.adam.weight_decay}};
    j["decay_all"] = c.decay_all;
    return j;
}

}  // namespace

TaskData make_task_data(const std::string& name, MetricKind metric, const Dataset& train, const Dataset& dev,
                        const Tokenizer& tokenizer, std::size_t max_len) {
    if (train.kind != dev.kind) throw DatasetError("train and dev splits of '" + name + "' differ in task kind");
    const bool regression = train.kind == TaskKind::regression;
    if (regression == is_classification_metric(metric)) {
        throw ConfigError("metric " + to_string(metric) + " does not fit task '" + name + "'");
    }
    TaskData t;
    t.name = name;
    t.metric = metric;
    t.regression = regression;
    t.n_classes = regression ? 1 : std::max(train.n_classes(), dev.n_classes());
    t.pad_id = tokenizer.special().pad;
    auto fill = [&](const Dataset& d, std::vector<TokenSequence>& inputs, std::vector<double>& targets) {
        for (const auto& ex : d.examples) {
            if (!ex.target) continue;
            inputs.push_back(tokenize(tokenizer, ex, max_len, false).sequence);
            targets.push_back(*ex.target);
        }
    };
    fill(train, t.train_inputs, t.train_targets);
    fill(dev, t.dev_inputs, t.dev_targets);
    if (t.train_inputs.empty() || t.dev_inputs.empty()) {
        throw DatasetError("task '" + name + "' has no labeled examples in one of its splits");
    }
    return t;
}

void TrainRunConfig::validate() const {
    if (epochs < 1) throw UsageError("epochs must be >= 1");
    if (batch_size < 1 || eval_batch_size < 1) throw UsageError("batch size must be >= 1");
    if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) throw UsageError("warmup fraction must lie in [0, 1]");
    if (!(peak_lr > 0.0)) throw UsageError("peak learning rate must be positive");
    dropout.validate();
}

std::string hex_digest(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<double> predict(const ModelState& state, const TaskData& task, std::size_t batch_size,
                            PerturbationTrace* trace) {
    NoGradGuard no_grad;
    std::vector<double> preds;
    preds.reserve(task.dev_inputs.size());
    const std::span<const TokenSequence> inputs(task.dev_inputs);
    ForwardContext ctx;
    ctx.trace = trace;
    for (std::size_t start = 0; start < inputs.size(); start += batch_size) {
        const std::size_t n = std::min(batch_size, inputs.size() - start);
        const auto batch = make_batch(inputs.subspan(start, n), task.pad_id);
        const Tensor out = classify(state, encode(state, batch, ctx));
        const auto d = out.data();
        const std::size_t width = out.dim(1);
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = d.data() + i * width;
            if (task.regression) {
                preds.push_back(row[0]);
            } else {
                preds.push_back(static_cast<double>(std::max_element(row, row + width) - row));
            }
        }
    }
    return preds;
}

std::vector<double> predict(const ModelState& state, const TaskData& task, std::size_t batch_size) {
    return predict(state, task, batch_size, nullptr);
}

MetricResult evaluate(const ModelState& state, const TaskData& task, std::size_t batch_size) {
    return compute_metric(task.metric, predict(state, task, batch_size), task.dev_targets);
}

RunRecord finetune(const ModelState& pretrained, const TaskData& task, const TrainRunConfig& config,
                   const FinetuneHooks& hooks) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.config = config;

    ModelState state = pretrained.clone();
    state.zero_grad();
    reset_head(state, task.regression ? 1 : task.n_classes, task.regression, config.seed);
    config.noise.validate(state.config.n_layers);

    const std::size_t n = task.train_inputs.size();
    const std::size_t steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
    const auto schedule =
        ScheduleSpec::with_warmup_fraction(config.peak_lr, steps_per_epoch * config.epochs, config.warmup_fraction);
    auto params = trainable_parameters(state, config.decay_all);
    auto opt = OptimizerState::create(params.tensors, params.decay, config.adam);

    ForwardContext ctx;
    ctx.mode = Mode::train;
    ctx.noise = config.noise;
    ctx.dropout = resolve_dropout(config.noise, config.dropout, config.combine_dropout_with_noise);
    ctx.seed = config.seed;
    ctx.trace = hooks.train_trace;

    std::vector<TokenSequence> batch_inputs;
    std::vector<double> batch_targets;
    std::size_t global_step = 0;
    for (std::size_t epoch = 1; epoch <= config.epochs && !rec.aborted; ++epoch) {
        const auto order = epoch_order(n, config.seed, epoch);
        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t end = std::min(n, start + config.batch_size);
            batch_inputs.clear();
            batch_targets.clear();
            for (std::size_t i = start; i < end; ++i) {
                batch_inputs.push_back(task.train_inputs[order[i]]);
                batch_targets.push_back(task.train_targets[order[i]]);
            }
            const auto batch = make_batch(batch_inputs, task.pad_id);
            ctx.step = global_step;
            for (auto& p : params.tensors) p.zero_grad();
            Tensor loss = task_loss(task, classify(state, encode(state, batch, ctx)), batch_targets);
            const double value = loss.item();
            if (!std::isfinite(value)) {
                rec.aborted = true;
                rec.diagnostic = "non-finite training loss at epoch " + std::to_string(epoch) + ", step " +
                                 std::to_string(global_step + 1);
                break;
            }
            rec.step_losses.push_back(value);
            loss_sum += value;
            ++loss_count;
            backward(loss);
            ++global_step;
            // Update k (1-based) uses the schedule value at k.
            adamw_step(params.tensors, opt, lr_at(schedule, global_step));
        }
        if (rec.aborted) break;
        const auto metric = compute_metric(task.metric, predict(state, task, config.eval_batch_size, hooks.eval_trace),
                                           task.dev_targets);
        rec.epochs.push_back({epoch, loss_sum / static_cast<double>(std::max<std::size_t>(loss_count, 1)),
                              100.0 * metric.value, metric.degenerate});
    }
    state.zero_grad();
    if (!rec.aborted) rec.final_score = rec.epochs.back().dev_score;
    rec.checkpoint_id = hex_digest(serialize_checkpoint(state));
    rec.state = std::make_shared<const ModelState>(std::move(state));
    rec.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return rec;
}

std::string RunRecord::to_json(bool include_wall_clock) const {
    Json j;
    j["config"] = config_json(config);
    Json ep = Json::array();
    for (const auto& e : epochs) {
        ep.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"dev_score", e.dev_score},
                      {"degenerate", e.degenerate}});
    }
    j["epochs"] = ep;
    j["final_score"] = final_score;
    j["checkpoint_id"] = checkpoint_id;
    j["aborted"] = aborted;
    j["diagnostic"] = diagnostic;
    if (include_wall_clock) j["wall_clock_seconds"] = wall_clock_seconds;
    return dump_json(j);
}

Aggregate aggregate_scores(const std::vector<double>& scores) {
    Aggregate a;
    a.n = scores.size();
    if (scores.empty()) return a;
    double sum = 0.0;
    for (double s : scores) sum += s;
    a.mean = sum / static_cast<double>(a.n);
    double ss = 0.0;
    for (double s : scores) ss += (s - a.mean) * (s - a.mean);
    a.std = std::sqrt(ss / static_cast<double>(a.n));
    return a;
}

std::vector<const RunRecord*> GridResult::best_runs() const {
    std::vector<const RunRecord*> out;
    for (const auto& r : records) {
        if (!r.aborted && r.config.peak_lr == best_lr) out.push_back(&r);
    }
    return out;
}

GridResult grid_search(const ModelState& pretrained, const TaskData& task, const TrainRunConfig& base,
                       const std::vector<double>& lrs, const std::vector<std::uint64_t>& seeds,
                       const GridOptions& options) {
    if (lrs.empty() || seeds.empty()) throw UsageError("grid search needs at least one lr and one seed");
    auto sorted_lrs = lrs;
    auto sorted_seeds = seeds;
    std::sort(sorted_lrs.begin(), sorted_lrs.end());
    sorted_lrs.erase(std::unique(sorted_lrs.begin(), sorted_lrs.end()), sorted_lrs.end());
    std::sort(sorted_seeds.begin(), sorted_seeds.end());
    sorted_seeds.erase(std::unique(sorted_seeds.begin(), sorted_seeds.end()), sorted_seeds.end());

    std::vector<TrainRunConfig> cells;
    for (double lr : sorted_lrs) {
        for (auto seed : sorted_seeds) {
            TrainRunConfig c = base;
            c.peak_lr = lr;
            c.seed = seed;
            c.validate();
            cells.push_back(c);
        }
    }

    GridResult result;
    result.records.resize(cells.size());
    std::atomic<std::size_t> next{0};
    std::mutex callback_mutex;
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                RunRecord r = finetune(pretrained, task, cells[i]);
                if (!options.keep_states) r.state.reset();
                std::lock_guard lock(callback_mutex);
                if (options.on_record) options.on_record(r);
                result.records[i] = std::move(r);
            } catch (...) {
                std::lock_guard lock(callback_mutex);
                if (!failure) failure = std::current_exception();
                next = cells.size();
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, cells.size());
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    bool have_best = false;
    std::size_t aborted_total = 0;
    for (double lr : sorted_lrs) {
        std::vector<double> scores;
        std::size_t aborted = 0;
        for (const auto& r : result.records) {
            if (r.config.peak_lr != lr) continue;
            if (r.aborted) {
                ++aborted;
            } else {
                scores.push_back(r.final_score);
            }
        }
        aborted_total += aborted;
        LrSummary s{lr, aggregate_scores(scores), aborted};
        result.per_lr.push_back(s);
        // Strictly greater keeps the smaller lr on ties.
        if (s.score.n > 0 && (!have_best || s.score.mean > result.best.mean)) {
            have_best = true;
            result.best_lr = lr;
            result.best = s.score;
        }
    }
    result.any_aborted = aborted_total > 0;
    result.all_aborted = !have_best;
    return result;
}

}  // namespace hype
