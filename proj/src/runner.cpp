#include "hype/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <mutex>
#include <set>
#include <sstream>

#include "hype/errors.hpp"
#include "hype/json_writer.hpp"
#include "hype/pretrain.hpp"
#include "hype/probe.hpp"
#include "hype/synthetic.hpp"

namespace hype {

namespace {

std::string lr_tag(double lr) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", lr);
    return buf;
}

std::vector<std::string> words_of(const Dataset& d, std::set<std::string>& seen) {
    std::vector<std::string> out;
    auto add = [&](const std::string& text) {
        std::istringstream in(text);
        std::string w;
        while (in >> w) {
            if (seen.insert(w).second) out.push_back(w);
        }
    };
    for (const auto& e : d.examples) {
        add(e.text_a);
        if (e.text_b) add(*e.text_b);
    }
    return out;
}

// Checkpoints a probe or similarity command analyses instead of the backbone.
const std::vector<std::filesystem::path>& analysis_checkpoints(const ExperimentConfig& c) {
    static const std::vector<std::filesystem::path> none;
    if (c.command == Command::probe) return c.probe.checkpoints;
    if (c.command == Command::similarity) return c.similarity.checkpoints;
    return none;
}

Tokenizer resolve_tokenizer(const ExperimentConfig& c, const SyntheticSuite* suite, const Dataset* train,
                            const Dataset* dev) {
    if (!c.data.vocab_path.empty()) return Tokenizer::load(c.data.vocab_path);
    if (!c.model.checkpoint.empty()) return Tokenizer::load(vocab_path_for(c.model.checkpoint));
    if (const auto& cks = analysis_checkpoints(c); !cks.empty()) return Tokenizer::load(vocab_path_for(cks.front()));
    if (suite) return suite->tokenizer();
    std::set<std::string> seen;
    auto words = words_of(*train, seen);
    auto more = words_of(*dev, seen);
    words.insert(words.end(), more.begin(), more.end());
    std::sort(words.begin(), words.end());
    return Tokenizer(words);
}

void save_with_vocab(const ModelState& state, const Tokenizer& tok, const std::filesystem::path& path) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    save_checkpoint(state, path);
    tok.save(vocab_path_for(path));
}

TrainRunConfig run_config(const ExperimentConfig& c, const Technique& t, const std::string& task) {
    TrainRunConfig r = c.train.base;
    r.task = task;
    r.checkpoint = c.model.checkpoint.empty() ? "pretrained:seed=" + std::to_string(c.pretrain.seed)
                                              : c.model.checkpoint.filename().string();
    r.noise = t.noise;
    r.dropout = t.dropout;
    r.combine_dropout_with_noise = t.combine_dropout_with_noise;
    return r;
}

const TaskData& pick_task(const std::vector<TaskData>& tasks, const std::string& name) {
    if (name.empty()) return tasks.front();
    for (const auto& t : tasks) {
        if (t.name == name) return t;
    }
    throw ConfigError("task '" + name + "' is not loaded");
}

struct NamedModel {
    std::string name;
    ModelState state;
};

std::vector<NamedModel> analysis_models(const std::vector<std::filesystem::path>& paths, const ModelState& backbone,
                                        const Tokenizer& tok) {
    std::vector<NamedModel> out;
    if (paths.empty()) {
        out.push_back({"backbone", backbone.clone()});
        return out;
    }
    for (const auto& p : paths) {
        ModelState s = load_checkpoint(p);
        if (s.config.vocab_size != tok.vocab_size()) {
            throw ConfigError("checkpoint " + p.string() + " was trained on a different vocabulary");
        }
        out.push_back({p.stem().string(), std::move(s)});
    }
    return out;
}

class Runner {
   public:
    Runner(const ExperimentConfig& c, std::ostream& log) : c_(c), log_(log), out_(c.output_dir) {}

    RunOutcome run() {
        write_text_file(out_ / "resolved_config.ini", resolved_config_text(c_));
        loaded_ = std::make_unique<LoadedTasks>(load_tasks(c_));
        if (analysis_checkpoints(c_).empty()) build_backbone();
        for (const auto& t : c_.techniques) {
            if (!analysis_checkpoints(c_).empty()) break;
            try {
                t.noise.validate(backbone_.config.n_layers);
            } catch (const Error& e) {
                throw ConfigError("technique '" + t.name + "': " + e.what());
            }
        }
        outcome_.report.command = to_string(c_.command);
        outcome_.report.name = c_.name;
        switch (c_.command) {
            case Command::pretrain: run_pretrain(); break;
            case Command::finetune: run_finetune(); break;
            case Command::grid: run_grids({c_.techniques.front()}); break;
            case Command::compare: run_grids(c_.techniques); break;
            case Command::probe: run_probe(); break;
            case Command::similarity: run_similarity(); break;
        }
        if (!c_.baseline.empty()) apply_baseline(outcome_.report, c_.baseline);
        outcome_.written = emit_report(outcome_.report, out_, c_.formats);
        return std::move(outcome_);
    }

    // Partial report plus the error, for a run that stopped early.
    void write_failure(const std::string& error) const {
        Json j = Json::object();
        j["command"] = to_string(c_.command);
        j["error"] = error;
        j["partial"] = report_to_json(outcome_.report);
        write_text_file(out_ / "failure.json", dump_json(j));
    }

   private:
    void build_backbone() {
        if (!c_.model.checkpoint.empty()) {
            backbone_ = load_checkpoint(c_.model.checkpoint);
            if (backbone_.config.vocab_size != loaded_->tokenizer.vocab_size()) {
                throw ConfigError("model.checkpoint vocabulary size " + std::to_string(backbone_.config.vocab_size) +
                                  " does not match its vocabulary file (" +
                                  std::to_string(loaded_->tokenizer.vocab_size()) + ")");
            }
            if (backbone_.config.max_seq_len < c_.data.max_len) {
                throw ConfigError("config key 'data.max_len': exceeds the checkpoint's max_seq_len");
            }
            return;
        }
        ModelConfig cfg = c_.model.config;
        cfg.vocab_size = loaded_->tokenizer.vocab_size();
        const auto special = loaded_->tokenizer.special();
        PretrainOptions opt = c_.pretrain.options;
        opt.mask_id = special.mask;
        opt.pad_id = special.pad;
        opt.first_maskable_id = special.mask + 1;
        log_ << "pretraining " << c_.pretrain.steps << " steps on " << loaded_->pretrain_corpus.size()
             << " sequences" << std::endl;
        auto pre = pretrain_synthetic(cfg, loaded_->pretrain_corpus, c_.pretrain.steps, c_.pretrain.seed, opt);
        auto& s = outcome_.report.summary;
        s.emplace_back("pretrain_steps", static_cast<double>(c_.pretrain.steps));
        s.emplace_back("pretrain_heldout_loss_init", pre.heldout_loss_init);
        s.emplace_back("pretrain_heldout_loss_final", pre.heldout_loss_final);
        s.emplace_back("pretrain_heldout_discrimination_accuracy", pre.heldout_discrimination_accuracy);
        log_ << "pretrain held-out loss " << format_real(pre.heldout_loss_init) << " -> "
             << format_real(pre.heldout_loss_final) << std::endl;
        backbone_ = std::move(pre.state);
    }

    void run_pretrain() {
        const auto path = out_ / "checkpoints" / "pretrained.ckpt";
        save_with_vocab(backbone_, loaded_->tokenizer, path);
        log_ << "wrote " << path.string() << std::endl;
    }

    void log_record(const std::string& task, const std::string& technique, const RunRecord& r) {
        std::lock_guard lock(log_mutex_);
        log_ << task << " " << technique << " lr=" << lr_tag(r.config.peak_lr) << " seed=" << r.config.seed;
        if (r.aborted) {
            log_ << " aborted: " << r.diagnostic << std::endl;
        } else {
            log_ << " score=" << format_real(r.final_score) << std::endl;
        }
    }

    void run_finetune() {
        const auto& t = c_.techniques.front();
        for (const auto& task : loaded_->tasks) {
            auto cfg = run_config(c_, t, task.name);
            cfg.seed = c_.train.seeds.front();
            RunRecord r = finetune(backbone_, task, cfg);
            log_record(task.name, t.name, r);
            write_text_file(out_ / "runs" / (task.name + ".json"), r.to_json());
            if (r.state) save_with_vocab(*r.state, loaded_->tokenizer, out_ / "checkpoints" / (task.name + ".ckpt"));

            TechniqueRow row;
            row.task = task.name;
            row.technique = t.name;
            row.metric = to_string(task.metric);
            row.mean = r.aborted ? 0.0 : r.final_score;
            row.n_seeds = r.aborted ? 0 : 1;
            row.best_lr = cfg.peak_lr;
            row.aborted = r.aborted ? 1 : 0;
            row.all_aborted = r.aborted;
            if (r.aborted) note_failure(task.name, t.name, r.diagnostic);
            outcome_.report.rows.push_back(row);
        }
    }

    void note_failure(const std::string& task, const std::string& technique, const std::string& why) {
        outcome_.failed = true;
        outcome_.report.failures.push_back(task + "/" + technique + ": " + why);
    }

    void run_grids(const std::vector<Technique>& techniques) {
        const bool keep = c_.save_checkpoints || c_.similarity.in_compare;
        for (const auto& task : loaded_->tasks) {
            for (const auto& t : techniques) {
                GridOptions go;
                go.threads = c_.threads;
                go.keep_states = keep;
                go.on_record = [&](const RunRecord& r) { log_record(task.name, t.name, r); };
                const auto grid =
                    grid_search(backbone_, task, run_config(c_, t, task.name), c_.train.lrs, c_.train.seeds, go);
                const auto dir = out_ / "runs" / task.name / t.name;
                for (const auto& r : grid.records) {
                    write_text_file(dir / ("lr" + lr_tag(r.config.peak_lr) + "_seed" + std::to_string(r.config.seed) +
                                           ".json"),
                                    r.to_json());
                }
                outcome_.report.rows.push_back(make_row(task.name, t.name, task.metric, grid));
                if (grid.all_aborted) note_failure(task.name, t.name, "every run aborted");
                const auto best = grid.best_runs();
                if (c_.save_checkpoints) {
                    for (const auto* r : best) {
                        if (!r->state) continue;
                        save_with_vocab(*r->state, loaded_->tokenizer,
                                        out_ / "checkpoints" /
                                            (task.name + "." + t.name + ".seed" + std::to_string(r->config.seed) +
                                             ".ckpt"));
                    }
                }
                if (c_.similarity.in_compare) similarity_of_runs(task, t.name, best);
            }
        }
    }

    // Mean curve (and std across seeds) of the best-lr runs.
    void similarity_of_runs(const TaskData& task, const std::string& technique,
                            const std::vector<const RunRecord*>& runs) {
        std::vector<std::vector<double>> curves;
        const auto& inputs = c_.similarity.split == "train" ? task.train_inputs : task.dev_inputs;
        for (const auto* r : runs) {
            if (r->state) curves.push_back(similarity_curve(*r->state, inputs, task.pad_id, c_.similarity.options).values);
        }
        LayerSeries s{technique, "similarity", task.name, {}, {}};
        if (!curves.empty()) {
            for (std::size_t l = 0; l < curves.front().size(); ++l) {
                std::vector<double> at;
                for (const auto& cv : curves) at.push_back(cv[l]);
                const auto a = aggregate_scores(at);
                s.values.push_back(a.mean);
                s.stds.push_back(a.std);
            }
        }
        outcome_.report.series.push_back(std::move(s));
    }

    void run_probe() {
        const auto& task = pick_task(loaded_->tasks, c_.probe.task);
        for (auto& m : analysis_models(c_.probe.checkpoints, backbone_, loaded_->tokenizer)) {
            const auto before = backbone_checksum(m.state);
            const auto result = probe_all_layers(m.state, task, c_.probe.seed, c_.probe.settings);
            if (backbone_checksum(m.state) != before) throw Error("probe modified the backbone of " + m.name);
            LayerSeries s{m.name, "probe", task.name, {}, {}};
            for (const auto& l : result.layers) s.values.push_back(l.score);
            {
                std::lock_guard lock(log_mutex_);
                log_ << "probe " << m.name << " on " << task.name << ":";
                for (double v : s.values) log_ << " " << format_real(v);
                log_ << std::endl;
            }
            outcome_.report.series.push_back(std::move(s));
        }
    }

    void run_similarity() {
        const auto& task = pick_task(loaded_->tasks, c_.similarity.task);
        const auto& inputs = c_.similarity.split == "train" ? task.train_inputs : task.dev_inputs;
        for (auto& m : analysis_models(c_.similarity.checkpoints, backbone_, loaded_->tokenizer)) {
            const auto curve = similarity_curve(m.state, inputs, task.pad_id, c_.similarity.options);
            outcome_.report.summary.emplace_back(m.name + ".samples", static_cast<double>(curve.samples));
            outcome_.report.summary.emplace_back(m.name + ".skipped", static_cast<double>(curve.skipped));
            {
                std::lock_guard lock(log_mutex_);
                log_ << "similarity " << m.name << " on " << task.name << ":";
                for (double v : curve.values) log_ << " " << format_real(v);
                log_ << std::endl;
            }
            outcome_.report.series.push_back({m.name, "similarity", task.name, curve.values, {}});
        }
    }

    const ExperimentConfig& c_;
    std::ostream& log_;
    std::filesystem::path out_;
    std::mutex log_mutex_;
    std::unique_ptr<LoadedTasks> loaded_;
    ModelState backbone_;
    RunOutcome outcome_;
};

}  // namespace

int exit_code_for(const std::exception& error) {
    if (dynamic_cast<const ConfigError*>(&error)) return kExitConfig;
    if (dynamic_cast<const IoError*>(&error)) return kExitIo;
    return kExitRun;
}

std::filesystem::path vocab_path_for(const std::filesystem::path& checkpoint) {
    return checkpoint.string() + ".vocab";
}

LoadedTasks load_tasks(const ExperimentConfig& c) {
    const auto& d = c.data;
    if (d.source == "synthetic") {
        const auto suite = generate_synthetic_suite(d.synthetic_seed, d.synthetic);
        LoadedTasks out{resolve_tokenizer(c, &suite, nullptr, nullptr), {}, {}};
        for (const auto& name : d.tasks) {
            const auto& t = suite.task(name);
            const Dataset train = d.subsample ? subsample(t.train, d.subsample, d.subsample_seed) : t.train;
            out.tasks.push_back(make_task_data(name, t.metric, train, t.dev, out.tokenizer, d.max_len));
        }
        for (const auto& e : suite.pretrain_corpus) {
            out.pretrain_corpus.push_back(tokenize(out.tokenizer, e, d.max_len, false).sequence);
        }
        return out;
    }
    LoadOptions lo;
    lo.format = d.format.empty() ? format_from_extension(d.train_path) : parse_data_format(d.format);
    const Dataset train_full = load_dataset(d.train_path, lo);
    LoadOptions dev_lo = lo;
    dev_lo.kind = train_full.kind;
    dev_lo.label_names = train_full.label_names;
    if (d.format.empty()) dev_lo.format = format_from_extension(d.dev_path);
    const Dataset dev = load_dataset(d.dev_path, dev_lo);
    const Dataset train = d.subsample ? subsample(train_full, d.subsample, d.subsample_seed) : train_full;
    LoadedTasks out{resolve_tokenizer(c, nullptr, &train_full, &dev), {}, {}};
    out.tasks.push_back(make_task_data(d.task, parse_metric_kind(d.metric), train, dev, out.tokenizer, d.max_len));
    // The full training split doubles as the unlabeled pretraining corpus.
    out.pretrain_corpus = tokenize_all(out.tokenizer, train_full, d.max_len);
    return out;
}

RunOutcome run_experiment(const ExperimentConfig& config, std::ostream& log) {
    config.validate();
    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec) throw IoError("cannot create output directory " + config.output_dir.string() + ": " + ec.message());
    Runner runner(config, log);
    try {
        return runner.run();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        try {
            runner.write_failure(e.what());
        } catch (const std::exception&) {
        }
        throw;
    }
}

}  // namespace hype
