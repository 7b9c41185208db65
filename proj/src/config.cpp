#include "hype/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hype/errors.hpp"
#include "hype/json_writer.hpp"

namespace hype {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// Reads one "section.key" value; every failure names the key.
class Value {
   public:
    Value(std::string key, std::string text) : key_(std::move(key)), text_(trim(text)) {}

    [[noreturn]] void fail(const std::string& why) const {
        throw ConfigError("config key '" + key_ + "': " + why + " (got '" + text_ + "')");
    }

    const std::string& str() const { return text_; }

    double real() const {
        double v = 0.0;
        const auto* end = text_.data() + text_.size();
        const auto [p, ec] = std::from_chars(text_.data(), end, v);
        if (ec != std::errc() || p != end) fail("expected a number");
        return v;
    }

    std::uint64_t u64() const {
        std::uint64_t v = 0;
        const auto* end = text_.data() + text_.size();
        const auto [p, ec] = std::from_chars(text_.data(), end, v);
        if (ec != std::errc() || p != end) fail("expected a non-negative integer");
        return v;
    }

    std::size_t size() const { return static_cast<std::size_t>(u64()); }

    bool boolean() const {
        if (text_ == "true" || text_ == "yes" || text_ == "1") return true;
        if (text_ == "false" || text_ == "no" || text_ == "0") return false;
        fail("expected true or false");
    }

    std::vector<double> reals() const {
        std::vector<double> out;
        for (const auto& item : split_list(text_)) out.push_back(Value(key_, item).real());
        if (out.empty()) fail("expected a non-empty list");
        return out;
    }

    std::vector<std::uint64_t> u64s() const {
        std::vector<std::uint64_t> out;
        for (const auto& item : split_list(text_)) out.push_back(Value(key_, item).u64());
        if (out.empty()) fail("expected a non-empty list");
        return out;
    }

    std::vector<std::string> strings() const { return split_list(text_); }

    std::vector<std::filesystem::path> paths() const {
        std::vector<std::filesystem::path> out;
        for (const auto& item : split_list(text_)) out.emplace_back(item);
        return out;
    }

    template <typename F>
    auto parsed(F&& parse) const {
        try {
            return parse(text_);
        } catch (const Error& e) {
            fail(e.what());
        }
    }

   private:
    std::string key_;
    std::string text_;
};

using Setters = std::map<std::string, std::function<void(const Value&)>>;

// Layer masks: "all", "top", "bottom" or a list of 1-based layers.
std::optional<std::set<std::size_t>> parse_layers(const Value& v, std::size_t n_layers) {
    if (v.str() == "all") return std::nullopt;
    if (v.str() == "top") return top_half_layers(n_layers);
    if (v.str() == "bottom") return bottom_half_layers(n_layers);
    std::set<std::size_t> out;
    for (auto l : v.u64s()) out.insert(static_cast<std::size_t>(l));
    return out;
}

std::string layers_text(const std::optional<std::set<std::size_t>>& mask) {
    if (!mask) return "all";
    std::string out;
    for (auto l : *mask) out += (out.empty() ? "" : ",") + std::to_string(l);
    return out;
}

// Layer masks depend on n_layers, so they are applied after [model] is read.
struct PendingLayers {
    std::size_t technique;
    Value value;
};

Setters technique_setters(Technique& t, std::vector<PendingLayers>& pending, std::size_t index) {
    return {
        {"noise", [&t](const Value& v) { t.noise.form = v.parsed(parse_noise_form); }},
        {"sigma", [&t](const Value& v) { t.noise.sigma = v.real(); }},
        {"position", [&t](const Value& v) { t.noise.position = v.parsed(parse_noise_position); }},
        {"layers", [&pending, index](const Value& v) { pending.push_back({index, v}); }},
        {"dropout", [&t](const Value& v) { t.dropout.rate = v.real(); }},
        {"combine_dropout_with_noise", [&t](const Value& v) { t.combine_dropout_with_noise = v.boolean(); }},
    };
}

void apply(const pt::ptree& section, const std::string& name, const Setters& setters) {
    for (const auto& [key, child] : section) {
        if (!child.empty()) throw ConfigError("config section '" + name + "': nested key '" + key + "'");
        const auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError("unknown config key '" + name + "." + key + "'");
        it->second(Value(name + "." + key, child.data()));
    }
}

// Boost's reader takes ';' comments only; '#' lines are blanked here so
// reported line numbers still match the file.
std::string strip_hash_comments(const std::string& text) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line)) {
        const auto t = trim(line);
        out += (!t.empty() && t[0] == '#') ? "\n" : line + "\n";
    }
    return out;
}

void check(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

void check_file(const std::filesystem::path& path, const std::string& key) {
    check(std::filesystem::is_regular_file(path), "config key '" + key + "': file not found: " + path.string());
}

}  // namespace

std::string to_string(Command command) {
    switch (command) {
        case Command::finetune: return "finetune";
        case Command::grid: return "grid";
        case Command::probe: return "probe";
        case Command::similarity: return "similarity";
        case Command::pretrain: return "pretrain";
        case Command::compare: return "compare";
    }
    return "finetune";
}

Command parse_command(const std::string& text) {
    for (auto c : {Command::finetune, Command::grid, Command::probe, Command::similarity, Command::pretrain,
                   Command::compare}) {
        if (to_string(c) == text) return c;
    }
    throw ConfigError("unknown command '" + text + "'");
}

OutputFormats parse_formats(const std::string& text) {
    OutputFormats f{false, false};
    for (const auto& item : split_list(text)) {
        if (item == "json") {
            f.json = true;
        } else if (item == "csv") {
            f.csv = true;
        } else {
            throw ConfigError("unknown output format '" + item + "'");
        }
    }
    if (!f.json && !f.csv) throw ConfigError("no output format selected");
    return f;
}

ExperimentConfig parse_config(const std::string& text) {
    pt::ptree tree;
    try {
        std::istringstream in(strip_hash_comments(text));
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config syntax: " + e.message() + " at line " + std::to_string(e.line()));
    }

    ExperimentConfig c;
    Technique single{"run", {}, {0.1}, false};
    std::vector<Technique> techniques;
    std::vector<PendingLayers> pending;
    bool saw_noise_sections = false;
    auto& d = c.data;
    auto& m = c.model.config;
    auto& po = c.pretrain.options;
    auto& tr = c.train.base;

    const std::map<std::string, Setters> sections = {
        {"experiment",
         {
             {"command", [&](const Value& v) { c.command = v.parsed(parse_command); }},
             {"name", [&](const Value& v) { c.name = v.str(); }},
             {"output_dir", [&](const Value& v) { c.output_dir = v.str(); }},
             {"threads", [&](const Value& v) { c.threads = v.size(); }},
             {"format", [&](const Value& v) { c.formats = v.parsed(parse_formats); }},
             {"baseline", [&](const Value& v) { c.baseline = v.str(); }},
             {"save_checkpoints", [&](const Value& v) { c.save_checkpoints = v.boolean(); }},
         }},
        {"data",
         {
             {"source", [&](const Value& v) { d.source = v.str(); }},
             {"synthetic_seed", [&](const Value& v) { d.synthetic_seed = v.u64(); }},
             {"corpus_size", [&](const Value& v) { d.synthetic.corpus_size = v.size(); }},
             {"train_size", [&](const Value& v) { d.synthetic.train_size = v.size(); }},
             {"dev_size", [&](const Value& v) { d.synthetic.dev_size = v.size(); }},
             {"label_noise", [&](const Value& v) { d.synthetic.label_noise = v.real(); }},
             {"tasks", [&](const Value& v) { d.tasks = v.strings(); }},
             {"task", [&](const Value& v) { d.task = v.str(); }},
             {"train_path", [&](const Value& v) { d.train_path = v.str(); }},
             {"dev_path", [&](const Value& v) { d.dev_path = v.str(); }},
             {"format", [&](const Value& v) { d.format = v.str(); }},
             {"metric", [&](const Value& v) { d.metric = v.str(); }},
             {"vocab_path", [&](const Value& v) { d.vocab_path = v.str(); }},
             {"max_len", [&](const Value& v) { d.max_len = v.size(); }},
             {"subsample", [&](const Value& v) { d.subsample = v.size(); }},
             {"subsample_seed", [&](const Value& v) { d.subsample_seed = v.u64(); }},
         }},
        {"model",
         {
             {"checkpoint", [&](const Value& v) { c.model.checkpoint = v.str(); }},
             {"n_layers", [&](const Value& v) { m.n_layers = v.size(); }},
             {"d_model", [&](const Value& v) { m.d_model = v.size(); }},
             {"n_heads", [&](const Value& v) { m.n_heads = v.size(); }},
             {"d_ff", [&](const Value& v) { m.d_ff = v.size(); }},
             {"max_seq_len", [&](const Value& v) { m.max_seq_len = v.size(); }},
         }},
        {"pretrain",
         {
             {"steps", [&](const Value& v) { c.pretrain.steps = v.size(); }},
             {"seed", [&](const Value& v) { c.pretrain.seed = v.u64(); }},
             {"batch_size", [&](const Value& v) { po.batch_size = v.size(); }},
             {"peak_lr", [&](const Value& v) { po.peak_lr = v.real(); }},
             {"warmup_fraction", [&](const Value& v) { po.warmup_fraction = v.real(); }},
             {"weight_decay", [&](const Value& v) { po.weight_decay = v.real(); }},
             {"dropout", [&](const Value& v) { po.dropout = v.real(); }},
             {"mask_prob", [&](const Value& v) { po.mask_prob = v.real(); }},
             {"heldout", [&](const Value& v) { po.heldout = v.size(); }},
             {"discrimination_weight", [&](const Value& v) { po.discrimination_weight = v.real(); }},
             {"corrupt_prob", [&](const Value& v) { po.corrupt_prob = v.real(); }},
         }},
        {"train",
         {
             {"lr", [&](const Value& v) { tr.peak_lr = v.real(); }},
             {"lrs", [&](const Value& v) { c.train.lrs = v.reals(); }},
             {"seeds", [&](const Value& v) { c.train.seeds = v.u64s(); }},
             {"epochs", [&](const Value& v) { tr.epochs = v.size(); }},
             {"batch_size", [&](const Value& v) { tr.batch_size = v.size(); }},
             {"warmup_fraction", [&](const Value& v) { tr.warmup_fraction = v.real(); }},
             {"beta1", [&](const Value& v) { tr.adam.beta1 = v.real(); }},
             {"beta2", [&](const Value& v) { tr.adam.beta2 = v.real(); }},
             {"eps", [&](const Value& v) { tr.adam.eps = v.real(); }},
             {"weight_decay", [&](const Value& v) { tr.adam.weight_decay = v.real(); }},
             {"decay_all", [&](const Value& v) { tr.decay_all = v.boolean(); }},
             {"eval_batch_size", [&](const Value& v) { tr.eval_batch_size = v.size(); }},
         }},
        {"noise",
         {
             {"form", [&](const Value& v) { single.noise.form = v.parsed(parse_noise_form); }},
             {"sigma", [&](const Value& v) { single.noise.sigma = v.real(); }},
             {"position", [&](const Value& v) { single.noise.position = v.parsed(parse_noise_position); }},
             {"layers", [&](const Value& v) { pending.push_back({0, v}); }},
         }},
        {"dropout",
         {
             {"rate", [&](const Value& v) { single.dropout.rate = v.real(); }},
             {"combine_with_noise", [&](const Value& v) { single.combine_dropout_with_noise = v.boolean(); }},
         }},
        {"probe",
         {
             {"checkpoints", [&](const Value& v) { c.probe.checkpoints = v.paths(); }},
             {"task", [&](const Value& v) { c.probe.task = v.str(); }},
             {"seed", [&](const Value& v) { c.probe.seed = v.u64(); }},
             {"lr", [&](const Value& v) { c.probe.settings.lr = v.real(); }},
             {"epochs", [&](const Value& v) { c.probe.settings.epochs = v.size(); }},
             {"batch_size", [&](const Value& v) { c.probe.settings.batch_size = v.size(); }},
         }},
        {"similarity",
         {
             {"checkpoints", [&](const Value& v) { c.similarity.checkpoints = v.paths(); }},
             {"task", [&](const Value& v) { c.similarity.task = v.str(); }},
             {"split", [&](const Value& v) { c.similarity.split = v.str(); }},
             {"include_first_token", [&](const Value& v) { c.similarity.options.include_first_token = v.boolean(); }},
             {"batch_size", [&](const Value& v) { c.similarity.options.batch_size = v.size(); }},
             {"in_compare", [&](const Value& v) { c.similarity.in_compare = v.boolean(); }},
         }},
    };

    // Pending technique layer masks index into `techniques` shifted by one;
    // index 0 is the single [noise] technique.
    for (const auto& [name, section] : tree) {
        if (section.data().size() && section.empty()) {
            throw ConfigError("config key '" + name + "' outside of any section");
        }
        const std::string prefix = "technique.";
        if (name.rfind(prefix, 0) == 0) {
            const std::string tname = name.substr(prefix.size());
            check(!tname.empty(), "config section '" + name + "': empty technique name");
            techniques.push_back({tname, {}, {0.1}, false});
            apply(section, name, technique_setters(techniques.back(), pending, techniques.size()));
            continue;
        }
        const auto it = sections.find(name);
        if (it == sections.end()) throw ConfigError("unknown config section '" + name + "'");
        if (name == "noise" || name == "dropout") saw_noise_sections = true;
        apply(section, name, it->second);
    }

    for (const auto& p : pending) {
        auto& t = p.technique == 0 ? single : techniques[p.technique - 1];
        t.noise.layer_mask = parse_layers(p.value, m.n_layers);
    }
    if (c.command == Command::compare) {
        check(!techniques.empty(), "compare needs at least one [technique.NAME] section");
        check(!saw_noise_sections, "compare takes techniques from [technique.NAME] sections, not [noise]/[dropout]");
        c.techniques = std::move(techniques);
    } else {
        check(techniques.empty(), "[technique.NAME] sections are only used by compare");
        c.techniques = {single};
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    auto config = parse_config(ss.str());
    resolve_paths(config, path.parent_path());
    return config;
}

void resolve_paths(ExperimentConfig& config, const std::filesystem::path& base) {
    auto fix = [&base](std::filesystem::path& p) {
        if (!p.empty() && p.is_relative()) p = base / p;
    };
    fix(config.output_dir);
    fix(config.data.train_path);
    fix(config.data.dev_path);
    fix(config.data.vocab_path);
    fix(config.model.checkpoint);
    for (auto& p : config.probe.checkpoints) fix(p);
    for (auto& p : config.similarity.checkpoints) fix(p);
}

void ExperimentConfig::validate() const {
    check(threads >= 1, "config key 'experiment.threads': must be at least 1");
    check(!output_dir.empty(), "config key 'experiment.output_dir': must not be empty");
    check(data.source == "synthetic" || data.source == "files",
          "config key 'data.source': expected synthetic or files (got '" + data.source + "')");
    check(data.max_len >= 2, "config key 'data.max_len': must be at least 2");
    MetricKind metric{};
    if (data.source == "synthetic") {
        check(!data.tasks.empty(), "config key 'data.tasks': no tasks selected");
        for (const auto& t : data.tasks) {
            check(t == "acceptability" || t == "match" || t == "similarity",
                  "config key 'data.tasks': unknown synthetic task '" + t + "'");
        }
        check(data.synthetic.train_size > 0 && data.synthetic.dev_size > 0,
              "config keys 'data.train_size'/'data.dev_size': must be positive");
        check(data.subsample <= data.synthetic.train_size, "config key 'data.subsample': exceeds data.train_size");
    } else {
        check_file(data.train_path, "data.train_path");
        check_file(data.dev_path, "data.dev_path");
        try {
            metric = parse_metric_kind(data.metric);
            if (!data.format.empty()) parse_data_format(data.format);
        } catch (const Error& e) {
            throw ConfigError(std::string("config section 'data': ") + e.what());
        }
        (void)metric;
    }
    if (!data.vocab_path.empty()) check_file(data.vocab_path, "data.vocab_path");
    if (!model.checkpoint.empty()) {
        check_file(model.checkpoint, "model.checkpoint");
        if (data.vocab_path.empty()) {
            check_file(model.checkpoint.string() + ".vocab", "model.checkpoint (vocabulary file)");
        }
    } else {
        ModelConfig probe_cfg = model.config;
        probe_cfg.vocab_size = 8;
        try {
            probe_cfg.validate();
        } catch (const Error& e) {
            throw ConfigError(std::string("config section 'model': ") + e.what());
        }
        check(data.max_len <= model.config.max_seq_len, "config key 'data.max_len': exceeds model.max_seq_len");
        // With a checkpoint the layer count is only known once it is loaded.
        for (const auto& t : techniques) {
            try {
                t.noise.validate(model.config.n_layers);
            } catch (const Error& e) {
                throw ConfigError("technique '" + t.name + "': " + e.what());
            }
        }
    }
    check(pretrain.options.batch_size > 0, "config key 'pretrain.batch_size': must be positive");
    check(pretrain.options.peak_lr > 0.0, "config key 'pretrain.peak_lr': must be positive");
    check(pretrain.options.mask_prob > 0.0 && pretrain.options.mask_prob < 1.0,
          "config key 'pretrain.mask_prob': must lie in (0, 1)");
    check(pretrain.options.corrupt_prob >= 0.0 && pretrain.options.corrupt_prob <= 1.0,
          "config key 'pretrain.corrupt_prob': must lie in [0, 1]");
    check(pretrain.options.discrimination_weight >= 0.0, "config key 'pretrain.discrimination_weight': must be >= 0");
    check(command != Command::pretrain || model.checkpoint.empty(),
          "config key 'model.checkpoint': the pretrain command builds its own backbone");

    TrainRunConfig t = train.base;
    try {
        t.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("config section 'train': ") + e.what());
    }
    check(train.base.peak_lr > 0.0, "config key 'train.lr': must be positive");
    for (double lr : train.lrs) check(lr > 0.0, "config key 'train.lrs': every learning rate must be positive");

    std::set<std::string> names;
    for (const auto& tq : techniques) {
        check(names.insert(tq.name).second, "duplicate technique '" + tq.name + "'");
        const std::string where = command == Command::compare ? "config section 'technique." + tq.name + "'"
                                                              : std::string("config section 'noise'/'dropout'");
        try {
            tq.dropout.validate();
            if (tq.noise.sigma < 0.0) throw ConfigError("sigma must be non-negative");
            if (tq.noise.form != NoiseForm::none && tq.noise.sigma == 0.0) {
                throw ConfigError("noise form set but sigma is 0");
            }
            if (model.checkpoint.empty()) tq.noise.validate(model.config.n_layers);
        } catch (const Error& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    if (!baseline.empty()) {
        check(command == Command::compare, "config key 'experiment.baseline': only used by compare");
        check(names.count(baseline) > 0, "config key 'experiment.baseline': no technique named '" + baseline + "'");
    }

    auto check_task = [&](const std::string& task, const std::string& key) {
        if (task.empty()) return;
        const bool known = data.source == "synthetic"
                               ? std::find(data.tasks.begin(), data.tasks.end(), task) != data.tasks.end()
                               : task == data.task;
        check(known, "config key '" + key + "': task '" + task + "' is not among the loaded tasks");
    };
    check_task(probe.task, "probe.task");
    check_task(similarity.task, "similarity.task");
    for (const auto& [paths, key] : {std::pair{&probe.checkpoints, "probe.checkpoints"},
                                     std::pair{&similarity.checkpoints, "similarity.checkpoints"}}) {
        for (const auto& p : *paths) {
            check_file(p, key);
            if (data.vocab_path.empty()) check_file(p.string() + ".vocab", std::string(key) + " (vocabulary file)");
        }
    }
    check(probe.settings.epochs >= 1 && probe.settings.batch_size >= 1 && probe.settings.lr > 0.0,
          "config section 'probe': epochs, batch_size and lr must be positive");
    check(similarity.split == "dev" || similarity.split == "train",
          "config key 'similarity.split': expected dev or train");
    check(similarity.options.batch_size >= 1, "config key 'similarity.batch_size': must be positive");
}

std::string resolved_config_text(const ExperimentConfig& c) {
    std::ostringstream out;
    auto real = [](double x) { return format_real(x); };
    auto join = [](const auto& items, auto&& fmt) {
        std::string s;
        for (const auto& x : items) s += (s.empty() ? "" : ",") + fmt(x);
        return s;
    };
    auto path_str = [](const std::filesystem::path& p) { return p.string(); };
    auto u64_str = [](std::uint64_t x) { return std::to_string(x); };
    auto b = [](bool x) { return std::string(x ? "true" : "false"); };
    std::string formats = c.formats.json ? (c.formats.csv ? "json,csv" : "json") : "csv";

    out << "[experiment]\n"
        << "command = " << to_string(c.command) << "\n"
        << "name = " << c.name << "\n"
        << "output_dir = " << c.output_dir.string() << "\n"
        << "threads = " << c.threads << "\n"
        << "format = " << formats << "\n";
    if (!c.baseline.empty()) out << "baseline = " << c.baseline << "\n";
    out << "save_checkpoints = " << b(c.save_checkpoints) << "\n\n";

    const auto& d = c.data;
    out << "[data]\n"
        << "source = " << d.source << "\n";
    if (d.source == "synthetic") {
        out << "synthetic_seed = " << d.synthetic_seed << "\n"
            << "corpus_size = " << d.synthetic.corpus_size << "\n"
            << "train_size = " << d.synthetic.train_size << "\n"
            << "dev_size = " << d.synthetic.dev_size << "\n"
            << "label_noise = " << real(d.synthetic.label_noise) << "\n"
            << "tasks = " << join(d.tasks, [](const std::string& s) { return s; }) << "\n";
    } else {
        out << "task = " << d.task << "\n"
            << "train_path = " << d.train_path.string() << "\n"
            << "dev_path = " << d.dev_path.string() << "\n";
        if (!d.format.empty()) out << "format = " << d.format << "\n";
        out << "metric = " << d.metric << "\n";
    }
    if (!d.vocab_path.empty()) out << "vocab_path = " << d.vocab_path.string() << "\n";
    out << "max_len = " << d.max_len << "\n"
        << "subsample = " << d.subsample << "\n"
        << "subsample_seed = " << d.subsample_seed << "\n\n";

    const auto& m = c.model.config;
    out << "[model]\n";
    if (!c.model.checkpoint.empty()) out << "checkpoint = " << c.model.checkpoint.string() << "\n";
    out << "n_layers = " << m.n_layers << "\n"
        << "d_model = " << m.d_model << "\n"
        << "n_heads = " << m.n_heads << "\n"
        << "d_ff = " << m.d_ff << "\n"
        << "max_seq_len = " << m.max_seq_len << "\n\n";

    const auto& po = c.pretrain.options;
    out << "[pretrain]\n"
        << "steps = " << c.pretrain.steps << "\n"
        << "seed = " << c.pretrain.seed << "\n"
        << "batch_size = " << po.batch_size << "\n"
        << "peak_lr = " << real(po.peak_lr) << "\n"
        << "warmup_fraction = " << real(po.warmup_fraction) << "\n"
        << "weight_decay = " << real(po.weight_decay) << "\n"
        << "dropout = " << real(po.dropout) << "\n"
        << "mask_prob = " << real(po.mask_prob) << "\n"
        << "heldout = " << po.heldout << "\n"
        << "discrimination_weight = " << real(po.discrimination_weight) << "\n"
        << "corrupt_prob = " << real(po.corrupt_prob) << "\n\n";

    const auto& t = c.train.base;
    out << "[train]\n"
        << "lr = " << real(t.peak_lr) << "\n"
        << "lrs = " << join(c.train.lrs, real) << "\n"
        << "seeds = " << join(c.train.seeds, u64_str) << "\n"
        << "epochs = " << t.epochs << "\n"
        << "batch_size = " << t.batch_size << "\n"
        << "warmup_fraction = " << real(t.warmup_fraction) << "\n"
        << "beta1 = " << real(t.adam.beta1) << "\n"
        << "beta2 = " << real(t.adam.beta2) << "\n"
        << "eps = " << real(t.adam.eps) << "\n"
        << "weight_decay = " << real(t.adam.weight_decay) << "\n"
        << "decay_all = " << b(t.decay_all) << "\n"
        << "eval_batch_size = " << t.eval_batch_size << "\n\n";

    if (c.command == Command::compare) {
        for (const auto& tq : c.techniques) {
            out << "[technique." << tq.name << "]\n"
                << "noise = " << to_string(tq.noise.form) << "\n"
                << "sigma = " << real(tq.noise.sigma) << "\n"
                << "position = " << to_string(tq.noise.position) << "\n"
                << "layers = " << layers_text(tq.noise.layer_mask) << "\n"
                << "dropout = " << real(tq.dropout.rate) << "\n"
                << "combine_dropout_with_noise = " << b(tq.combine_dropout_with_noise) << "\n\n";
        }
    } else {
        const auto& tq = c.techniques.front();
        out << "[noise]\n"
            << "form = " << to_string(tq.noise.form) << "\n"
            << "sigma = " << real(tq.noise.sigma) << "\n"
            << "position = " << to_string(tq.noise.position) << "\n"
            << "layers = " << layers_text(tq.noise.layer_mask) << "\n\n"
            << "[dropout]\n"
            << "rate = " << real(tq.dropout.rate) << "\n"
            << "combine_with_noise = " << b(tq.combine_dropout_with_noise) << "\n\n";
    }

    out << "[probe]\n";
    if (!c.probe.checkpoints.empty()) out << "checkpoints = " << join(c.probe.checkpoints, path_str) << "\n";
    if (!c.probe.task.empty()) out << "task = " << c.probe.task << "\n";
    out << "seed = " << c.probe.seed << "\n"
        << "lr = " << real(c.probe.settings.lr) << "\n"
        << "epochs = " << c.probe.settings.epochs << "\n"
        << "batch_size = " << c.probe.settings.batch_size << "\n\n";

    out << "[similarity]\n";
    if (!c.similarity.checkpoints.empty()) {
        out << "checkpoints = " << join(c.similarity.checkpoints, path_str) << "\n";
    }
    if (!c.similarity.task.empty()) out << "task = " << c.similarity.task << "\n";
    out << "split = " << c.similarity.split << "\n"
        << "include_first_token = " << b(c.similarity.options.include_first_token) << "\n"
        << "batch_size = " << c.similarity.options.batch_size << "\n"
        << "in_compare = " << b(c.similarity.in_compare) << "\n";
    return out.str();
}

}  // namespace hype
