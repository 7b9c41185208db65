#include "hype/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <variant>

#include "hype/errors.hpp"
#include "hype/rng.hpp"
#include "json.hpp"

namespace hype {

namespace {

using json = nlohmann::json;

// Label as read from a record, before the label space is fixed.
using RawLabel = std::variant<std::monostate, std::string, double>;

struct RawRecord {
    Example example;
    RawLabel label;
    std::size_t line;
};

bool is_missing_label(const std::string& s) { return s.empty() || s == "-"; }

std::optional<double> parse_number(const std::string& s) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return v;
}

std::vector<RawRecord> read_jsonl(std::istream& in) {
    std::vector<RawRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
        }
        if (!obj.is_object()) throw ParseError("record is not a JSON object", lineno);
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (it.key() != "text_a" && it.key() != "text_b" && it.key() != "label") {
                throw ParseError("unexpected field '" + it.key() + "'", lineno);
            }
        }
        RawRecord rec;
        rec.line = lineno;
        if (!obj.contains("text_a") || !obj["text_a"].is_string()) {
            throw ParseError("missing string field text_a", lineno);
        }
        rec.example.text_a = obj["text_a"].get<std::string>();
        if (obj.contains("text_b") && !obj["text_b"].is_null()) {
            if (!obj["text_b"].is_string()) throw ParseError("text_b must be a string", lineno);
            rec.example.text_b = obj["text_b"].get<std::string>();
        }
        if (obj.contains("label")) {
            const auto& l = obj["label"];
            if (l.is_string()) {
                const auto s = l.get<std::string>();
                if (!is_missing_label(s)) rec.label = s;
            } else if (l.is_number()) {
                rec.label = l.get<double>();
            } else if (!l.is_null()) {
                throw ParseError("label must be a string, number or null", lineno);
            }
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find('\t', start);
        cols.push_back(line.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return cols;
}

std::vector<RawRecord> read_tsv(std::istream& in) {
    std::vector<RawRecord> out;
    std::string line;
    if (!std::getline(in, line)) return out;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_tabs(line);
    int col_a = -1, col_b = -1, col_label = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "text_a") {
            col_a = static_cast<int>(i);
        } else if (header[i] == "text_b") {
            col_b = static_cast<int>(i);
        } else if (header[i] == "label") {
            col_label = static_cast<int>(i);
        } else {
            throw ParseError("unexpected column '" + header[i] + "'", 1);
        }
    }
    if (col_a < 0) throw ParseError("header lacks a text_a column", 1);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cols = split_tabs(line);
        if (cols.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " columns, found " +
                                 std::to_string(cols.size()),
                             lineno);
        }
        RawRecord rec;
        rec.line = lineno;
        rec.example.text_a = cols[static_cast<std::size_t>(col_a)];
        if (col_b >= 0 && !cols[static_cast<std::size_t>(col_b)].empty()) {
            rec.example.text_b = cols[static_cast<std::size_t>(col_b)];
        }
        if (col_label >= 0) {
            const auto& s = cols[static_cast<std::size_t>(col_label)];
            if (!is_missing_label(s)) {
                if (auto num = parse_number(s)) {
                    rec.label = *num;
                } else {
                    rec.label = s;
                }
            }
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::string label_text(const RawLabel& l) {
    if (const auto* s = std::get_if<std::string>(&l)) return *s;
    const double v = std::get<double>(l);
    std::ostringstream out;
    out << v;
    return out.str();
}

}  // namespace

void Dataset::validate() const {
    if (examples.empty()) throw DatasetError("dataset '" + name + "' is empty");
    for (const auto& ex : examples) {
        if (!ex.target) continue;
        const double t = *ex.target;
        if (!std::isfinite(t)) throw DatasetError("dataset '" + name + "' has a non-finite target");
        if (kind == TaskKind::classification) {
            if (t < 0 || std::floor(t) != t || t >= static_cast<double>(label_names.size())) {
                throw DatasetError("dataset '" + name + "' has class target " + std::to_string(t) + " outside [0, " +
                                   std::to_string(label_names.size()) + ")");
            }
        }
    }
}

DataFormat parse_data_format(const std::string& text) {
    if (text == "jsonl") return DataFormat::jsonl;
    if (text == "tsv") return DataFormat::tsv;
    throw ConfigError("unknown data format '" + text + "' (expected jsonl|tsv)");
}

DataFormat format_from_extension(const std::filesystem::path& path) {
    return path.extension() == ".tsv" ? DataFormat::tsv : DataFormat::jsonl;
}

Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset: " + path.string());
    auto records = options.format == DataFormat::jsonl ? read_jsonl(in) : read_tsv(in);

    Dataset ds;
    ds.name = path.stem().string();
    if (records.empty()) throw DatasetError("dataset '" + ds.name + "' is empty");

    bool any_string = false, all_integral = true;
    for (const auto& r : records) {
        if (std::holds_alternative<std::string>(r.label)) any_string = true;
        if (const auto* d = std::get_if<double>(&r.label)) all_integral = all_integral && std::floor(*d) == *d && *d >= 0;
    }
    ds.kind = options.kind.value_or(any_string || all_integral ? TaskKind::classification : TaskKind::regression);

    if (ds.kind == TaskKind::regression) {
        for (auto& r : records) {
            if (const auto* s = std::get_if<std::string>(&r.label)) {
                throw ParseError("regression label '" + *s + "' is not a number", r.line);
            }
            if (const auto* d = std::get_if<double>(&r.label)) r.example.target = *d;
            ds.examples.push_back(std::move(r.example));
        }
        ds.validate();
        return ds;
    }

    if (!options.label_names.empty()) {
        ds.label_names = options.label_names;
    } else if (any_string) {
        std::set<std::string> names;
        for (const auto& r : records) {
            if (!std::holds_alternative<std::monostate>(r.label)) names.insert(label_text(r.label));
        }
        ds.label_names.assign(names.begin(), names.end());
    } else {
        std::size_t max_index = 1;
        for (const auto& r : records) {
            if (const auto* d = std::get_if<double>(&r.label)) max_index = std::max(max_index, static_cast<std::size_t>(*d));
        }
        for (std::size_t i = 0; i <= max_index; ++i) ds.label_names.push_back(std::to_string(i));
    }

    for (auto& r : records) {
        if (!std::holds_alternative<std::monostate>(r.label)) {
            const std::string text = label_text(r.label);
            auto it = std::find(ds.label_names.begin(), ds.label_names.end(), text);
            if (it != ds.label_names.end()) {
                r.example.target = static_cast<double>(it - ds.label_names.begin());
            } else if (const auto* d = std::get_if<double>(&r.label);
                       d && !any_string && options.label_names.empty()) {
                r.example.target = *d;
            } else {
                throw ParseError("label '" + text + "' is not among the known labels", r.line);
            }
        }
        ds.examples.push_back(std::move(r.example));
    }
    ds.validate();
    return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path, DataFormat format) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write dataset: " + path.string());
    auto label_string = [&](const Example& ex) -> std::optional<std::string> {
        if (!ex.target) return std::nullopt;
        if (dataset.kind == TaskKind::classification) return dataset.label_names.at(static_cast<std::size_t>(*ex.target));
        return json(*ex.target).dump();
    };
    if (format == DataFormat::jsonl) {
        for (const auto& ex : dataset.examples) {
            nlohmann::ordered_json obj;
            obj["text_a"] = ex.text_a;
            if (ex.text_b) obj["text_b"] = *ex.text_b;
            if (ex.target) {
                if (dataset.kind == TaskKind::classification) {
                    obj["label"] = dataset.label_names.at(static_cast<std::size_t>(*ex.target));
                } else {
                    obj["label"] = *ex.target;
                }
            } else {
                obj["label"] = nullptr;
            }
            out << obj.dump() << '\n';
        }
    } else {
        out << "text_a\ttext_b\tlabel\n";
        for (const auto& ex : dataset.examples) {
            if (ex.text_a.find('\t') != std::string::npos || (ex.text_b && ex.text_b->find('\t') != std::string::npos)) {
                throw IoError("cannot write text containing a tab to TSV");
            }
            out << ex.text_a << '\t' << ex.text_b.value_or("") << '\t' << label_string(ex).value_or("") << '\n';
        }
    }
    if (!out) throw IoError("failed writing dataset: " + path.string());
}

Dataset drop_unlabeled(const Dataset& dataset) {
    Dataset out = dataset;
    out.examples.clear();
    for (const auto& ex : dataset.examples) {
        if (ex.target) out.examples.push_back(ex);
    }
    return out;
}

Dataset subsample(const Dataset& dataset, std::size_t k, std::uint64_t seed) {
    if (k > dataset.size()) {
        throw InputError("subsample: k=" + std::to_string(k) + " exceeds dataset size " +
                         std::to_string(dataset.size()));
    }
    std::vector<std::size_t> idx(dataset.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    RngStream rng({seed, 0, 0, Purpose::subsample});
    // Partial Fisher-Yates: the first k slots become the sample.
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t span = idx.size() - i;
        const std::size_t j = i + static_cast<std::size_t>(rng() % span);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    Dataset out = dataset;
    out.examples.clear();
    for (auto i : idx) out.examples.push_back(dataset.examples[i]);
    return out;
}

Dataset remap_labels(const Dataset& dataset, const std::map<std::string, std::string>& mapping) {
    if (dataset.kind != TaskKind::classification) throw UsageError("remap_labels requires a classification dataset");
    std::set<std::size_t> present;
    for (const auto& ex : dataset.examples) {
        if (ex.target) present.insert(static_cast<std::size_t>(*ex.target));
    }
    std::vector<std::string> new_names;
    std::vector<std::size_t> new_index(dataset.label_names.size(), 0);
    for (std::size_t i = 0; i < dataset.label_names.size(); ++i) {
        const auto& name = dataset.label_names[i];
        auto it = mapping.find(name);
        if (it == mapping.end()) {
            if (present.count(i)) throw MappingError("label '" + name + "' has no mapping");
            continue;
        }
        auto pos = std::find(new_names.begin(), new_names.end(), it->second);
        if (pos == new_names.end()) {
            new_names.push_back(it->second);
            pos = new_names.end() - 1;
        }
        new_index[i] = static_cast<std::size_t>(pos - new_names.begin());
    }
    // Names only reachable from absent labels would leave gaps; keep only those used.
    std::vector<bool> used(new_names.size(), false);
    for (auto i : present) used[new_index[i]] = true;
    std::vector<std::size_t> compact(new_names.size(), 0);
    std::vector<std::string> final_names;
    for (std::size_t j = 0; j < new_names.size(); ++j) {
        if (!used[j]) continue;
        compact[j] = final_names.size();
        final_names.push_back(new_names[j]);
    }

    Dataset out;
    out.name = dataset.name;
    out.kind = dataset.kind;
    out.label_names = std::move(final_names);
    for (const auto& ex : dataset.examples) {
        if (!ex.target) continue;
        Example e = ex;
        e.target = static_cast<double>(compact[new_index[static_cast<std::size_t>(*ex.target)]]);
        out.examples.push_back(std::move(e));
    }
    out.validate();
    return out;
}

Tokenizer::Tokenizer(const std::vector<std::string>& words) {
    std::vector<std::string> tokens = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
    for (char c : std::string("abcdefghijklmnopqrstuvwxyz0123456789.,;:!?'\"-()")) tokens.emplace_back(1, c);
    const std::size_t first_word = tokens.size();
    std::set<std::string> seen(tokens.begin(), tokens.end());
    for (const auto& w : words) {
        if (w.empty() || w.find_first_of(" \t\r\n") != std::string::npos) {
            throw UsageError("tokenizer word '" + w + "' is empty or contains whitespace");
        }
        if (seen.insert(w).second) tokens.push_back(w);
    }
    *this = Tokenizer(FromTokens{}, std::move(tokens));
    first_word_ = first_word;
}

Tokenizer::Tokenizer(FromTokens, std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], i);
    first_word_ = tokens_.size();
    for (std::size_t i = 5; i < tokens_.size(); ++i) {
        if (tokens_[i].size() > 1) {
            first_word_ = i;
            break;
        }
    }
}

std::vector<std::size_t> Tokenizer::encode_text(const std::string& text) const {
    std::vector<std::size_t> out;
    std::istringstream words(text);
    std::string word;
    while (words >> word) {
        for (auto& c : word) {
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        }
        if (auto it = index_.find(word); it != index_.end() && it->second >= 5) {
            out.push_back(it->second);
            continue;
        }
        // Character fallback; every non-ASCII code point becomes [UNK].
        for (std::size_t i = 0; i < word.size();) {
            const auto byte = static_cast<unsigned char>(word[i]);
            std::size_t len = 1;
            if (byte >= 0xF0) {
                len = 4;
            } else if (byte >= 0xE0) {
                len = 3;
            } else if (byte >= 0xC0) {
                len = 2;
            }
            if (len == 1) {
                auto it = index_.find(std::string(1, word[i]));
                out.push_back(it != index_.end() ? it->second : special_.unk);
            } else {
                out.push_back(special_.unk);
            }
            i += len;
        }
    }
    return out;
}

void Tokenizer::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write vocabulary: " + path.string());
    out << "# hype-vocab v1\n";
    for (const auto& t : tokens_) out << t << '\n';
    if (!out) throw IoError("failed writing vocabulary: " + path.string());
}

Tokenizer Tokenizer::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open vocabulary: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "# hype-vocab v1") throw FormatError("vocabulary: missing header");
    std::vector<std::string> tokens;
    while (std::getline(in, line)) {
        if (!line.empty()) tokens.push_back(line);
    }
    const std::vector<std::string> expected = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
    if (tokens.size() < expected.size() || !std::equal(expected.begin(), expected.end(), tokens.begin())) {
        throw FormatError("vocabulary: special tokens missing or out of order");
    }
    return Tokenizer(FromTokens{}, std::move(tokens));
}

Encoded tokenize(const Tokenizer& tokenizer, const Example& example, std::size_t max_len, bool pad_to_max) {
    const auto& sp = tokenizer.special();
    auto a = tokenizer.encode_text(example.text_a);
    std::vector<std::size_t> b;
    const bool pair = example.text_b.has_value();
    if (pair) b = tokenizer.encode_text(*example.text_b);
    const std::size_t specials = pair ? 3 : 2;
    const std::size_t budget = max_len > specials ? max_len - specials : 0;
    while (a.size() + b.size() > budget) {
        if (a.size() >= b.size()) {
            a.pop_back();
        } else {
            b.pop_back();
        }
    }

    Encoded enc;
    auto& ids = enc.sequence.ids;
    auto& seg = enc.sequence.segments;
    ids.push_back(sp.first);
    ids.insert(ids.end(), a.begin(), a.end());
    ids.push_back(sp.sep);
    seg.assign(ids.size(), 0);
    if (pair) {
        ids.insert(ids.end(), b.begin(), b.end());
        ids.push_back(sp.sep);
        seg.resize(ids.size(), 1);
    }
    if (ids.size() > max_len) {
        ids.resize(max_len);
        seg.resize(max_len);
    }
    enc.attention_mask.assign(ids.size(), 1);
    if (pad_to_max) {
        ids.resize(max_len, sp.pad);
        seg.resize(max_len, 0);
        enc.attention_mask.resize(max_len, 0);
    }
    return enc;
}

std::vector<TokenSequence> tokenize_all(const Tokenizer& tokenizer, const Dataset& dataset, std::size_t max_len) {
    std::vector<TokenSequence> out;
    out.reserve(dataset.size());
    for (const auto& ex : dataset.examples) out.push_back(tokenize(tokenizer, ex, max_len, false).sequence);
    return out;
}

}  // namespace hype
