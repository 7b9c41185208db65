#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hype/batch.hpp"

namespace hype {

enum class TaskKind { classification, regression };

struct Example {
    std::string text_a;
    std::optional<std::string> text_b;
    // Class index (classification) or score (regression); empty when the
    // record carries no gold label.
    std::optional<double> target;

    bool operator==(const Example&) const = default;
};

struct Dataset {
    std::string name;
    TaskKind kind = TaskKind::classification;
    std::vector<std::string> label_names;  // classification only
    std::vector<Example> examples;

    std::size_t size() const { return examples.size(); }
    std::size_t n_classes() const { return label_names.size(); }
    // Non-empty, targets in range / finite. Unlabeled examples are allowed.
    void validate() const;
};

enum class DataFormat { jsonl, tsv };

struct LoadOptions {
    DataFormat format = DataFormat::jsonl;
    // Inferred when absent: any string label means classification, otherwise
    // integral numbers mean classification and anything else regression.
    std::optional<TaskKind> kind;
    // Fixes the label-name order; otherwise names are sorted.
    std::vector<std::string> label_names;
};

DataFormat parse_data_format(const std::string& text);
DataFormat format_from_extension(const std::filesystem::path& path);

Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path, DataFormat format);

// Removes examples with no gold label.
Dataset drop_unlabeled(const Dataset& dataset);

/// Uniform sample of k examples without replacement, kept in original order.
/// Throws InputError when k exceeds the dataset size.
Dataset subsample(const Dataset& dataset, std::size_t k, std::uint64_t seed);

/// Rewrites class labels through `mapping` (old name -> new name), compacts the
/// label list and drops unlabeled examples. Throws MappingError for a label
/// present in the data but missing from the mapping.
Dataset remap_labels(const Dataset& dataset, const std::map<std::string, std::string>& mapping);

struct SpecialIds {
    std::size_t pad = 0;
    std::size_t unk = 1;
    std::size_t first = 2;  // [CLS]
    std::size_t sep = 3;
    std::size_t mask = 4;
};

/// Whitespace tokenizer over a fixed word list with a per-character fallback
/// for unknown words. Ids: specials, then single characters, then words.
class Tokenizer {
   public:
    explicit Tokenizer(const std::vector<std::string>& words);

    const SpecialIds& special() const { return special_; }
    std::size_t vocab_size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }
    std::vector<std::size_t> encode_text(const std::string& text) const;
    // First id that is neither a special token nor a single character.
    std::size_t first_word_id() const { return first_word_; }

    void save(const std::filesystem::path& path) const;
    static Tokenizer load(const std::filesystem::path& path);

   private:
    struct FromTokens {};
    Tokenizer(FromTokens, std::vector<std::string> tokens);
    SpecialIds special_;
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t first_word_ = 0;
};

struct Encoded {
    TokenSequence sequence;
    std::vector<std::uint8_t> attention_mask;
};

/// [FIRST] a [SEP] (b [SEP]) truncated longest-first to max_len; padded with
/// the pad id to exactly max_len when pad_to_max is set.
Encoded tokenize(const Tokenizer& tokenizer, const Example& example, std::size_t max_len = 128,
                 bool pad_to_max = true);

// Unpadded sequences for every example, in order.
std::vector<TokenSequence> tokenize_all(const Tokenizer& tokenizer, const Dataset& dataset, std::size_t max_len);

}  // namespace hype
