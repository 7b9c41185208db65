#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hype/data.hpp"
#include "hype/metrics.hpp"

namespace hype {

struct SyntheticTask {
    std::string name;
    MetricKind metric;
    Dataset train;
    Dataset dev;
};

/// A toy language with topics, synonyms and number agreement, plus three
/// tasks derived from it:
///   acceptability - grammatical vs. corrupted sentence (Matthews)
///   match         - is sentence b a paraphrase of a (F1)
///   similarity    - graded 0..5 overlap of latent slots (Pearson/Spearman)
struct SyntheticSuite {
    std::vector<std::string> words;
    std::vector<Example> pretrain_corpus;  // unlabeled; pairs share a topic
    std::vector<SyntheticTask> tasks;

    Tokenizer tokenizer() const { return Tokenizer(words); }
    const SyntheticTask& task(const std::string& name) const;
};

struct SyntheticOptions {
    std::size_t corpus_size = 20000;
    std::size_t train_size = 4000;
    std::size_t dev_size = 500;
    double label_noise = 0.1;
};

// The lexicon is fixed; only sentences and labels depend on the seed.
std::vector<std::string> synthetic_vocabulary();

SyntheticSuite generate_synthetic_suite(std::uint64_t seed, const SyntheticOptions& options = {});

}  // namespace hype
