#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hype/metrics.hpp"
#include "hype/model.hpp"
#include "hype/trainer.hpp"

namespace hype {

struct ProbeSettings {
    double lr = 1e-3;
    std::size_t epochs = 3;
    std::size_t batch_size = 16;
};

struct LayerScore {
    std::size_t layer;  // 0 = embedding output, n = last encoder layer
    double score;       // metric x 100
    bool degenerate;
};

struct ProbeResult {
    std::string checkpoint_id;
    std::string task;
    std::uint64_t seed = 0;
    std::vector<LayerScore> layers;
};

// Pooled first-token features of hidden[layer] for every sequence, computed
// in eval mode without a graph: [sequences x d_model], row-major.
std::vector<std::vector<double>> pooled_features(const ModelState& state, std::span<const TokenSequence> inputs,
                                                 std::size_t pad_id, std::size_t batch_size = 64);

/// Trains a fresh linear head on the frozen pooled representation of
/// `layer` and returns its dev score. The backbone is never written.
/// Throws InputError when layer > n_layers.
LayerScore linear_probe(const ModelState& backbone, const TaskData& task, std::size_t layer, std::uint64_t seed,
                        const ProbeSettings& settings = {});

// Every layer 0..n, sharing one feature pass.
ProbeResult probe_all_layers(const ModelState& backbone, const TaskData& task, std::uint64_t seed,
                             const ProbeSettings& settings = {});

/// Mean pairwise cosine similarity between the rows of `tokens`
/// ([n x d], row-major). Zero-norm rows count as cosine 0 with everything.
/// Empty when fewer than two rows.
std::optional<double> sample_similarity(std::span<const double> tokens, std::size_t n, std::size_t d);

struct SimilarityCurve {
    std::vector<double> values;  // S^l for hidden states 0..n
    std::size_t samples = 0;     // M
    std::size_t skipped = 0;     // samples with fewer than two tokens
};

struct SimilarityOptions {
    bool include_first_token = true;
    std::size_t batch_size = 64;
};

SimilarityCurve similarity_curve(const ModelState& state, std::span<const TokenSequence> inputs, std::size_t pad_id,
                                 const SimilarityOptions& options = {});

}  // namespace hype
