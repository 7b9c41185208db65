#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hype/batch.hpp"
#include "hype/perturb.hpp"
#include "hype/tensor.hpp"

namespace hype {

struct ModelConfig {
    std::size_t n_layers = 4;
    std::size_t d_model = 64;
    std::size_t n_heads = 4;
    std::size_t d_ff = 256;
    std::size_t vocab_size = 512;
    std::size_t max_seq_len = 128;
    std::size_t n_classes = 2;
    bool regression = false;
    double ln_eps = 1e-12;

    std::size_t n_outputs() const { return regression ? 1 : n_classes; }
    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

struct EmbeddingParams {
    Tensor token;     // [vocab x d]
    Tensor position;  // [max_seq_len x d]
    Tensor segment;   // [2 x d]
    Tensor ln_gain, ln_bias;
};

// theta^i: everything owned by one encoder layer.
struct LayerParams {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ln1_gain, ln1_bias;
    Tensor w1, b1, w2, b2;
    Tensor ln2_gain, ln2_bias;
};

struct HeadParams {
    Tensor w;  // [d x n_outputs]
    Tensor b;
};

enum class ParamGroup { embedding, layer, head };

struct ParamRef {
    std::string name;
    Tensor tensor;  // shallow handle into the owning state
    ParamGroup group;
    std::size_t layer;  // 1-based for ParamGroup::layer, 0 otherwise
    bool is_bias_or_norm;
};

/// Encoder parameters theta (embeddings plus one group per layer) and the
/// task head psi.
struct ModelState {
    ModelConfig config;
    EmbeddingParams embeddings;
    std::vector<LayerParams> layers;
    HeadParams head;

    // Declaration order: embeddings, layers 1..n, head. Each tensor appears once.
    std::vector<ParamRef> parameters() const;
    std::vector<ParamRef> backbone_parameters() const;
    ModelState clone() const;
    void zero_grad() const;
};

ModelState init_params(const ModelConfig& config, std::uint64_t seed);

// Replaces psi with a freshly initialized head of the given width.
void reset_head(ModelState& state, std::size_t n_classes, bool regression, std::uint64_t seed);

// FNV-1a over every backbone parameter value.
std::uint64_t backbone_checksum(const ModelState& state);
std::uint64_t state_checksum(const ModelState& state);

/// Per-forward-pass perturbation context. Streams are keyed by
/// (seed, step, layer, purpose) so masking a layer never shifts another
/// layer's draws.
struct ForwardContext {
    Mode mode = Mode::eval;
    NoiseSpec noise;
    DropoutSpec dropout;
    std::uint64_t seed = 0;
    std::uint64_t step = 0;
    PerturbationTrace* trace = nullptr;

    RngStream stream(std::size_t layer, Purpose purpose) const;
};

struct LayerActivations {
    // hidden[0] = h^1 (embedding output), hidden[i] = output of layer i.
    std::vector<Tensor> hidden;
    // What each layer actually consumed, after the pre-layer hook.
    std::vector<Tensor> layer_inputs;
    Tensor pooled;  // first-token slice of hidden.back(), [batch x d]
};

Tensor embed(const ModelState& state, const TokenBatch& batch);

// Dropout then additive noise at layer `layer`'s pre-layer hook.
Tensor pre_layer_hook(const Tensor& h, std::size_t layer, const ForwardContext& ctx);

// g_{theta^i}: attention -> add&norm -> [intra hook] -> FFN -> add&norm.
Tensor layer_block(const ModelConfig& config, const LayerParams& params, const Tensor& h,
                   const TokenBatch& batch, std::size_t layer, const ForwardContext& ctx);

LayerActivations encode(const ModelState& state, const TokenBatch& batch, const ForwardContext& ctx);

// Head applied to the pooled first-token representation: [batch x n_outputs].
Tensor classify(const ModelState& state, const LayerActivations& activations);
Tensor apply_head(const HeadParams& head, const Tensor& pooled);

// Checkpoint file: "HYPECKPT", u32 version, config record, then parameter
// arrays in declaration order as little-endian doubles.
inline constexpr std::uint32_t kCheckpointVersion = 1;
std::string serialize_checkpoint(const ModelState& state);
ModelState deserialize_checkpoint(const std::string& bytes);
void save_checkpoint(const ModelState& state, const std::filesystem::path& path);
ModelState load_checkpoint(const std::filesystem::path& path);

}  // namespace hype
