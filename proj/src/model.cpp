#include "hype/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "hype/errors.hpp"
#include "hype/ops.hpp"

namespace hype {

namespace {

constexpr double kInitStd = 0.02;

void list_layer(const LayerParams& p, std::size_t i, std::vector<ParamRef>& out) {
    const std::string pre = "layer" + std::to_string(i) + ".";
    auto push = [&](const char* name, const Tensor& t, bool bias_or_norm) {
        out.push_back({pre + name, t, ParamGroup::layer, i, bias_or_norm});
    };
    push("wq", p.wq, false);
    push("bq", p.bq, true);
    push("wk", p.wk, false);
    push("bk", p.bk, true);
    push("wv", p.wv, false);
    push("bv", p.bv, true);
    push("wo", p.wo, false);
    push("bo", p.bo, true);
    push("ln1_gain", p.ln1_gain, true);
    push("ln1_bias", p.ln1_bias, true);
    push("w1", p.w1, false);
    push("b1", p.b1, true);
    push("w2", p.w2, false);
    push("b2", p.b2, true);
    push("ln2_gain", p.ln2_gain, true);
    push("ln2_bias", p.ln2_bias, true);
}

Tensor normal_tensor(Shape shape, RngStream rng) {
    std::normal_distribution<double> dist(0.0, kInitStd);
    std::vector<double> values(shape_numel(shape));
    for (auto& v : values) v = dist(rng);
    return Tensor::from(std::move(shape), std::move(values), true);
}

Tensor zeros_param(std::size_t n) { return Tensor::zeros({n}, true); }
Tensor ones_param(std::size_t n) { return Tensor::full({n}, 1.0, true); }

std::uint64_t fnv1a(std::uint64_t h, std::span<const double> values) {
    for (double v : values) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xffu;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

}  // namespace

void ModelConfig::validate() const {
    if (n_layers < 1) throw UsageError("model needs at least one layer");
    if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
        throw UsageError("d_model (" + std::to_string(d_model) + ") must be a positive multiple of n_heads (" +
                         std::to_string(n_heads) + ")");
    }
    if (d_ff == 0 || vocab_size == 0) throw UsageError("d_ff and vocab_size must be positive");
    if (max_seq_len < 1) throw UsageError("max_seq_len must be >= 1");
    if (!regression && n_classes < 2) throw UsageError("classification needs at least two classes");
    if (!(ln_eps > 0.0)) throw UsageError("ln_eps must be positive");
}

std::vector<ParamRef> ModelState::parameters() const {
    std::vector<ParamRef> out = backbone_parameters();
    out.push_back({"head.w", head.w, ParamGroup::head, 0, false});
    out.push_back({"head.b", head.b, ParamGroup::head, 0, true});
    return out;
}

std::vector<ParamRef> ModelState::backbone_parameters() const {
    std::vector<ParamRef> out;
    out.push_back({"emb.token", embeddings.token, ParamGroup::embedding, 0, false});
    out.push_back({"emb.position", embeddings.position, ParamGroup::embedding, 0, false});
    out.push_back({"emb.segment", embeddings.segment, ParamGroup::embedding, 0, false});
    out.push_back({"emb.ln_gain", embeddings.ln_gain, ParamGroup::embedding, 0, true});
    out.push_back({"emb.ln_bias", embeddings.ln_bias, ParamGroup::embedding, 0, true});
    for (std::size_t i = 0; i < layers.size(); ++i) list_layer(layers[i], i + 1, out);
    return out;
}

ModelState ModelState::clone() const {
    ModelState out;
    out.config = config;
    auto copy = [](const Tensor& t) {
        Tensor d = t.detach();
        d.set_requires_grad(t.requires_grad());
        return d;
    };
    out.embeddings = {copy(embeddings.token), copy(embeddings.position), copy(embeddings.segment),
                      copy(embeddings.ln_gain), copy(embeddings.ln_bias)};
    for (const auto& l : layers) {
        out.layers.push_back({copy(l.wq), copy(l.bq), copy(l.wk), copy(l.bk), copy(l.wv), copy(l.bv), copy(l.wo),
                              copy(l.bo), copy(l.ln1_gain), copy(l.ln1_bias), copy(l.w1), copy(l.b1), copy(l.w2),
                              copy(l.b2), copy(l.ln2_gain), copy(l.ln2_bias)});
    }
    out.head = {copy(head.w), copy(head.b)};
    return out;
}

void ModelState::zero_grad() const {
    for (auto& p : parameters()) {
        Tensor t = p.tensor;
        t.zero_grad();
    }
}

ModelState init_params(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    ModelState state;
    state.config = config;
    const std::size_t d = config.d_model;
    std::uint32_t ordinal = 0;
    // One stream per weight matrix so the layout of one group never shifts another's draws.
    auto draw = [&](Shape shape) { return normal_tensor(std::move(shape), RngStream({seed, 0, ordinal++, Purpose::init})); };

    state.embeddings.token = draw({config.vocab_size, d});
    state.embeddings.position = draw({config.max_seq_len, d});
    state.embeddings.segment = draw({2, d});
    state.embeddings.ln_gain = ones_param(d);
    state.embeddings.ln_bias = zeros_param(d);
    for (std::size_t i = 0; i < config.n_layers; ++i) {
        LayerParams p;
        p.wq = draw({d, d});
        p.bq = zeros_param(d);
        p.wk = draw({d, d});
        p.bk = zeros_param(d);
        p.wv = draw({d, d});
        p.bv = zeros_param(d);
        p.wo = draw({d, d});
        p.bo = zeros_param(d);
        p.ln1_gain = ones_param(d);
        p.ln1_bias = zeros_param(d);
        p.w1 = draw({d, config.d_ff});
        p.b1 = zeros_param(config.d_ff);
        p.w2 = draw({config.d_ff, d});
        p.b2 = zeros_param(d);
        p.ln2_gain = ones_param(d);
        p.ln2_bias = zeros_param(d);
        state.layers.push_back(std::move(p));
    }
    reset_head(state, config.n_classes, config.regression, seed);
    return state;
}

void reset_head(ModelState& state, std::size_t n_classes, bool regression, std::uint64_t seed) {
    state.config.n_classes = n_classes;
    state.config.regression = regression;
    state.config.validate();
    const std::size_t outputs = state.config.n_outputs();
    state.head.w = normal_tensor({state.config.d_model, outputs}, RngStream({seed, 0, 0, Purpose::head_init}));
    state.head.b = zeros_param(outputs);
}

std::uint64_t backbone_checksum(const ModelState& state) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& p : state.backbone_parameters()) h = fnv1a(h, p.tensor.data());
    return h;
}

std::uint64_t state_checksum(const ModelState& state) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& p : state.parameters()) h = fnv1a(h, p.tensor.data());
    return h;
}

RngStream ForwardContext::stream(std::size_t layer, Purpose purpose) const {
    return RngStream({seed, step, static_cast<std::uint32_t>(layer), purpose});
}

TokenBatch make_batch(std::span<const TokenSequence> sequences, std::size_t pad_id, std::size_t pad_to) {
    if (sequences.empty()) throw UsageError("make_batch: no sequences");
    std::size_t longest = 0;
    for (const auto& s : sequences) {
        if (s.ids.size() != s.segments.size()) throw DimensionError("make_batch: ids and segments differ in length");
        longest = std::max(longest, s.ids.size());
    }
    if (pad_to != 0) {
        if (longest > pad_to) throw InputError("make_batch: sequence longer than pad length");
        longest = pad_to;
    }
    if (longest == 0) throw UsageError("make_batch: all sequences are empty");
    TokenBatch b;
    b.batch = sequences.size();
    b.seq = longest;
    b.ids.assign(b.batch * b.seq, pad_id);
    b.segments.assign(b.batch * b.seq, 0);
    b.valid.assign(b.batch * b.seq, 0);
    for (std::size_t i = 0; i < b.batch; ++i) {
        const auto& s = sequences[i];
        for (std::size_t j = 0; j < s.ids.size(); ++j) {
            b.ids[i * b.seq + j] = s.ids[j];
            b.segments[i * b.seq + j] = s.segments[j];
            b.valid[i * b.seq + j] = 1;
        }
    }
    return b;
}

Tensor embed(const ModelState& state, const TokenBatch& batch) {
    const auto& cfg = state.config;
    if (batch.seq > cfg.max_seq_len) {
        throw InputError("sequence length " + std::to_string(batch.seq) + " exceeds max_seq_len " +
                         std::to_string(cfg.max_seq_len) + "; truncate before encoding");
    }
    if (batch.ids.size() != batch.batch * batch.seq) throw DimensionError("token batch has inconsistent size");
    for (auto id : batch.ids) {
        if (id >= cfg.vocab_size) {
            throw InputError("token id " + std::to_string(id) + " >= vocab_size " + std::to_string(cfg.vocab_size));
        }
    }
    for (auto s : batch.segments) {
        if (s > 1) throw InputError("segment id must be 0 or 1");
    }
    std::vector<std::size_t> positions(batch.ids.size());
    for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i % batch.seq;
    Tensor tok = ops::gather_rows(state.embeddings.token, batch.ids);
    Tensor pos = ops::gather_rows(state.embeddings.position, positions);
    Tensor seg = ops::gather_rows(state.embeddings.segment, batch.segments);
    Tensor summed = ops::add(ops::add(tok, pos), seg);
    Tensor normed = ops::layer_norm(summed, state.embeddings.ln_gain, state.embeddings.ln_bias, cfg.ln_eps);
    return ops::reshape(normed, {batch.batch, batch.seq, cfg.d_model});
}

Tensor pre_layer_hook(const Tensor& h, std::size_t layer, const ForwardContext& ctx) {
    RngStream drop_rng = ctx.stream(layer, Purpose::dropout_pre);
    Tensor dropped = apply_dropout(h, ctx.dropout, ctx.mode, drop_rng);
    RngStream noise_rng = ctx.stream(layer, Purpose::noise_pre);
    Tensor out = apply_perturbation(dropped, layer, Site::pre_layer, ctx.noise, ctx.mode, noise_rng);
    if (ctx.trace) {
        ctx.trace->record(layer, Site::pre_layer, PerturbKind::dropout, h, dropped);
        ctx.trace->record(layer, Site::pre_layer, PerturbKind::noise, dropped, out);
    }
    return out;
}

Tensor layer_block(const ModelConfig& config, const LayerParams& p, const Tensor& h, const TokenBatch& batch,
                   std::size_t layer, const ForwardContext& ctx) {
    const std::size_t heads = config.n_heads;
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(config.d_model / heads));

    Tensor q = ops::split_heads(ops::linear(h, p.wq, p.bq), heads);
    Tensor k = ops::split_heads(ops::linear(h, p.wk, p.bk), heads);
    Tensor v = ops::split_heads(ops::linear(h, p.wv, p.bv), heads);
    Tensor scores = ops::mask_keys(ops::scale(ops::bmm(q, k, true), inv_sqrt_dh), batch.valid, heads);
    Tensor attn = ops::softmax(scores, 2);
    Tensor context = ops::merge_heads(ops::bmm(attn, v), heads);
    Tensor attn_out = ops::linear(context, p.wo, p.bo);
    Tensor x1 = ops::layer_norm(ops::add(h, attn_out), p.ln1_gain, p.ln1_bias, config.ln_eps);

    RngStream intra_rng = ctx.stream(layer, Purpose::noise_intra);
    Tensor x1p = apply_perturbation(x1, layer, Site::intra_layer, ctx.noise, ctx.mode, intra_rng);
    if (ctx.trace) ctx.trace->record(layer, Site::intra_layer, PerturbKind::noise, x1, x1p);

    Tensor ff = ops::linear(ops::gelu(ops::linear(x1p, p.w1, p.b1)), p.w2, p.b2);
    RngStream ffn_rng = ctx.stream(layer, Purpose::dropout_ffn);
    Tensor ff_dropped = apply_dropout(ff, ctx.dropout, ctx.mode, ffn_rng);
    if (ctx.trace) ctx.trace->record(layer, Site::intra_layer, PerturbKind::dropout, ff, ff_dropped);
    return ops::layer_norm(ops::add(x1p, ff_dropped), p.ln2_gain, p.ln2_bias, config.ln_eps);
}

LayerActivations encode(const ModelState& state, const TokenBatch& batch, const ForwardContext& ctx) {
    ctx.noise.validate(state.config.n_layers);
    ctx.dropout.validate();
    LayerActivations acts;
    acts.hidden.reserve(state.layers.size() + 1);
    acts.hidden.push_back(embed(state, batch));
    for (std::size_t i = 0; i < state.layers.size(); ++i) {
        const std::size_t layer = i + 1;
        Tensor input = pre_layer_hook(acts.hidden.back(), layer, ctx);
        acts.layer_inputs.push_back(input);
        acts.hidden.push_back(layer_block(state.config, state.layers[i], input, batch, layer, ctx));
    }
    acts.pooled = ops::select_position(acts.hidden.back(), 0);
    return acts;
}

Tensor apply_head(const HeadParams& head, const Tensor& pooled) { return ops::linear(pooled, head.w, head.b); }

Tensor classify(const ModelState& state, const LayerActivations& activations) {
    return apply_head(state.head, activations.pooled);
}

}  // namespace hype
