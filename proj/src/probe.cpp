#include "hype/probe.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hype/errors.hpp"
#include "hype/ops.hpp"
#include "hype/optim.hpp"

namespace hype {

namespace {

struct FrozenSplit {
    std::vector<double> features;  // [n x d]
    std::size_t n = 0;
};

std::vector<std::size_t> probe_order(std::size_t n, std::uint64_t seed, std::size_t epoch, std::size_t layer) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    RngStream rng({seed, epoch, static_cast<std::uint32_t>(layer), Purpose::probe});
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    return order;
}

LayerScore train_probe(const TaskData& task, const FrozenSplit& train, const FrozenSplit& dev, std::size_t d,
                       std::size_t layer, std::uint64_t seed, const ProbeSettings& settings) {
    const std::size_t outputs = task.regression ? 1 : task.n_classes;
    HeadParams head;
    {
        std::normal_distribution<double> dist(0.0, 0.02);
        RngStream rng({seed, 0, static_cast<std::uint32_t>(layer), Purpose::probe});
        std::vector<double> w(d * outputs);
        for (auto& x : w) x = dist(rng);
        head.w = Tensor::from({d, outputs}, std::move(w), true);
        head.b = Tensor::zeros({outputs}, true);
    }
    std::vector<Tensor> params{head.w, head.b};
    AdamWConfig hp;
    hp.weight_decay = 0.0;
    auto opt = OptimizerState::create(params, {false, false}, hp);

    std::vector<double> xb, yb;
    std::vector<std::size_t> lb;
    for (std::size_t epoch = 1; epoch <= settings.epochs; ++epoch) {
        const auto order = probe_order(train.n, seed, epoch, layer);
        for (std::size_t start = 0; start < train.n; start += settings.batch_size) {
            const std::size_t end = std::min(train.n, start + settings.batch_size);
            xb.clear();
            yb.clear();
            lb.clear();
            for (std::size_t i = start; i < end; ++i) {
                const std::size_t r = order[i];
                xb.insert(xb.end(), train.features.begin() + static_cast<std::ptrdiff_t>(r * d),
                          train.features.begin() + static_cast<std::ptrdiff_t>((r + 1) * d));
                yb.push_back(task.train_targets[r]);
                lb.push_back(static_cast<std::size_t>(task.train_targets[r]));
            }
            const std::size_t b = end - start;
            for (auto& p : params) p.zero_grad();
            Tensor out = apply_head(head, Tensor::from({b, d}, xb));
            Tensor loss = task.regression ? ops::mse(out, Tensor::from({b, 1}, yb)) : ops::cross_entropy(out, lb);
            if (!std::isfinite(loss.item())) throw Error("probe training diverged on layer " + std::to_string(layer));
            backward(loss);
            adamw_step(params, opt, settings.lr);
        }
    }

    NoGradGuard no_grad;
    const Tensor out = apply_head(head, Tensor::from({dev.n, d}, dev.features));
    const auto od = out.data();
    std::vector<double> preds(dev.n);
    for (std::size_t i = 0; i < dev.n; ++i) {
        const double* row = od.data() + i * outputs;
        preds[i] = task.regression ? row[0] : static_cast<double>(std::max_element(row, row + outputs) - row);
    }
    const auto m = compute_metric(task.metric, preds, task.dev_targets);
    return {layer, 100.0 * m.value, m.degenerate};
}

// Runs fn(activations, batch, first_index) over the inputs in eval mode.
template <typename Fn>
void for_each_batch(const ModelState& state, std::span<const TokenSequence> inputs, std::size_t pad_id,
                    std::size_t batch_size, Fn&& fn) {
    NoGradGuard no_grad;
    ForwardContext ctx;
    for (std::size_t start = 0; start < inputs.size(); start += batch_size) {
        const std::size_t n = std::min(batch_size, inputs.size() - start);
        const auto batch = make_batch(inputs.subspan(start, n), pad_id);
        fn(encode(state, batch, ctx), batch, start);
    }
}

}  // namespace

std::vector<std::vector<double>> pooled_features(const ModelState& state, std::span<const TokenSequence> inputs,
                                                 std::size_t pad_id, std::size_t batch_size) {
    const std::size_t d = state.config.d_model;
    std::vector<std::vector<double>> out(state.config.n_layers + 1, std::vector<double>(inputs.size() * d));
    for_each_batch(state, inputs, pad_id, batch_size, [&](const LayerActivations& acts, const TokenBatch& batch,
                                                         std::size_t first) {
        for (std::size_t l = 0; l < acts.hidden.size(); ++l) {
            const auto h = acts.hidden[l].data();
            for (std::size_t i = 0; i < batch.batch; ++i) {
                std::copy_n(h.begin() + static_cast<std::ptrdiff_t>(i * batch.seq * d), d,
                            out[l].begin() + static_cast<std::ptrdiff_t>((first + i) * d));
            }
        }
    });
    return out;
}

LayerScore linear_probe(const ModelState& backbone, const TaskData& task, std::size_t layer, std::uint64_t seed,
                        const ProbeSettings& settings) {
    if (layer > backbone.config.n_layers) {
        throw InputError("probe layer " + std::to_string(layer) + " out of range 0.." +
                         std::to_string(backbone.config.n_layers));
    }
    const std::size_t d = backbone.config.d_model;
    FrozenSplit train{std::move(pooled_features(backbone, task.train_inputs, task.pad_id)[layer]),
                      task.train_inputs.size()};
    FrozenSplit dev{std::move(pooled_features(backbone, task.dev_inputs, task.pad_id)[layer]), task.dev_inputs.size()};
    return train_probe(task, train, dev, d, layer, seed, settings);
}

ProbeResult probe_all_layers(const ModelState& backbone, const TaskData& task, std::uint64_t seed,
                             const ProbeSettings& settings) {
    ProbeResult r;
    r.checkpoint_id = hex_digest(serialize_checkpoint(backbone));
    r.task = task.name;
    r.seed = seed;
    const std::size_t d = backbone.config.d_model;
    auto train = pooled_features(backbone, task.train_inputs, task.pad_id);
    auto dev = pooled_features(backbone, task.dev_inputs, task.pad_id);
    for (std::size_t l = 0; l < train.size(); ++l) {
        FrozenSplit tr{std::move(train[l]), task.train_inputs.size()};
        FrozenSplit dv{std::move(dev[l]), task.dev_inputs.size()};
        r.layers.push_back(train_probe(task, tr, dv, d, l, seed, settings));
    }
    return r;
}

std::optional<double> sample_similarity(std::span<const double> tokens, std::size_t n, std::size_t d) {
    if (tokens.size() != n * d) throw DimensionError("sample_similarity: token block does not hold n x d values");
    if (n < 2) return std::nullopt;
    // sum_{a<b} cos = (|sum of unit rows|^2 - number of unit rows) / 2
    std::vector<double> total(d, 0.0);
    double units = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = tokens.data() + i * d;
        double norm2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) norm2 += row[j] * row[j];
        if (norm2 == 0.0) continue;
        const double inv = 1.0 / std::sqrt(norm2);
        for (std::size_t j = 0; j < d; ++j) total[j] += row[j] * inv;
        units += 1.0;
    }
    double sq = 0.0;
    for (double t : total) sq += t * t;
    const double s = (sq - units) / (static_cast<double>(n) * static_cast<double>(n - 1));
    return std::clamp(s, -1.0, 1.0);
}

SimilarityCurve similarity_curve(const ModelState& state, std::span<const TokenSequence> inputs, std::size_t pad_id,
                                 const SimilarityOptions& options) {
    const std::size_t d = state.config.d_model;
    const std::size_t layers = state.config.n_layers + 1;
    SimilarityCurve curve;
    std::vector<double> sums(layers, 0.0);
    std::vector<double> rows;
    for_each_batch(state, inputs, pad_id, options.batch_size, [&](const LayerActivations& acts,
                                                                 const TokenBatch& batch, std::size_t) {
        for (std::size_t i = 0; i < batch.batch; ++i) {
            const std::size_t first = options.include_first_token ? 0 : 1;
            std::size_t count = 0;
            for (std::size_t j = first; j < batch.seq; ++j) count += batch.valid[i * batch.seq + j];
            if (count < 2) {
                ++curve.skipped;
                continue;
            }
            ++curve.samples;
            for (std::size_t l = 0; l < layers; ++l) {
                const auto h = acts.hidden[l].data();
                rows.clear();
                for (std::size_t j = first; j < batch.seq; ++j) {
                    if (!batch.valid[i * batch.seq + j]) continue;
                    const auto at = h.begin() + static_cast<std::ptrdiff_t>((i * batch.seq + j) * d);
                    rows.insert(rows.end(), at, at + static_cast<std::ptrdiff_t>(d));
                }
                sums[l] += *sample_similarity(rows, count, d);
            }
        }
    });
    curve.values.resize(layers, 0.0);
    if (curve.samples > 0) {
        for (std::size_t l = 0; l < layers; ++l) curve.values[l] = sums[l] / static_cast<double>(curve.samples);
    }
    return curve;
}

}  // namespace hype
