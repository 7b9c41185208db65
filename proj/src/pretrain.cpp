#include "hype/pretrain.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "hype/errors.hpp"
#include "hype/ops.hpp"
#include "hype/optim.hpp"

namespace hype {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

struct LinearHead {
    Tensor w, b;
};

LinearHead make_head(std::size_t d, std::size_t outputs, RngStream rng) {
    std::normal_distribution<double> dist(0.0, 0.02);
    std::vector<double> w(d * outputs);
    for (auto& x : w) x = dist(rng);
    return {Tensor::from({d, outputs}, w, true), Tensor::zeros({outputs}, true)};
}

struct MaskedBatch {
    TokenBatch batch;
    std::vector<std::size_t> positions;  // flat indices into batch*seq
    std::vector<std::size_t> labels;
    std::vector<std::size_t> original;  // 1 = untouched input, 0 = corrupted
};

// Swaps two adjacent words or replaces one word, anywhere outside the
// separators. The corpus already holds unrelated pairs as originals, so
// segment replacement is not used. Returns false when nothing changed.
bool corrupt(TokenSequence& seq, const ModelConfig& config, const PretrainOptions& opt, RngStream& rng) {
    std::vector<std::size_t> words;
    for (std::size_t i = 1; i < seq.ids.size(); ++i) {
        if (seq.ids[i] >= opt.first_maskable_id) words.push_back(i);
    }
    if (words.size() < 2) return false;
    if (rng.uniform01() < 0.5) {
        const std::size_t k = static_cast<std::size_t>(rng() % (words.size() - 1));
        const std::size_t i = words[k], j = words[k + 1];
        if (j != i + 1 || seq.ids[i] == seq.ids[j]) return false;
        std::swap(seq.ids[i], seq.ids[j]);
        return true;
    }
    const std::size_t i = words[static_cast<std::size_t>(rng() % words.size())];
    const std::size_t span = config.vocab_size - opt.first_maskable_id;
    const std::size_t id = opt.first_maskable_id + static_cast<std::size_t>(rng() % span);
    if (id == seq.ids[i]) return false;
    seq.ids[i] = id;
    return true;
}

MaskedBatch build_batch(std::vector<TokenSequence> seqs, const ModelConfig& config,
                        const PretrainOptions& opt, RngStream mask_rng, RngStream corrupt_rng) {
    MaskedBatch mb;
    mb.original.assign(seqs.size(), 1);
    if (opt.discrimination_weight > 0.0) {
        for (std::size_t i = 0; i < seqs.size(); ++i) {
            if (corrupt_rng.uniform01() < opt.corrupt_prob && corrupt(seqs[i], config, opt, corrupt_rng)) {
                mb.original[i] = 0;
            }
        }
    }
    mb.batch = make_batch(seqs, opt.pad_id);
    std::size_t first_eligible = kNone;
    for (std::size_t i = 0; i < mb.batch.ids.size(); ++i) {
        if (!mb.batch.valid[i] || mb.batch.ids[i] < opt.first_maskable_id) continue;
        if (first_eligible == kNone) first_eligible = i;
        if (mask_rng.uniform01() < opt.mask_prob) {
            mb.positions.push_back(i);
            mb.labels.push_back(mb.batch.ids[i]);
            mb.batch.ids[i] = opt.mask_id;
        }
    }
    if (mb.positions.empty() && first_eligible != kNone) {
        mb.positions.push_back(first_eligible);
        mb.labels.push_back(mb.batch.ids[first_eligible]);
        mb.batch.ids[first_eligible] = opt.mask_id;
    }
    return mb;
}

struct Losses {
    Tensor mlm;
    Tensor discrimination;  // undefined when the objective is off
    double correct = 0.0;   // discrimination hits in this batch
};

Losses batch_losses(const ModelState& state, const LinearHead& mlm_head, const LinearHead& cls_head,
                    const MaskedBatch& mb, const ForwardContext& ctx, bool with_discrimination) {
    auto acts = encode(state, mb.batch, ctx);
    const auto& h = acts.hidden.back();
    Tensor flat = ops::reshape(h, {mb.batch.batch * mb.batch.seq, state.config.d_model});
    Tensor picked = ops::gather_rows(flat, mb.positions);
    Losses out;
    out.mlm = ops::cross_entropy(ops::linear(picked, mlm_head.w, mlm_head.b), mb.labels);
    if (with_discrimination) {
        Tensor logits = ops::linear(acts.pooled, cls_head.w, cls_head.b);
        out.discrimination = ops::cross_entropy(logits, mb.original);
        const auto d = logits.data();
        for (std::size_t i = 0; i < mb.original.size(); ++i) {
            const std::size_t guess = d[2 * i + 1] > d[2 * i] ? 1 : 0;
            out.correct += guess == mb.original[i] ? 1.0 : 0.0;
        }
    }
    return out;
}

struct HeldoutScores {
    double mlm_loss = 0.0;
    double discrimination_accuracy = 0.0;
};

HeldoutScores heldout_scores(const ModelState& state, const LinearHead& mlm_head, const LinearHead& cls_head,
                             std::span<const TokenSequence> heldout, const PretrainOptions& opt,
                             std::uint64_t seed) {
    HeldoutScores s;
    if (heldout.empty()) return s;
    NoGradGuard no_grad;
    const bool disc = opt.discrimination_weight > 0.0;
    double total = 0.0, correct = 0.0;
    std::size_t count = 0, seen = 0;
    for (std::size_t start = 0; start < heldout.size(); start += opt.batch_size) {
        const std::size_t n = std::min(opt.batch_size, heldout.size() - start);
        // Fixed masking and corruption so init and final scores see identical inputs.
        const std::uint64_t step = std::numeric_limits<std::uint64_t>::max();
        const auto layer = static_cast<std::uint32_t>(start);
        const auto slice = heldout.subspan(start, n);
        auto mb = build_batch({slice.begin(), slice.end()}, state.config, opt,
                              RngStream({seed, step, layer, Purpose::mlm_mask}),
                              RngStream({seed, step, layer, Purpose::corrupt}));
        if (mb.positions.empty()) continue;
        ForwardContext ctx;
        const auto losses = batch_losses(state, mlm_head, cls_head, mb, ctx, disc);
        total += losses.mlm.item() * static_cast<double>(mb.positions.size());
        count += mb.positions.size();
        correct += losses.correct;
        seen += n;
    }
    s.mlm_loss = count ? total / static_cast<double>(count) : 0.0;
    s.discrimination_accuracy = seen ? correct / static_cast<double>(seen) : 0.0;
    return s;
}

}  // namespace

PretrainResult pretrain_synthetic(const ModelConfig& config, std::span<const TokenSequence> corpus, std::size_t steps,
                                  std::uint64_t seed, const PretrainOptions& options) {
    PretrainResult result;
    result.state = init_params(config, seed);
    if (steps == 0) return result;
    if (corpus.size() <= options.heldout) throw InputError("pretraining corpus is not larger than the held-out slice");
    for (const auto& s : corpus) {
        if (s.ids.size() > config.max_seq_len) throw InputError("pretraining sequence longer than max_seq_len");
    }
    const auto train = corpus.first(corpus.size() - options.heldout);
    const auto heldout = corpus.last(options.heldout);
    const bool disc = options.discrimination_weight > 0.0;

    const std::size_t d = config.d_model;
    LinearHead mlm_head = make_head(d, config.vocab_size, RngStream({seed, 0, 1, Purpose::head_init}));
    LinearHead cls_head = make_head(d, 2, RngStream({seed, 0, 2, Purpose::head_init}));

    auto params = trainable_parameters(result.state);
    for (auto* head : {&mlm_head, &cls_head}) {
        params.tensors.push_back(head->w);
        params.decay.push_back(true);
        params.tensors.push_back(head->b);
        params.decay.push_back(false);
    }
    AdamWConfig hp;
    hp.beta2 = 0.999;
    hp.eps = 1e-8;
    hp.weight_decay = options.weight_decay;
    auto opt_state = OptimizerState::create(params.tensors, params.decay, hp);
    const auto schedule = ScheduleSpec::with_warmup_fraction(options.peak_lr, steps, options.warmup_fraction);

    result.heldout_loss_init = heldout_scores(result.state, mlm_head, cls_head, heldout, options, seed).mlm_loss;
    std::vector<TokenSequence> batch_seqs(options.batch_size);
    for (std::size_t step = 0; step < steps; ++step) {
        RngStream pick_rng({seed, step, 0, Purpose::shuffle});
        for (auto& s : batch_seqs) s = train[static_cast<std::size_t>(pick_rng() % train.size())];
        auto mb = build_batch(batch_seqs, config, options, RngStream({seed, step, 0, Purpose::mlm_mask}),
                              RngStream({seed, step, 0, Purpose::corrupt}));
        if (mb.positions.empty()) continue;
        ForwardContext ctx;
        ctx.mode = Mode::train;
        ctx.dropout = DropoutSpec{options.dropout};
        ctx.seed = seed;
        ctx.step = step;
        for (auto& p : params.tensors) p.zero_grad();
        auto losses = batch_losses(result.state, mlm_head, cls_head, mb, ctx, disc);
        Tensor loss = disc ? ops::add(losses.mlm, ops::scale(losses.discrimination, options.discrimination_weight))
                           : losses.mlm;
        if (!std::isfinite(loss.item())) throw Error("pretraining diverged at step " + std::to_string(step));
        result.step_losses.push_back(loss.item());
        backward(loss);
        adamw_step(params.tensors, opt_state, lr_at(schedule, step + 1));
    }
    const auto final_scores = heldout_scores(result.state, mlm_head, cls_head, heldout, options, seed);
    result.heldout_loss_final = final_scores.mlm_loss;
    result.heldout_discrimination_accuracy = final_scores.discrimination_accuracy;
    result.state.zero_grad();
    return result;
}

}  // namespace hype
