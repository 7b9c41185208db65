#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hype/batch.hpp"
#include "hype/model.hpp"

namespace hype {

struct PretrainOptions {
    std::size_t batch_size = 32;
    double peak_lr = 1e-3;
    double warmup_fraction = 0.06;
    double weight_decay = 0.01;
    double dropout = 0.1;
    double mask_prob = 0.15;
    std::size_t mask_id = 4;
    // Ids below this (special tokens) are never masked or predicted.
    std::size_t first_maskable_id = 5;
    std::size_t pad_id = 0;
    // Trailing corpus entries kept out of training for the loss check.
    std::size_t heldout = 256;
    // First-token objective: tell original inputs from corrupted ones
    // (two adjacent words swapped or one word replaced).
    // Weight 0 leaves masked-token prediction as the only objective.
    double discrimination_weight = 1.0;
    double corrupt_prob = 0.5;
};

struct PretrainResult {
    ModelState state;
    std::vector<double> step_losses;
    // Masked-token loss on the held-out slice.
    double heldout_loss_init = 0.0;
    double heldout_loss_final = 0.0;
    // Original-vs-corrupted accuracy on the held-out slice after training.
    double heldout_discrimination_accuracy = 0.0;
};

/// Masked-token pretraining on a tokenized corpus, plus an optional
/// first-token discrimination objective. Both prediction layers are
/// discarded afterwards; the returned state carries a fresh task head.
/// steps == 0 returns the initialization unchanged.
PretrainResult pretrain_synthetic(const ModelConfig& config, std::span<const TokenSequence> corpus, std::size_t steps,
                                  std::uint64_t seed, const PretrainOptions& options = {});

}  // namespace hype
