#pragma once

#include <cstddef>
#include <vector>

#include "hype/model.hpp"
#include "hype/tensor.hpp"

namespace hype {

/// Linear warmup from 0 to peak_lr over warmup_steps, then linear decay to
/// 0 at total_steps.
struct ScheduleSpec {
    double peak_lr = 2e-5;
    std::size_t warmup_steps = 0;
    std::size_t total_steps = 1;

    void validate() const;
    static ScheduleSpec with_warmup_fraction(double peak_lr, std::size_t total_steps, double warmup_fraction);
};

double lr_at(const ScheduleSpec& spec, std::size_t step);

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-5;
    double weight_decay = 0.1;
};

struct OptimizerState {
    AdamWConfig hp;
    std::size_t t = 0;
    std::vector<std::vector<double>> m, v;
    std::vector<bool> decay;  // per parameter; false exempts it from weight decay

    // Zero moments shaped like `params`.
    static OptimizerState create(const std::vector<Tensor>& params, std::vector<bool> decay, AdamWConfig hp);
};

/// One bias-corrected AdamW update with decoupled decay:
///   theta -= lr * (mhat / (sqrt(vhat) + eps) + wd * theta)
/// Gradients are read from each tensor; a tensor without a grad is treated
/// as having a zero gradient.
void adamw_step(const std::vector<Tensor>& params, OptimizerState& state, double lr);

// Parameter handles and decay mask for a whole model. Biases and layer-norm
// affines are exempt unless decay_all is set.
struct ModelParamSet {
    std::vector<Tensor> tensors;
    std::vector<bool> decay;
};
ModelParamSet trainable_parameters(const ModelState& state, bool decay_all = false);

}  // namespace hype
