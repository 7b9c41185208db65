#include "hype/optim.hpp"

#include <cmath>

#include "hype/errors.hpp"

namespace hype {

void ScheduleSpec::validate() const {
    if (!(peak_lr > 0.0)) throw UsageError("peak learning rate must be positive");
    if (warmup_steps > total_steps) throw UsageError("warmup_steps exceeds total_steps");
}

ScheduleSpec ScheduleSpec::with_warmup_fraction(double peak_lr, std::size_t total_steps, double warmup_fraction) {
    if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) throw UsageError("warmup fraction must lie in [0, 1]");
    const auto warmup = static_cast<std::size_t>(std::floor(warmup_fraction * static_cast<double>(total_steps)));
    ScheduleSpec spec{peak_lr, warmup, total_steps};
    spec.validate();
    return spec;
}

double lr_at(const ScheduleSpec& spec, std::size_t step) {
    spec.validate();
    if (step > spec.total_steps) {
        throw UsageError("lr_at: step " + std::to_string(step) + " beyond total_steps " +
                         std::to_string(spec.total_steps));
    }
    if (step < spec.warmup_steps) {
        return spec.peak_lr * (static_cast<double>(step) / static_cast<double>(spec.warmup_steps));
    }
    if (spec.total_steps == spec.warmup_steps) return spec.peak_lr;
    const double remaining = static_cast<double>(spec.total_steps - step);
    return spec.peak_lr * (remaining / static_cast<double>(spec.total_steps - spec.warmup_steps));
}

OptimizerState OptimizerState::create(const std::vector<Tensor>& params, std::vector<bool> decay, AdamWConfig hp) {
    if (decay.size() != params.size()) throw DimensionError("decay mask length differs from parameter count");
    OptimizerState st;
    st.hp = hp;
    st.decay = std::move(decay);
    for (const auto& p : params) {
        st.m.emplace_back(p.numel(), 0.0);
        st.v.emplace_back(p.numel(), 0.0);
    }
    return st;
}

void adamw_step(const std::vector<Tensor>& params, OptimizerState& state, double lr) {
    if (params.size() != state.m.size() || params.size() != state.decay.size()) {
        throw DimensionError("adamw_step: " + std::to_string(params.size()) + " parameters but state holds " +
                             std::to_string(state.m.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].numel() != state.m[i].size()) {
            throw DimensionError("adamw_step: parameter " + std::to_string(i) + " has shape " +
                                 shape_str(params[i].shape()) + " but moments hold " +
                                 std::to_string(state.m[i].size()) + " entries");
        }
        if (params[i].has_grad() && params[i].grad().size() != params[i].numel()) {
            throw DimensionError("adamw_step: gradient shape differs from parameter " + std::to_string(i));
        }
    }
    state.t += 1;
    const auto& hp = state.hp;
    const double t = static_cast<double>(state.t);
    const double bc1 = 1.0 - std::pow(hp.beta1, t);
    const double bc2 = 1.0 - std::pow(hp.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor p = params[i];
        auto theta = p.mutable_data();
        const bool has_grad = p.has_grad();
        auto grad = p.grad();
        auto& m = state.m[i];
        auto& v = state.v[i];
        const double wd = state.decay[i] ? hp.weight_decay : 0.0;
        for (std::size_t j = 0; j < theta.size(); ++j) {
            const double g = has_grad ? grad[j] : 0.0;
            m[j] = hp.beta1 * m[j] + (1.0 - hp.beta1) * g;
            v[j] = hp.beta2 * v[j] + (1.0 - hp.beta2) * g * g;
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            const double adam = mhat / (std::sqrt(vhat) + hp.eps);
            theta[j] = theta[j] - lr * wd * theta[j] - lr * adam;
        }
    }
}

ModelParamSet trainable_parameters(const ModelState& state, bool decay_all) {
    ModelParamSet set;
    for (const auto& p : state.parameters()) {
        set.tensors.push_back(p.tensor);
        set.decay.push_back(decay_all || !p.is_bias_or_norm);
    }
    return set;
}

}  // namespace hype
