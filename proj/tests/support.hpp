#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hype/model.hpp"
#include "hype/ops.hpp"
#include "hype/rng.hpp"
#include "hype/tensor.hpp"
#include "hype/trainer.hpp"

namespace hype::test {

inline Tensor random_tensor(Shape shape, std::uint64_t seed, bool requires_grad = true, double sd = 1.0) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    RngStream rng({seed, 0, 0, Purpose::init});
    std::normal_distribution<double> dist(0.0, sd);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return Tensor::from(std::move(shape), v, requires_grad);
}

struct GradCheck {
    double max_rel_error = 0.0;
    std::string worst;
    std::size_t checked = 0;
};

// Five-point central differences against the analytic gradient of every
// entry of every tensor in `params`. The fourth-order stencil keeps the
// truncation error below round-off at steps where round-off is still small. The relative error of one entry is
// |fd - an| / max(|fd|, |an|, floor).
inline GradCheck check_gradients(const std::function<Tensor()>& loss_fn, const std::vector<Tensor>& params,
                                 const std::vector<std::string>& names = {}, double step = 1e-4,
                                 double floor = 1e-6) {
    for (auto p : params) p.zero_grad();
    backward(loss_fn());
    GradCheck out;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor p = params[k];
        std::vector<double> an(p.numel(), 0.0);
        if (p.has_grad()) std::copy(p.grad().begin(), p.grad().end(), an.begin());
        auto data = p.mutable_data();
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double orig = data[i];
            double f[4];
            {
                NoGradGuard no_grad;
                const double offsets[4] = {2.0, 1.0, -1.0, -2.0};
                for (int j = 0; j < 4; ++j) {
                    data[i] = orig + offsets[j] * step;
                    f[j] = loss_fn().item();
                }
                data[i] = orig;
            }
            const double fd = (-f[0] + 8.0 * f[1] - 8.0 * f[2] + f[3]) / (12.0 * step);
            const double rel = std::fabs(fd - an[i]) / std::max({std::fabs(fd), std::fabs(an[i]), floor});
            ++out.checked;
            if (rel > out.max_rel_error) {
                out.max_rel_error = rel;
                out.worst = (k < names.size() ? names[k] : "param" + std::to_string(k)) + "[" + std::to_string(i) +
                            "] fd=" + std::to_string(fd) + " analytic=" + std::to_string(an[i]);
            }
        }
    }
    return out;
}

inline ModelConfig tiny_config() {
    ModelConfig c;
    c.n_layers = 2;
    c.d_model = 8;
    c.n_heads = 2;
    c.d_ff = 16;
    c.vocab_size = 20;
    c.max_seq_len = 8;
    return c;
}

inline std::vector<TokenSequence> tiny_sequences() {
    return {{{2, 5, 7, 3}, {0, 0, 0, 0}}, {{2, 9, 3, 11, 12, 3}, {0, 0, 0, 1, 1, 1}}, {{2, 6, 3}, {0, 0, 0}}};
}

// Label = whether token 5 or token 6 follows the first token.
inline TaskData toy_task(std::size_t n_train, std::size_t n_dev, std::uint64_t seed) {
    TaskData t;
    t.name = "toy";
    t.metric = MetricKind::accuracy;
    std::mt19937_64 rng(seed);
    auto make = [&](std::vector<TokenSequence>& in, std::vector<double>& y, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t label = i % 2;
            TokenSequence s{{2, 5 + label}, {0, 0}};
            const std::size_t extra = 1 + rng() % 4;
            for (std::size_t j = 0; j < extra; ++j) {
                s.ids.push_back(7 + rng() % 12);
                s.segments.push_back(0);
            }
            s.ids.push_back(3);
            s.segments.push_back(0);
            in.push_back(s);
            y.push_back(static_cast<double>(label));
        }
    };
    make(t.train_inputs, t.train_targets, n_train);
    make(t.dev_inputs, t.dev_targets, n_dev);
    return t;
}

inline bool bit_equal(std::span<const double> a, std::span<const double> b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](double x, double y) {
               return std::memcmp(&x, &y, sizeof x) == 0;
           });
}

}  // namespace hype::test
