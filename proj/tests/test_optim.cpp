#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hype/errors.hpp"
#include "hype/optim.hpp"
#include "support.hpp"

using namespace hype;

namespace {

void set_grad(Tensor& t, double g) {
    t.zero_grad();
    t.mutable_grad()[0] = g;
}

}  // namespace

TEST_CASE("schedule examples") {
    const ScheduleSpec s{1e-5, 10, 100};
    CHECK(lr_at(s, 10) == 1e-5);
    CHECK(lr_at(s, 100) == 0.0);
    CHECK(lr_at(s, 0) == 0.0);
    CHECK(lr_at(s, 55) == 1e-5 * (100.0 - 55.0) / 90.0);
    CHECK(std::fabs(lr_at(s, 55) - 5e-6) < 1e-20);
    CHECK(lr_at(s, 5) == 0.5e-5);
    CHECK_THROWS_AS(lr_at(s, 101), UsageError);
}

TEST_CASE("schedule is piecewise linear with max equal to peak") {
    const auto s = ScheduleSpec::with_warmup_fraction(3e-5, 189, 0.1);
    CHECK(s.warmup_steps == 18);  // floor(0.1 * 189)
    double max_lr = 0.0;
    for (std::size_t t = 0; t <= s.total_steps; ++t) {
        const double lr = lr_at(s, t);
        max_lr = std::max(max_lr, lr);
        if (t > 0 && t < s.total_steps && t != s.warmup_steps) {
            // Second differences vanish away from the kink.
            const double second = lr_at(s, t + 1) - 2.0 * lr + lr_at(s, t - 1);
            CHECK(std::fabs(second) < 1e-18);
        }
    }
    CHECK(max_lr == 3e-5);
    CHECK(ScheduleSpec::with_warmup_fraction(1e-5, 10, 0.0).warmup_steps == 0);
    CHECK_THROWS_AS(ScheduleSpec::with_warmup_fraction(1e-5, 10, 1.5), UsageError);
}

TEST_CASE("zero gradient and zero decay leave parameters unchanged") {
    Tensor w = test::random_tensor({3, 2}, 1);
    const std::vector<double> before(w.data().begin(), w.data().end());
    AdamWConfig hp;
    hp.weight_decay = 0.0;
    auto st = OptimizerState::create({w}, {true}, hp);
    w.zero_grad();
    adamw_step({w}, st, 1e-3);
    CHECK(test::bit_equal(before, w.data()));
}

TEST_CASE("adamw first step oracle") {
    Tensor w = Tensor::scalar(0.0, true);
    AdamWConfig hp;
    hp.weight_decay = 0.0;
    auto st = OptimizerState::create({w}, {true}, hp);
    set_grad(w, 1.0);
    adamw_step({w}, st, 1e-3);
    CHECK(std::fabs(w.item() - -1e-3 / (1.0 + 1e-5)) < 1e-15);
    CHECK(std::fabs(w.item() - -9.99990e-4) < 1e-9);
}

TEST_CASE("adamw two-step hand-unrolled trace") {
    const double b1 = 0.9, b2 = 0.99, eps = 1e-5, wd = 0.1, lr1 = 1e-3, lr2 = 5e-4;
    const double g1 = 1.0, g2 = -2.0;
    double theta = 0.5;
    double m = (1 - b1) * g1, v = (1 - b2) * g1 * g1;
    theta -= lr1 * ((m / (1 - b1)) / (std::sqrt(v / (1 - b2)) + eps) + wd * theta);
    const double after_one = theta;
    m = b1 * m + (1 - b1) * g2;
    v = b2 * v + (1 - b2) * g2 * g2;
    theta -= lr2 * ((m / (1 - b1 * b1)) / (std::sqrt(v / (1 - b2 * b2)) + eps) + wd * theta);

    Tensor w = Tensor::scalar(0.5, true);
    AdamWConfig hp{b1, b2, eps, wd};
    auto st = OptimizerState::create({w}, {true}, hp);
    set_grad(w, g1);
    adamw_step({w}, st, lr1);
    CHECK(std::fabs(w.item() - after_one) < 1e-12);
    set_grad(w, g2);
    adamw_step({w}, st, lr2);
    CHECK(std::fabs(w.item() - theta) < 1e-12);
    CHECK(st.t == 2);
}

TEST_CASE("decoupled decay: zero gradient shrinks by lr * wd * theta") {
    Tensor w = Tensor::from({2}, {2.0, -4.0}, true);
    AdamWConfig hp;
    hp.weight_decay = 0.1;
    auto st = OptimizerState::create({w}, {true}, hp);
    for (int k = 0; k < 3; ++k) {
        const double a = w.at(0), b = w.at(1);
        w.zero_grad();
        adamw_step({w}, st, 1e-2);
        CHECK(w.at(0) == a - 1e-2 * 0.1 * a);
        CHECK(w.at(1) == b - 1e-2 * 0.1 * b);
    }
}

TEST_CASE("exempt parameters get no decay") {
    Tensor w = Tensor::from({1}, {2.0}, true);
    auto st = OptimizerState::create({w}, {false}, AdamWConfig{});
    w.zero_grad();
    adamw_step({w}, st, 1e-2);
    CHECK(w.item() == 2.0);
}

TEST_CASE("trainable_parameters: biases and layer-norm affines exempt unless decay_all") {
    const auto s = init_params(test::tiny_config(), 2);
    const auto refs = s.parameters();
    const auto set = trainable_parameters(s);
    REQUIRE(set.tensors.size() == refs.size());
    for (std::size_t i = 0; i < refs.size(); ++i) CHECK(set.decay[i] == !refs[i].is_bias_or_norm);
    for (bool d : trainable_parameters(s, true).decay) CHECK(d);
}

TEST_CASE("optimizer is deterministic") {
    auto run = [] {
        Tensor w = test::random_tensor({4}, 3);
        auto st = OptimizerState::create({w}, {true}, AdamWConfig{});
        for (int k = 0; k < 5; ++k) {
            w.zero_grad();
            backward(ops::sum(ops::mul(w, w)));
            adamw_step({w}, st, 1e-2);
        }
        return std::vector<double>(w.data().begin(), w.data().end());
    };
    CHECK(test::bit_equal(run(), run()));
}
