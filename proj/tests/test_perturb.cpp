#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hype/errors.hpp"
#include "hype/perturb.hpp"
#include "support.hpp"

using namespace hype;
using test::bit_equal;

namespace {

struct Moments {
    double mean = 0.0, var = 0.0, min = 0.0, max = 0.0;
};

Moments moments(std::span<const double> v) {
    Moments m{0.0, 0.0, v[0], v[0]};
    for (double x : v) {
        m.mean += x;
        m.min = std::min(m.min, x);
        m.max = std::max(m.max, x);
    }
    m.mean /= static_cast<double>(v.size());
    for (double x : v) m.var += (x - m.mean) * (x - m.mean);
    m.var /= static_cast<double>(v.size());
    return m;
}

}  // namespace

TEST_CASE("rng streams: pure function of the key") {
    RngStream a({1, 2, 3, Purpose::noise_pre}), b({1, 2, 3, Purpose::noise_pre});
    RngStream c({1, 2, 4, Purpose::noise_pre}), d({1, 2, 3, Purpose::noise_intra});
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    CHECK(x != d());
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("normal noise moments") {
    const double sigma = 1e-5;
    const std::size_t n = 200000;
    RngStream rng({7, 0, 1, Purpose::noise_pre});
    const Tensor eps = sample_noise({n}, NoiseSpec::normal(sigma), rng);
    CHECK_FALSE(eps.requires_grad());
    const auto m = moments(eps.data());
    CHECK(std::fabs(m.mean) < 4.0 * sigma / std::sqrt(static_cast<double>(n)));
    CHECK(m.var > sigma * sigma * 0.98);
    CHECK(m.var < sigma * sigma * 1.02);
}

TEST_CASE("uniform noise support and variance") {
    const double sigma = 1e-4;
    const std::size_t n = 200000;
    RngStream rng({7, 0, 1, Purpose::noise_pre});
    const Tensor eps = sample_noise({n}, NoiseSpec::uniform(sigma), rng);
    const auto m = moments(eps.data());
    CHECK(m.min >= -sigma);
    CHECK(m.max <= sigma);
    CHECK(std::fabs(m.var / (sigma * sigma / 3.0) - 1.0) < 0.02);
}

TEST_CASE("sample_noise is deterministic per key and rejects form none") {
    RngStream a({3, 1, 1, Purpose::noise_pre}), b({3, 1, 1, Purpose::noise_pre});
    const auto spec = NoiseSpec::normal(0.1);
    CHECK(bit_equal(sample_noise({4, 5}, spec, a).data(), sample_noise({4, 5}, spec, b).data()));
    RngStream r({3, 1, 1, Purpose::noise_pre});
    CHECK_THROWS_AS(sample_noise({2}, NoiseSpec::none(), r), UsageError);
}

TEST_CASE("apply_perturbation identities") {
    const Tensor h = test::random_tensor({2, 3, 4}, 1, false);
    RngStream rng({1, 0, 1, Purpose::noise_pre});
    auto spec = NoiseSpec::normal(0.1);
    CHECK(apply_perturbation(h, 1, Site::pre_layer, spec, Mode::eval, rng).node() == h.node());
    CHECK(apply_perturbation(h, 1, Site::pre_layer, NoiseSpec::normal(0.0), Mode::train, rng).node() == h.node());
    spec.layer_mask = std::set<std::size_t>{3, 4};
    CHECK(apply_perturbation(h, 1, Site::pre_layer, spec, Mode::train, rng).node() == h.node());
    CHECK(apply_perturbation(h, 3, Site::intra_layer, spec, Mode::train, rng).node() == h.node());
    const Tensor p = apply_perturbation(h, 3, Site::pre_layer, spec, Mode::train, rng);
    CHECK_FALSE(bit_equal(p.data(), h.data()));
}

TEST_CASE("perturbation is unbiased: mean of h + eps converges to h") {
    const Tensor h = test::random_tensor({8}, 2, false);
    const double sigma = 0.1;
    const int draws = 20000;
    std::vector<double> acc(8, 0.0);
    for (int k = 0; k < draws; ++k) {
        RngStream rng({5, static_cast<std::uint64_t>(k), 1, Purpose::noise_pre});
        const Tensor p = apply_perturbation(h, 1, Site::pre_layer, NoiseSpec::normal(sigma), Mode::train, rng);
        for (std::size_t i = 0; i < 8; ++i) acc[i] += p.at(i);
    }
    for (std::size_t i = 0; i < 8; ++i) CHECK(std::fabs(acc[i] / draws - h.at(i)) < 4.0 * sigma / std::sqrt(draws));
}

TEST_CASE("gradient flows through the perturbation unchanged") {
    Tensor h = test::random_tensor({3, 4}, 3);
    RngStream rng({5, 0, 1, Purpose::noise_pre});
    const Tensor p = apply_perturbation(h, 1, Site::pre_layer, NoiseSpec::normal(0.3), Mode::train, rng);
    backward(ops::sum(ops::scale(p, 2.0)));
    for (double g : h.grad()) CHECK(g == 2.0);
}

TEST_CASE("dropout identities and unbiasedness") {
    const Tensor h = Tensor::full({1000000}, 1.0);
    RngStream rng({1, 0, 1, Purpose::dropout_pre});
    CHECK(apply_dropout(h, DropoutSpec{0.0}, Mode::train, rng).node() == h.node());
    CHECK(apply_dropout(h, DropoutSpec{0.5}, Mode::eval, rng).node() == h.node());
    const double rate = 0.1;
    const Tensor d = apply_dropout(h, DropoutSpec{rate}, Mode::train, rng);
    double mean = 0.0;
    std::size_t off_support = 0;
    for (double v : d.data()) {
        off_support += !(v == 0.0 || std::fabs(v - 1.0 / (1.0 - rate)) < 1e-15);
        mean += v;
    }
    CHECK(off_support == 0);
    mean /= 1e6;
    CHECK(std::fabs(mean - 1.0) < 4.0 * std::sqrt(rate / (1.0 - rate)) / 1000.0);
    CHECK_THROWS_AS((DropoutSpec{1.0}).validate(), UsageError);
    CHECK_THROWS_AS((DropoutSpec{-0.1}).validate(), UsageError);
}

TEST_CASE("dropout is switched off under noise unless combined") {
    const auto noise = NoiseSpec::normal(1e-5);
    CHECK(resolve_dropout(noise, DropoutSpec{0.1}, false).rate == 0.0);
    CHECK(resolve_dropout(noise, DropoutSpec{0.1}, true).rate == 0.1);
    CHECK(resolve_dropout(NoiseSpec::none(), DropoutSpec{0.1}, false).rate == 0.1);
}

TEST_CASE("layer masks and positions") {
    CHECK(top_half_layers(4) == std::set<std::size_t>{3, 4});
    CHECK(bottom_half_layers(4) == std::set<std::size_t>{1, 2});
    NoiseSpec s = NoiseSpec::normal(1.0);
    s.position = NoisePosition::intra_layer;
    CHECK(s.targets(1, Site::intra_layer));
    CHECK_FALSE(s.targets(1, Site::pre_layer));
    s.position = NoisePosition::both;
    s.layer_mask = std::set<std::size_t>{2};
    CHECK(s.targets(2, Site::pre_layer));
    CHECK_FALSE(s.targets(1, Site::pre_layer));
    s.layer_mask = std::set<std::size_t>{5};
    CHECK_THROWS_AS(s.validate(4), UsageError);
    s.layer_mask = std::set<std::size_t>{0};
    CHECK_THROWS_AS(s.validate(4), UsageError);
    CHECK_THROWS_AS(NoiseSpec::normal(-1.0).validate(4), UsageError);
}

TEST_CASE("masking a layer leaves other layers' draws untouched") {
    auto cfg = test::tiny_config();
    cfg.n_layers = 4;
    const auto s = init_params(cfg, 4);
    const auto seqs = test::tiny_sequences();
    const auto batch = make_batch(seqs, 0);
    ForwardContext all;
    all.mode = Mode::train;
    all.noise = NoiseSpec::normal(0.2);
    all.seed = 11;
    ForwardContext top = all;
    top.noise.layer_mask = top_half_layers(4);
    ForwardContext clean;
    const auto a = encode(s, batch, all), t = encode(s, batch, top), c = encode(s, batch, clean);
    // Lower layers see the clean states; layer 3's noise matches the unmasked run's draw.
    for (std::size_t l = 0; l < 2; ++l) CHECK(bit_equal(t.layer_inputs[l].data(), c.hidden[l].data()));
    std::vector<double> eps_top, eps_all;
    for (std::size_t i = 0; i < t.layer_inputs[2].numel(); ++i) {
        eps_top.push_back(t.layer_inputs[2].at(i) - t.hidden[2].at(i));
        eps_all.push_back(a.layer_inputs[2].at(i) - a.hidden[2].at(i));
    }
    RngStream rng = all.stream(3, Purpose::noise_pre);
    const Tensor eps = sample_noise(t.hidden[2].shape(), all.noise, rng);
    for (std::size_t i = 0; i < eps_top.size(); ++i) {
        CHECK(std::fabs(eps_top[i] - eps.at(i)) < 1e-12);
        CHECK(std::fabs(eps_all[i] - eps.at(i)) < 1e-12);
    }
}

TEST_CASE("trace records zero deltas away from targeted hooks") {
    auto cfg = test::tiny_config();
    cfg.n_layers = 4;
    const auto s = init_params(cfg, 5);
    const auto seqs = test::tiny_sequences();
    const auto batch = make_batch(seqs, 0);
    PerturbationTrace trace;
    ForwardContext ctx;
    ctx.mode = Mode::train;
    ctx.noise = NoiseSpec::normal(0.1);
    ctx.noise.layer_mask = top_half_layers(4);
    ctx.trace = &trace;
    encode(s, batch, ctx);
    for (std::size_t l = 1; l <= 4; ++l) {
        CHECK(trace.max_delta(l, Site::intra_layer, PerturbKind::noise) == 0.0);
        CHECK(trace.max_delta(l, Site::pre_layer, PerturbKind::dropout) == 0.0);
        if (l <= 2) {
            CHECK(trace.max_delta(l, Site::pre_layer, PerturbKind::noise) == 0.0);
        } else {
            CHECK(trace.max_delta(l, Site::pre_layer, PerturbKind::noise) > 0.0);
        }
    }
}

TEST_CASE("noise form and position names round-trip") {
    for (auto f : {NoiseForm::none, NoiseForm::normal, NoiseForm::uniform}) CHECK(parse_noise_form(to_string(f)) == f);
    for (auto p : {NoisePosition::pre_layer, NoisePosition::intra_layer, NoisePosition::both}) {
        CHECK(parse_noise_position(to_string(p)) == p);
    }
    CHECK_THROWS(parse_noise_form("laplace"));
}
