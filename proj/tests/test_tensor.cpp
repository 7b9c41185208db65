#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "hype/errors.hpp"
#include "support.hpp"

using namespace hype;
using hype::test::check_gradients;
using hype::test::random_tensor;

TEST_CASE("matmul: identity, zero and naive oracle") {
    const Tensor a = random_tensor({3, 3}, 1, false);
    const Tensor eye = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    CHECK(test::bit_equal(ops::matmul(eye, a).data(), a.data()));

    const Tensor z = ops::matmul(Tensor::from({2, 2}, {1, 2, 3, 4}), Tensor::zeros({2, 1}));
    CHECK(z.shape() == Shape{2, 1});
    CHECK(z.at(0) == 0.0);
    CHECK(z.at(1) == 0.0);

    const Tensor x = random_tensor({4, 5}, 2, false);
    const Tensor y = random_tensor({5, 3}, 3, false);
    const Tensor p = ops::matmul(x, y);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < 5; ++k) acc += x.at(i * 5 + k) * y.at(k * 3 + j);
            CHECK(std::fabs(p.at(i * 3 + j) - acc) < 1e-12);
        }
    }
    CHECK_THROWS_AS(ops::matmul(x, x), DimensionError);
}

TEST_CASE("bmm matches per-batch matmul with and without transpose") {
    const Tensor a = random_tensor({2, 3, 4}, 4, false);
    const Tensor b = random_tensor({2, 4, 5}, 5, false);
    const Tensor bt = random_tensor({2, 5, 4}, 6, false);
    const Tensor c = ops::bmm(a, b);
    const Tensor ct = ops::bmm(a, bt, true);
    for (std::size_t n = 0; n < 2; ++n) {
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 5; ++j) {
                double acc = 0.0, acct = 0.0;
                for (std::size_t k = 0; k < 4; ++k) {
                    acc += a.at(n * 12 + i * 4 + k) * b.at(n * 20 + k * 5 + j);
                    acct += a.at(n * 12 + i * 4 + k) * bt.at(n * 20 + j * 4 + k);
                }
                CHECK(std::fabs(c.at(n * 15 + i * 5 + j) - acc) < 1e-12);
                CHECK(std::fabs(ct.at(n * 15 + i * 5 + j) - acct) < 1e-12);
            }
        }
    }
}

TEST_CASE("softmax examples and normalization") {
    const Tensor s = ops::softmax(Tensor::from({2}, {0, 0}), 0);
    CHECK(s.at(0) == 0.5);
    CHECK(s.at(1) == 0.5);

    const Tensor big = ops::softmax(Tensor::from({2}, {1000, 0}), 0);
    CHECK(std::fabs(big.at(0) - 1.0) < 1e-12);
    CHECK(std::fabs(big.at(1)) < 1e-12);

    const Tensor t = ops::softmax(Tensor::from({3}, {1, 2, 3}), 0);
    const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    for (int i = 0; i < 3; ++i) CHECK(std::fabs(t.at(i) - std::exp(i + 1.0) / z) < 1e-12);

    const Tensor r = ops::softmax(random_tensor({3, 4, 5}, 7, false, 3.0), 1);
    for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t c = 0; c < 5; ++c) {
            double total = 0.0;
            for (std::size_t b = 0; b < 4; ++b) {
                const double v = r.at(a * 20 + b * 5 + c);
                CHECK(v >= 0.0);
                total += v;
            }
            CHECK(std::fabs(total - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("layer_norm examples") {
    const Tensor ones = Tensor::full({4}, 1.0), zeros = Tensor::zeros({4});
    const Tensor c = ops::layer_norm(Tensor::from({1, 4}, {5, 5, 5, 5}), ones, zeros, 1e-12);
    for (int i = 0; i < 4; ++i) CHECK(c.at(i) == 0.0);

    const Tensor bias = Tensor::from({4}, {0.5, -1, 2, 3});
    const Tensor g = ops::layer_norm(random_tensor({2, 4}, 8, false), zeros, bias, 1e-12);
    for (int i = 0; i < 8; ++i) CHECK(g.at(i) == bias.at(i % 4));

    const Tensor h = ops::layer_norm(Tensor::from({1, 4}, {1, 2, 3, 4}), ones, zeros, 1e-12);
    const double mean = 2.5, var = 1.25;
    for (int i = 0; i < 4; ++i) CHECK(std::fabs(h.at(i) - (i + 1 - mean) / std::sqrt(var + 1e-12)) < 1e-10);

    const Tensor w = ops::layer_norm(random_tensor({6, 16}, 9, false, 5.0), Tensor::full({16}, 1.0),
                                     Tensor::zeros({16}), 1e-12);
    for (std::size_t r = 0; r < 6; ++r) {
        double m = 0.0, v = 0.0;
        for (std::size_t j = 0; j < 16; ++j) m += w.at(r * 16 + j) / 16.0;
        for (std::size_t j = 0; j < 16; ++j) v += (w.at(r * 16 + j) - m) * (w.at(r * 16 + j) - m) / 16.0;
        CHECK(std::fabs(m) < 1e-10);
        CHECK(std::fabs(v - 1.0) < 1e-6);
    }
}

TEST_CASE("gelu examples") {
    const Tensor g = ops::gelu(Tensor::from({3}, {0, 10, 1}));
    CHECK(g.at(0) == 0.0);
    CHECK(std::fabs(g.at(1) - 10.0) < 1e-9);
    CHECK(std::fabs(g.at(2) - 0.5 * (1.0 + std::erf(1.0 / std::sqrt(2.0)))) < 1e-15);
    CHECK(std::fabs(g.at(2) - 0.8413447460685429) < 1e-12);
}

TEST_CASE("cross_entropy and mse examples") {
    const std::vector<std::size_t> labels{2, 0};
    CHECK(std::fabs(ops::cross_entropy(Tensor::zeros({2, 4}), labels).item() - std::log(4.0)) < 1e-12);
    const std::vector<std::size_t> first{0};
    const double ce = ops::cross_entropy(Tensor::from({1, 2}, {2, 0}), first).item();
    CHECK(std::fabs(ce - -std::log(std::exp(2.0) / (std::exp(2.0) + 1.0))) < 1e-12);
    CHECK(std::fabs(ce - 0.1269280110429725) < 1e-12);
    const std::vector<std::size_t> bad{5};
    CHECK_THROWS_AS(ops::cross_entropy(Tensor::zeros({1, 2}), bad), InputError);

    const Tensor x = random_tensor({3, 2}, 10, false);
    CHECK(ops::mse(x, x).item() == 0.0);
}

TEST_CASE("backward basics") {
    Tensor w = random_tensor({2, 3}, 11);
    backward(ops::sum(w));
    for (double g : w.grad()) CHECK(g == 1.0);

    Tensor s = Tensor::scalar(3.0, true);
    backward(ops::mse(s, Tensor::scalar(0.0)));
    CHECK(s.grad()[0] == doctest::Approx(6.0).epsilon(1e-15));

    CHECK_THROWS_AS(backward(w), UsageError);
}

TEST_CASE("gradients accumulate until zeroed") {
    Tensor w = Tensor::from({2}, {1.0, 2.0}, true);
    backward(ops::sum(ops::mul(w, w)));
    backward(ops::sum(ops::mul(w, w)));
    CHECK(w.grad()[0] == 4.0);
    CHECK(w.grad()[1] == 8.0);
    w.zero_grad();
    CHECK_FALSE(w.has_grad());
}

TEST_CASE("no-grad mode records nothing") {
    Tensor w = random_tensor({3}, 12);
    Tensor y;
    {
        NoGradGuard no_grad;
        CHECK_FALSE(grad_enabled());
        y = ops::sum(ops::mul(w, w));
    }
    CHECK(grad_enabled());
    CHECK_FALSE(y.requires_grad());
}

TEST_CASE("finite-difference agreement for every primitive") {
    const double tol = 1e-4;
    auto run = [&](const char* name, const std::function<Tensor()>& f, const std::vector<Tensor>& params) {
        const auto r = check_gradients(f, params);
        INFO(name << ": " << r.worst);
        CHECK(r.max_rel_error < tol);
    };
    Tensor a = random_tensor({3, 4}, 20), b = random_tensor({4, 2}, 21), bias = random_tensor({2}, 22);
    Tensor weights = random_tensor({3, 2}, 23, false);
    auto weighted = [&](const Tensor& t) { return ops::sum(ops::mul(t, weights)); };
    run("matmul", [&] { return weighted(ops::matmul(a, b)); }, {a, b});
    run("linear", [&] { return weighted(ops::linear(a, b, bias)); }, {a, b, bias});

    Tensor x3 = random_tensor({2, 3, 4}, 24), y3 = random_tensor({2, 4, 3}, 25), yt = random_tensor({2, 3, 4}, 26);
    Tensor w3 = random_tensor({2, 3, 3}, 27, false);
    run("bmm", [&] { return ops::sum(ops::mul(ops::bmm(x3, y3), w3)); }, {x3, y3});
    run("bmm transpose", [&] { return ops::sum(ops::mul(ops::bmm(x3, yt, true), w3)); }, {x3, yt});

    Tensor c = random_tensor({3, 4}, 28), wsm = random_tensor({3, 4}, 29, false);
    run("softmax", [&] { return ops::sum(ops::mul(ops::softmax(c, 1), wsm)); }, {c});
    run("softmax axis 0", [&] { return ops::sum(ops::mul(ops::softmax(c, 0), wsm)); }, {c});
    Tensor gain = random_tensor({4}, 30), lb = random_tensor({4}, 31);
    run("layer_norm", [&] { return ops::sum(ops::mul(ops::layer_norm(c, gain, lb, 1e-12), wsm)); }, {c, gain, lb});
    run("gelu", [&] { return ops::sum(ops::mul(ops::gelu(c), wsm)); }, {c});
    run("add/mul/scale", [&] { return ops::sum(ops::scale(ops::mul(ops::add(c, wsm), c), 0.7)); }, {c});
    const std::vector<std::size_t> labels{1, 3, 0};
    run("cross_entropy", [&] { return ops::cross_entropy(c, labels); }, {c});
    run("mse", [&] { return ops::mse(c, wsm); }, {c});
    const std::vector<std::size_t> ids{2, 0, 2};
    run("gather_rows", [&] { return ops::sum(ops::mul(ops::gather_rows(c, ids), wsm)); }, {c});
    Tensor w2 = random_tensor({2, 4}, 32, false);
    run("select_position", [&] { return ops::sum(ops::mul(ops::select_position(x3, 1), w2)); }, {x3});
    run("reshape", [&] { return ops::sum(ops::mul(ops::reshape(c, {4, 3}), ops::reshape(wsm, {4, 3}))); }, {c});
    Tensor h = random_tensor({2, 3, 4}, 33), wh = random_tensor({4, 3, 2}, 34, false);
    run("split/merge heads", [&] {
        return ops::sum(ops::mul(ops::merge_heads(ops::scale(ops::split_heads(h, 2), 1.5), 2), h));
    }, {h});
    run("split heads", [&] { return ops::sum(ops::mul(ops::split_heads(h, 2), wh)); }, {h});
}

TEST_CASE("operations are deterministic") {
    const Tensor a = random_tensor({5, 7}, 40, false), b = random_tensor({7, 3}, 41, false);
    const Tensor g = Tensor::full({3}, 1.0), z = Tensor::zeros({3});
    auto f = [&] { return ops::gelu(ops::layer_norm(ops::matmul(a, b), g, z, 1e-12)); };
    const Tensor first = f(), second = f();
    CHECK(test::bit_equal(first.data(), second.data()));
}
