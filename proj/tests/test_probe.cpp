#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "hype/errors.hpp"
#include "hype/probe.hpp"
#include "support.hpp"

using namespace hype;

namespace {

using Ids = std::vector<std::size_t>;

double naive_similarity(const std::vector<double>& t, std::size_t n, std::size_t d) {
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            double dot = 0.0, na = 0.0, nb = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                dot += t[a * d + k] * t[b * d + k];
                na += t[a * d + k] * t[a * d + k];
                nb += t[b * d + k] * t[b * d + k];
            }
            total += (na == 0.0 || nb == 0.0) ? 0.0 : dot / (std::sqrt(na) * std::sqrt(nb));
            ++pairs;
        }
    }
    return total / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("classification metric oracles") {
    const Ids t{1, 0, 1, 0, 1};
    CHECK(accuracy(t, t) == 1.0);
    CHECK(f1_binary(t, t).value == 1.0);
    CHECK(matthews(t, t).value == 1.0);
    const Ids p4{1, 1, 0, 0}, t4{1, 0, 1, 0};
    CHECK(matthews(p4, t4).value == 0.0);
    CHECK_FALSE(matthews(p4, t4).degenerate);
    CHECK(accuracy(p4, t4) == 0.5);
    CHECK(f1_binary(p4, t4).value == 0.5);
    const Ids ones{1, 1, 1, 1};
    const auto deg = matthews(ones, t4);
    CHECK(deg.value == 0.0);
    CHECK(deg.degenerate);
    // tp=2 fp=1 fn=1 tn=1: (2*1 - 1*1) / sqrt(3*3*2*2)
    const Ids p5{1, 1, 1, 0, 0}, t5{1, 1, 0, 1, 0};
    CHECK(std::fabs(matthews(p5, t5).value - 1.0 / 6.0) < 1e-12);
    CHECK(std::fabs(f1_binary(p5, t5).value - 2.0 / 3.0) < 1e-12);
    const Ids none{0, 0, 0, 0};
    CHECK(f1_binary(none, none).degenerate);
}

TEST_CASE("correlation metric oracles") {
    const std::vector<double> x{1, 2, 3}, y{3, 1, 2}, r{3, 2, 1};
    CHECK(std::fabs(spearman(x, y).value - -0.5) < 1e-12);
    CHECK(std::fabs(spearman(x, r).value - -1.0) < 1e-12);
    CHECK(std::fabs(pearson(x, r).value - -1.0) < 1e-12);
    const std::vector<double> a{1, 2, 3, 4}, b{2, 4, 5, 9};
    // mean 2.5 / 5; cov = (-1.5*-3 + -0.5*-1 + 0.5*0 + 1.5*4) = 11; vars 5 and 26
    CHECK(std::fabs(pearson(a, b).value - 11.0 / std::sqrt(5.0 * 26.0)) < 1e-12);
    const std::vector<double> ties{1, 1, 2, 3};
    // Average ranks 1.5, 1.5, 3, 4 against 1..4.
    const double rank_r = pearson(std::vector<double>{1.5, 1.5, 3, 4}, a).value;
    CHECK(std::fabs(spearman(ties, a).value - rank_r) < 1e-12);
    const std::vector<double> flat{2, 2, 2};
    CHECK(pearson(flat, x).degenerate);
    CHECK(pearson(flat, x).value == 0.0);
    const std::vector<double> rounding(301, 0.1), noisy_y = [] {
        std::vector<double> v(301);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(static_cast<double>(i));
        return v;
    }();
    CHECK(pearson(rounding, noisy_y).degenerate);
    CHECK(pearson(rounding, noisy_y).value == 0.0);
    const auto both = compute_metric(MetricKind::pearson_spearman, a, b);
    CHECK(std::fabs(both.value - (both.pearson + both.spearman) / 2.0) < 1e-15);
    CHECK_THROWS_AS(compute_metric(MetricKind::pearson, x, a), UsageError);
    CHECK_THROWS_AS(compute_metric(MetricKind::accuracy, std::vector<double>{0.5}, std::vector<double>{1}), UsageError);
}

TEST_CASE("metric ranges on random inputs") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng() % 20;
        Ids p(n), t(n);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = rng() % 3;
            t[i] = rng() % 3;
            x[i] = static_cast<double>(rng() % 5);
            y[i] = static_cast<double>(rng() % 1000) / 7.0;
        }
        const double acc = accuracy(p, t), mcc = matthews(p, t).value;
        CHECK(acc >= 0.0);
        CHECK(acc <= 1.0);
        CHECK(std::fabs(mcc) <= 1.0 + 1e-12);
        for (auto& v : p) v %= 2;
        for (auto& v : t) v %= 2;
        const double f1 = f1_binary(p, t).value;
        CHECK(f1 >= 0.0);
        CHECK(f1 <= 1.0);
        CHECK(std::fabs(pearson(x, y).value) <= 1.0 + 1e-12);
        CHECK(std::fabs(spearman(x, y).value) <= 1.0 + 1e-12);
    }
}

TEST_CASE("sample_similarity oracles") {
    const std::vector<double> three{1, 0, 0, 1, 1, 1};
    CHECK(std::fabs(*sample_similarity(three, 3, 2) - (0.0 + 2.0 / std::sqrt(2.0)) / 3.0) < 1e-12);
    CHECK(std::fabs(*sample_similarity(three, 3, 2) - 0.4714045207910317) < 1e-12);
    const std::vector<double> same{0.3, -2, 0.3, -2, 0.3, -2};
    CHECK(std::fabs(*sample_similarity(same, 3, 2) - 1.0) < 1e-12);
    const std::vector<double> ortho{0, 2, 5, 0};
    CHECK(*sample_similarity(ortho, 2, 2) == 0.0);
    const std::vector<double> zero_row{0, 0, 1, 1};
    CHECK(std::fabs(*sample_similarity(zero_row, 2, 2)) < 1e-12);
    CHECK_FALSE(sample_similarity(std::vector<double>{1, 2}, 1, 2).has_value());
}

TEST_CASE("sample_similarity matches the double loop; permutation and scale invariant") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng() % 12, d = 1 + rng() % 10;
        std::vector<double> t(n * d);
        for (auto& v : t) v = g(rng);
        const double s = *sample_similarity(t, n, d);
        CHECK(std::fabs(s - naive_similarity(t, n, d)) < 1e-12);
        CHECK(s >= -1.0 - 1e-12);
        CHECK(s <= 1.0 + 1e-12);

        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<double> perm(n * d), scaled(t);
        for (std::size_t i = 0; i < n; ++i) std::copy_n(t.begin() + order[i] * d, d, perm.begin() + i * d);
        for (auto& v : scaled) v *= 3.7;
        CHECK(std::fabs(*sample_similarity(perm, n, d) - s) < 1e-12);
        CHECK(std::fabs(*sample_similarity(scaled, n, d) - s) < 1e-12);
    }
}

TEST_CASE("similarity_curve: one value per hidden state, skips short samples, excludes padding") {
    const auto s = init_params(test::tiny_config(), 2);
    std::vector<TokenSequence> seqs = test::tiny_sequences();
    seqs.push_back({{2}, {0}});
    const auto curve = similarity_curve(s, seqs, 0);
    CHECK(curve.values.size() == s.config.n_layers + 1);
    CHECK(curve.samples == 3);
    CHECK(curve.skipped == 1);
    // Padding from batching with longer sequences must not change the values.
    const auto alone = similarity_curve(s, std::vector<TokenSequence>(seqs.begin(), seqs.begin() + 1), 0);
    const auto first = similarity_curve(s, std::vector<TokenSequence>{seqs[0], seqs[1]}, 0, {true, 1});
    const auto batched = similarity_curve(s, std::vector<TokenSequence>{seqs[0], seqs[1]}, 0, {true, 64});
    for (std::size_t l = 0; l < curve.values.size(); ++l) {
        CHECK(std::fabs(first.values[l] - batched.values[l]) < 1e-12);
        CHECK(curve.values[l] >= -1.0);
        CHECK(curve.values[l] <= 1.0);
    }
    CHECK(alone.samples == 1);
    const auto no_first = similarity_curve(s, seqs, 0, {false, 64});
    CHECK(no_first.samples == 3);
    CHECK(no_first.values != curve.values);
}

TEST_CASE("linear probe: backbone frozen, layer range, determinism") {
    const auto backbone = init_params(test::tiny_config(), 3);
    const auto task = test::toy_task(40, 20, 1);
    const auto before = backbone_checksum(backbone);
    const auto r = probe_all_layers(backbone, task, 5);
    CHECK(backbone_checksum(backbone) == before);
    REQUIRE(r.layers.size() == backbone.config.n_layers + 1);
    for (std::size_t l = 0; l < r.layers.size(); ++l) {
        CHECK(r.layers[l].layer == l);
        CHECK(r.layers[l].score >= 0.0);
        CHECK(r.layers[l].score <= 100.0);
    }
    const auto single = linear_probe(backbone, task, 2, 5);
    CHECK(single.score == r.layers[2].score);
    CHECK(linear_probe(backbone, task, 2, 5).score == single.score);
    CHECK_THROWS_AS(linear_probe(backbone, task, 3, 5), InputError);
}

TEST_CASE("probing the fine-tuned top layer beats chance") {
    const auto task = test::toy_task(200, 100, 2);
    TrainRunConfig cfg;
    cfg.task = task.name;
    cfg.peak_lr = 3e-3;
    cfg.epochs = 5;
    cfg.seed = 1;
    cfg.dropout = DropoutSpec{0.0};
    const auto run = finetune(init_params(test::tiny_config(), 4), task, cfg);
    REQUIRE_FALSE(run.aborted);
    CHECK(run.final_score > 70.0);
    const auto top = linear_probe(*run.state, task, run.state->config.n_layers, 1, {1e-2, 10, 16});
    CHECK(top.score >= 50.0 + 20.0);
}
