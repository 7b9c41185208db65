#include "hype/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "hype/errors.hpp"

namespace hype {

namespace {

void require_same_length(std::size_t a, std::size_t b) {
    if (a != b) throw UsageError("metric: " + std::to_string(a) + " predictions vs " + std::to_string(b) + " targets");
    if (a == 0) throw UsageError("metric: empty inputs");
}

std::vector<double> average_ranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

std::vector<std::size_t> as_labels(std::span<const double> values) {
    std::vector<std::size_t> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        if (!(v >= 0.0) || std::floor(v) != v) {
            throw UsageError("classification metric given non-integral label " + std::to_string(v));
        }
        out[i] = static_cast<std::size_t>(v);
    }
    return out;
}

}  // namespace

bool is_classification_metric(MetricKind kind) {
    return kind == MetricKind::accuracy || kind == MetricKind::f1 || kind == MetricKind::matthews;
}

std::string to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::accuracy:
            return "accuracy";
        case MetricKind::f1:
            return "f1";
        case MetricKind::matthews:
            return "matthews";
        case MetricKind::pearson:
            return "pearson";
        case MetricKind::spearman:
            return "spearman";
        case MetricKind::pearson_spearman:
            return "pearson_spearman";
    }
    return "accuracy";
}

MetricKind parse_metric_kind(const std::string& text) {
    for (auto k : {MetricKind::accuracy, MetricKind::f1, MetricKind::matthews, MetricKind::pearson,
                   MetricKind::spearman, MetricKind::pearson_spearman}) {
        if (to_string(k) == text) return k;
    }
    throw ConfigError("unknown metric '" + text + "'");
}

double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> targets) {
    require_same_length(predictions.size(), targets.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) hits += predictions[i] == targets[i];
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

MetricResult f1_binary(std::span<const std::size_t> predictions, std::span<const std::size_t> targets) {
    require_same_length(predictions.size(), targets.size());
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool p = predictions[i] == 1, t = targets[i] == 1;
        tp += p && t;
        fp += p && !t;
        fn += !p && t;
    }
    const double denom = 2 * tp + fp + fn;
    if (denom == 0) return {0.0, true};
    return {2 * tp / denom, false};
}

MetricResult matthews(std::span<const std::size_t> predictions, std::span<const std::size_t> targets) {
    require_same_length(predictions.size(), targets.size());
    const std::size_t k =
        1 + std::max(*std::max_element(predictions.begin(), predictions.end()),
                     *std::max_element(targets.begin(), targets.end()));
    std::vector<double> pred_count(k, 0.0), true_count(k, 0.0);
    double correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        pred_count[predictions[i]] += 1;
        true_count[targets[i]] += 1;
        correct += predictions[i] == targets[i];
    }
    const double s = static_cast<double>(predictions.size());
    double pt = 0, pp = 0, tt = 0;
    for (std::size_t c = 0; c < k; ++c) {
        pt += pred_count[c] * true_count[c];
        pp += pred_count[c] * pred_count[c];
        tt += true_count[c] * true_count[c];
    }
    const double denom = std::sqrt((s * s - pp) * (s * s - tt));
    if (denom == 0.0) return {0.0, true};
    return {(correct * s - pt) / denom, false};
}

MetricResult pearson(std::span<const double> x, std::span<const double> y) {
    require_same_length(x.size(), y.size());
    // Checked directly: rounding in the mean can leave a constant input with
    // tiny nonzero deviations.
    auto constant = [](std::span<const double> v) {
        return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
    };
    if (constant(x) || constant(y)) return {0.0, true};
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return {0.0, true};
    return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), false};
}

MetricResult spearman(std::span<const double> x, std::span<const double> y) {
    require_same_length(x.size(), y.size());
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

MetricResult compute_metric(MetricKind kind, std::span<const double> predictions, std::span<const double> targets) {
    require_same_length(predictions.size(), targets.size());
    switch (kind) {
        case MetricKind::accuracy: {
            const auto p = as_labels(predictions), t = as_labels(targets);
            return {accuracy(p, t), false};
        }
        case MetricKind::f1: {
            const auto p = as_labels(predictions), t = as_labels(targets);
            return f1_binary(p, t);
        }
        case MetricKind::matthews: {
            const auto p = as_labels(predictions), t = as_labels(targets);
            return matthews(p, t);
        }
        case MetricKind::pearson:
            return pearson(predictions, targets);
        case MetricKind::spearman:
            return spearman(predictions, targets);
        case MetricKind::pearson_spearman: {
            const auto p = pearson(predictions, targets);
            const auto s = spearman(predictions, targets);
            MetricResult r;
            r.pearson = p.value;
            r.spearman = s.value;
            r.value = 0.5 * (p.value + s.value);
            r.degenerate = p.degenerate || s.degenerate;
            return r;
        }
    }
    return {};
}

}  // namespace hype
