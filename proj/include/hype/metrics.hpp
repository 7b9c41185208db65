#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace hype {

enum class MetricKind { accuracy, f1, matthews, pearson, spearman, pearson_spearman };

bool is_classification_metric(MetricKind kind);
std::string to_string(MetricKind kind);
MetricKind parse_metric_kind(const std::string& text);

struct MetricResult {
    double value = 0.0;
    // Set when a denominator vanished and the value was defined as 0.
    bool degenerate = false;
    // Filled for pearson_spearman; value is their mean.
    double pearson = 0.0;
    double spearman = 0.0;
};

// Classification metrics take class indices. f1 treats class 1 as positive.
double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> targets);
MetricResult f1_binary(std::span<const std::size_t> predictions, std::span<const std::size_t> targets);
// Multiclass Matthews correlation (reduces to the binary formula for two classes).
MetricResult matthews(std::span<const std::size_t> predictions, std::span<const std::size_t> targets);

MetricResult pearson(std::span<const double> x, std::span<const double> y);
// Ties receive their average rank.
MetricResult spearman(std::span<const double> x, std::span<const double> y);

// Dispatch. For classification kinds both spans must hold integral class
// indices; throws UsageError on length mismatch or non-integral labels.
MetricResult compute_metric(MetricKind kind, std::span<const double> predictions, std::span<const double> targets);

}  // namespace hype
