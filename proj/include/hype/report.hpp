#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hype/config.hpp"
#include "hype/json_writer.hpp"
#include "hype/trainer.hpp"

namespace hype {

struct LrRow {
    double lr;
    double mean;
    double std;
    std::size_t n;
    std::size_t aborted;
};

// One technique on one task.
struct TechniqueRow {
    std::string task;
    std::string technique;
    std::string metric;
    double mean = 0.0;
    double std = 0.0;
    std::size_t n_seeds = 0;
    double best_lr = 0.0;
    std::size_t aborted = 0;
    bool all_aborted = false;
    std::optional<double> delta;  // mean - baseline mean, compare only
    std::vector<LrRow> per_lr;
};

// A per-layer curve: probe scores or similarity values for layers 0..n.
struct LayerSeries {
    std::string name;
    std::string kind;  // probe | similarity
    std::string task;
    std::vector<double> values;
    std::vector<double> stds;  // empty unless averaged over runs
};

struct MetricReport {
    std::string command;
    std::string name;
    std::string baseline;  // empty = no deltas
    std::vector<TechniqueRow> rows;
    std::vector<LayerSeries> series;
    // Scalar extras, e.g. pretraining losses.
    std::vector<std::pair<std::string, double>> summary;
    std::vector<std::string> failures;
};

TechniqueRow make_row(const std::string& task, const std::string& technique, MetricKind metric,
                      const GridResult& grid);

/// Fills row.delta for every task that has a baseline row. Throws
/// ConfigError when the baseline technique is missing from a task.
void apply_baseline(MetricReport& report, const std::string& baseline);

Json report_to_json(const MetricReport& report);
// Aggregates: one row per (task, technique).
std::string rows_to_csv(const MetricReport& report);
// Long format (series, kind, task, layer, value, std); empty series emit no rows.
std::string series_to_csv(const MetricReport& report);

/// Writes report.json and/or report.csv (+ series.csv when the report holds
/// series) into `dir`. Returns the written paths. Throws IoError.
std::vector<std::filesystem::path> emit_report(const MetricReport& report, const std::filesystem::path& dir,
                                               const OutputFormats& formats);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace hype
