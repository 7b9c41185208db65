#include "hype/report.hpp"

#include <fstream>
#include <map>

#include "hype/errors.hpp"

namespace hype {

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return out + "\"";
}

}  // namespace

TechniqueRow make_row(const std::string& task, const std::string& technique, MetricKind metric,
                      const GridResult& grid) {
    TechniqueRow row;
    row.task = task;
    row.technique = technique;
    row.metric = to_string(metric);
    row.mean = grid.best.mean;
    row.std = grid.best.std;
    row.n_seeds = grid.best.n;
    row.best_lr = grid.best_lr;
    row.all_aborted = grid.all_aborted;
    for (const auto& s : grid.per_lr) {
        row.aborted += s.aborted;
        row.per_lr.push_back({s.lr, s.score.mean, s.score.std, s.score.n, s.aborted});
    }
    return row;
}

void apply_baseline(MetricReport& report, const std::string& baseline) {
    report.baseline = baseline;
    std::map<std::string, double> base;
    for (const auto& r : report.rows) {
        if (r.technique == baseline) base[r.task] = r.mean;
    }
    for (auto& r : report.rows) {
        const auto it = base.find(r.task);
        if (it == base.end()) throw ConfigError("baseline '" + baseline + "' has no result on task '" + r.task + "'");
        r.delta = r.mean - it->second;
    }
}

Json report_to_json(const MetricReport& report) {
    Json j = Json::object();
    j["command"] = report.command;
    j["name"] = report.name;
    if (!report.baseline.empty()) j["baseline"] = report.baseline;
    Json rows = Json::array();
    for (const auto& r : report.rows) {
        Json row = Json::object();
        row["task"] = r.task;
        row["technique"] = r.technique;
        row["metric"] = r.metric;
        row["mean"] = r.mean;
        row["std"] = r.std;
        row["n_seeds"] = r.n_seeds;
        row["best_lr"] = r.best_lr;
        row["aborted"] = r.aborted;
        row["all_aborted"] = r.all_aborted;
        if (r.delta) row["delta"] = *r.delta;
        Json per_lr = Json::array();
        for (const auto& l : r.per_lr) {
            per_lr.push_back(
                Json{{"lr", l.lr}, {"mean", l.mean}, {"std", l.std}, {"n", l.n}, {"aborted", l.aborted}});
        }
        row["per_lr"] = per_lr;
        rows.push_back(row);
    }
    j["rows"] = rows;
    Json series = Json::array();
    for (const auto& s : report.series) {
        Json o = Json::object();
        o["name"] = s.name;
        o["kind"] = s.kind;
        o["task"] = s.task;
        o["values"] = Json::array();
        for (double v : s.values) o["values"].push_back(v);
        if (!s.stds.empty()) {
            o["std"] = Json::array();
            for (double v : s.stds) o["std"].push_back(v);
        }
        series.push_back(o);
    }
    j["series"] = series;
    Json summary = Json::object();
    for (const auto& [k, v] : report.summary) summary[k] = v;
    j["summary"] = summary;
    j["failures"] = report.failures;
    return j;
}

std::string rows_to_csv(const MetricReport& report) {
    const bool with_delta = !report.baseline.empty();
    std::string out = "task,technique,metric,mean,std,n_seeds,best_lr,aborted";
    out += with_delta ? ",delta\n" : "\n";
    for (const auto& r : report.rows) {
        out += csv_field(r.task) + "," + csv_field(r.technique) + "," + r.metric + "," + format_real(r.mean) + "," +
               format_real(r.std) + "," + std::to_string(r.n_seeds) + "," + format_real(r.best_lr) + "," +
               std::to_string(r.aborted);
        if (with_delta) out += "," + (r.delta ? format_real(*r.delta) : std::string());
        out += "\n";
    }
    return out;
}

std::string series_to_csv(const MetricReport& report) {
    std::string out = "series,kind,task,layer,value,std\n";
    for (const auto& s : report.series) {
        for (std::size_t l = 0; l < s.values.size(); ++l) {
            out += csv_field(s.name) + "," + s.kind + "," + csv_field(s.task) + "," + std::to_string(l) + "," +
                   format_real(s.values[l]) + "," + (l < s.stds.size() ? format_real(s.stds[l]) : std::string()) +
                   "\n";
        }
    }
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    out.close();
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::filesystem::path> emit_report(const MetricReport& report, const std::filesystem::path& dir,
                                               const OutputFormats& formats) {
    std::vector<std::filesystem::path> written;
    if (formats.json) {
        written.push_back(dir / "report.json");
        write_text_file(written.back(), dump_json(report_to_json(report)));
    }
    if (formats.csv) {
        written.push_back(dir / "report.csv");
        write_text_file(written.back(), rows_to_csv(report));
        if (!report.series.empty()) {
            written.push_back(dir / "series.csv");
            write_text_file(written.back(), series_to_csv(report));
        }
    }
    return written;
}

}  // namespace hype
