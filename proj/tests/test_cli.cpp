#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "hype/config.hpp"
#include "hype/errors.hpp"
#include "hype/report.hpp"
#include "hype/runner.hpp"

using namespace hype;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("hype_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string config_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

// A compare run small enough for a unit test.
const std::string kTinyCompare = R"(# tiny compare
[experiment]
command = compare
name = tiny
baseline = vanilla

[data]
corpus_size = 120
train_size = 48
dev_size = 24
tasks = acceptability,similarity
max_len = 24

[model]
n_layers = 2
d_model = 8
n_heads = 2
d_ff = 16
max_seq_len = 24

[pretrain]
steps = 5
heldout = 16

[train]
lrs = 1e-4,2e-4
seeds = 1,2
epochs = 1

[technique.vanilla]
dropout = 0.1

[technique.hype_n]
noise = normal
sigma = 1e-5
dropout = 0
)";

MetricReport sample_report() {
    MetricReport r;
    r.command = "compare";
    r.name = "sample";
    TechniqueRow a{"acc", "vanilla", "matthews", 40.0, 1.5, 3, 2e-5, 0, false, std::nullopt, {}};
    TechniqueRow b{"acc", "hype_n", "matthews", 40.0, 0.5, 3, 1e-5, 0, false, std::nullopt, {}};
    a.per_lr = {{1e-5, 39.0, 1.0, 3, 0}, {2e-5, 40.0, 1.5, 3, 0}};
    r.rows = {a, b};
    r.series.push_back({"empty", "similarity", "acc", {}, {}});
    return r;
}

int run_cli(const std::string& args) {
    const int status = std::system((std::string(HYPE_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config: unknown sections and keys are rejected by name") {
    CHECK(config_error("[train]\nbogus = 1\n").find("train.bogus") != std::string::npos);
    CHECK(config_error("[nowhere]\nx = 1\n").find("nowhere") != std::string::npos);
    CHECK(config_error("[train]\nepochs = three\n").find("epochs") != std::string::npos);
    CHECK(config_error("[experiment]\ncommand = sing\n").find("sing") != std::string::npos);
    CHECK(config_error("[experiment]\ncommand = compare\n") .find("technique") != std::string::npos);
    CHECK(config_error(kTinyCompare + "[noise]\nsigma = 1e-5\n") != "");
    CHECK(config_error("[technique.a]\nsigma = 1e-5\n") != "");
}

TEST_CASE("config: defaults and parsed values") {
    const auto d = parse_config("");
    CHECK(d.command == Command::finetune);
    CHECK(d.train.lrs == std::vector<double>{1e-5, 2e-5, 3e-5, 4e-5});
    CHECK(d.train.base.epochs == 3);
    CHECK(d.train.base.batch_size == 16);
    CHECK(d.techniques.size() == 1);
    CHECK(d.techniques[0].dropout.rate == 0.1);
    const auto c = parse_config("[noise]\nform = uniform\nsigma = 1e-4\nlayers = top\nposition = intra_layer\n"
                                "[model]\nn_layers = 4\n[dropout]\ncombine_with_noise = true\n");
    const auto& t = c.techniques.at(0);
    CHECK(t.noise.form == NoiseForm::uniform);
    CHECK(t.noise.sigma == 1e-4);
    CHECK(t.noise.position == NoisePosition::intra_layer);
    CHECK(t.noise.layer_mask == std::set<std::size_t>{3, 4});
    CHECK(t.combine_dropout_with_noise);
    const auto cmp = parse_config(kTinyCompare);
    REQUIRE(cmp.techniques.size() == 2);
    CHECK(cmp.techniques[0].name == "vanilla");
    CHECK(cmp.techniques[1].noise.sigma == 1e-5);
    CHECK(cmp.techniques[1].dropout.rate == 0.0);
}

TEST_CASE("config: resolved text parses back to the same settings") {
    const auto c = parse_config(kTinyCompare);
    const auto text = resolved_config_text(c);
    CHECK(resolved_config_text(parse_config(text)) == text);
    CHECK(text.find("sigma = 1e-05") != std::string::npos);
}

TEST_CASE("config: validate checks referenced paths and layer masks") {
    CHECK_THROWS_AS(parse_config("[noise]\nform = normal\nsigma = 1\nlayers = 9\n[model]\nn_layers = 4\n").validate(),
                    ConfigError);
    auto c = parse_config("[model]\ncheckpoint = /nonexistent/x.ckpt\n");
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = parse_config("[data]\nsource = files\ntrain_path = /nonexistent/t.jsonl\ndev_path = /nonexistent/d.jsonl\n");
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("report: deterministic JSON, empty series, zero delta") {
    auto r = sample_report();
    apply_baseline(r, "vanilla");
    REQUIRE(r.rows[1].delta);
    CHECK(*r.rows[1].delta == 0.0);
    const auto json = dump_json(report_to_json(r));
    CHECK(json == dump_json(report_to_json(r)));
    CHECK(json.find("\"delta\": 0.000000") != std::string::npos);
    CHECK(json.find("\"values\": []") != std::string::npos);
    const auto csv = rows_to_csv(r);
    CHECK(csv.rfind("task,technique,metric,mean,std,n_seeds,best_lr,aborted,delta\n", 0) == 0);
    CHECK(csv.find("acc,hype_n,matthews,40.000000,0.500000,3,1e-05,0,0.000000") != std::string::npos);
    CHECK(series_to_csv(r) == "series,kind,task,layer,value,std\n");
    auto missing = sample_report();
    CHECK_THROWS_AS(apply_baseline(missing, "nobody"), ConfigError);
}

TEST_CASE("format_real") {
    CHECK(format_real(82.0) == "82.000000");
    CHECK(format_real(1.632993161855452) == "1.632993");
    CHECK(format_real(1e-5) == "1e-05");
    CHECK(format_real(0.0) == "0.000000");
    CHECK(format_real(-0.0) == "0.000000");
}

TEST_CASE("exit codes") {
    CHECK(exit_code_for(ConfigError("x")) == kExitConfig);
    CHECK(exit_code_for(IoError("x")) == kExitIo);
    CHECK(exit_code_for(DatasetError("x")) == kExitRun);
    CHECK(exit_code_for(std::runtime_error("x")) == kExitRun);
}

TEST_CASE("run_experiment: compare end to end, deterministic artifacts") {
    std::string reports[2];
    for (int k = 0; k < 2; ++k) {
        auto c = parse_config(kTinyCompare);
        c.output_dir = temp_dir("compare" + std::to_string(k));
        std::ostringstream log;
        const auto outcome = run_experiment(c, log);
        CHECK_FALSE(outcome.failed);
        CHECK(fs::exists(c.output_dir / "report.json"));
        CHECK(fs::exists(c.output_dir / "report.csv"));
        CHECK(fs::exists(c.output_dir / "resolved_config.ini"));
        CHECK(fs::exists(c.output_dir / "runs" / "acceptability" / "hype_n" / "lr0.0002_seed2.json"));
        REQUIRE(outcome.report.rows.size() == 4);
        for (const auto& row : outcome.report.rows) {
            CHECK(row.n_seeds == 2);
            CHECK(row.delta.has_value());
            if (row.technique == "vanilla") CHECK(*row.delta == 0.0);
        }
        CHECK(log.str().find("hype_n lr=") != std::string::npos);
        reports[k] = read_file(c.output_dir / "report.json");
    }
    CHECK(reports[0] == reports[1]);
}

TEST_CASE("run_experiment: every run aborting marks the outcome failed") {
    auto c = parse_config(kTinyCompare);
    c.output_dir = temp_dir("aborted");
    c.train.lrs = {1e300};
    c.train.base.warmup_fraction = 0.0;
    std::ostringstream log;
    const auto outcome = run_experiment(c, log);
    CHECK(outcome.failed);
    CHECK_FALSE(outcome.report.failures.empty());
}

TEST_CASE("command-line tool: exit codes and output override") {
    const auto dir = temp_dir("binary");
    std::ofstream(dir / "tiny.ini") << kTinyCompare;
    std::ofstream(dir / "bad.ini") << "[train]\nbogus = 1\n";
    std::ofstream(dir / "missing.ini") << "[model]\ncheckpoint = nope.ckpt\n";
    const auto cfg = (dir / "tiny.ini").string();
    CHECK(run_cli("--config " + cfg + " --out " + (dir / "out").string() + " --seed-override 3 --format json") == 0);
    CHECK(fs::exists(dir / "out" / "report.json"));
    CHECK_FALSE(fs::exists(dir / "out" / "report.csv"));
    CHECK(read_file(dir / "out" / "resolved_config.ini").find("seeds = 3\n") != std::string::npos);
    CHECK(run_cli("--config " + (dir / "bad.ini").string()) == kExitConfig);
    CHECK(run_cli("--config " + (dir / "missing.ini").string()) == kExitConfig);
    CHECK(run_cli("--out x") == kExitConfig);
    // A regular file where the output directory should go.
    std::ofstream(dir / "blocker") << "x";
    CHECK(run_cli("--config " + cfg + " --out " + (dir / "blocker" / "sub").string()) == kExitIo);
}
