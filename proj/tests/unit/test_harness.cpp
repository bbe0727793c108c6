#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "robustlab/error.hpp"
#include "robustlab/harness/config.hpp"
#include "robustlab/harness/csv.hpp"
#include "robustlab/harness/datasets.hpp"
#include "robustlab/harness/experiment.hpp"
#include "robustlab/harness/theory_suite.hpp"
#include "robustlab/metrics.hpp"
#include "robustlab/rng.hpp"

using namespace robustlab;
using namespace robustlab::harness;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("robustlab_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json small_config() {
    return json{{"task", "regression_teacher"},
                {"n_train", 200},
                {"n_test", 50},
                {"p", 4},
                {"q", 2},
                {"data_seed", 1},
                {"corruption", {{"kind", "signflip"}, {"rate", 0.2}, {"seed", 2}}},
                {"train",
                 {{"method", json::array({"standard", "prl_l"})},
                  {"epochs", 12},
                  {"batch_size", 32},
                  {"ramp_epochs", 3},
                  {"hidden", json::array({8})},
                  {"seed", 5}}},
                {"repeats", 2}};
}

}  // namespace

TEST_CASE("regression data") {
    const auto a = gen_regression(100, 40, 20, 10, 7);
    const auto b = gen_regression(100, 40, 20, 10, 7);
    const auto c = gen_regression(100, 40, 20, 10, 8);
    CHECK(a.train.X == b.train.X);
    CHECK(a.train.Y == b.train.Y);
    CHECK(a.test.Y == b.test.Y);
    CHECK_FALSE(a.train.X == c.train.X);
    CHECK(a.train.X.rows() == 100);
    CHECK(a.train.X.cols() == 20);
    CHECK(a.train.Y.cols() == 10);
    CHECK(a.test.X.rows() == 40);
    CHECK(a.target == TargetKind::regression);
    for (std::size_t i = 0; i < 40; ++i) {
        for (std::size_t r = 0; r < 100; ++r) {
            bool same = true;
            for (std::size_t j = 0; j < 20; ++j) {
                same = same && a.test.X(i, j) == a.train.X(r, j);
            }
            CHECK_FALSE(same);
        }
    }
    double sx = 0.0;
    double sxx = 0.0;
    for (double x : a.train.X.values()) {
        sx += x;
        sxx += x * x;
    }
    const double n = static_cast<double>(a.train.X.size());
    CHECK(std::abs(sx / n) < 0.1);
    CHECK(std::abs(sxx / n - 1.0) < 0.1);
}

TEST_CASE("blob data") {
    const auto a = gen_blobs(1003, 200, 20, 10, 3);
    const auto b = gen_blobs(1003, 200, 20, 10, 3);
    CHECK(a.train.X == b.train.X);
    CHECK(a.train.Y == b.train.Y);
    CHECK(a.target == TargetKind::classification);
    std::vector<std::size_t> counts(10, 0);
    for (std::size_t i = 0; i < a.train.size(); ++i) {
        double sum = 0.0;
        std::size_t label = 0;
        for (std::size_t c = 0; c < 10; ++c) {
            sum += a.train.Y(i, c);
            CHECK((a.train.Y(i, c) == 0.0 || a.train.Y(i, c) == 1.0));
            if (a.train.Y(i, c) == 1.0) {
                label = c;
            }
        }
        CHECK(sum == 1.0);
        ++counts[label];
    }
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    CHECK(*hi - *lo <= 1);
    CHECK_THROWS_AS(gen_blobs(10, 10, 2, 1, 0), ContractViolation);
}

TEST_CASE("r-square and accuracy") {
    const Matrix t{{1, 2}, {3, 5}, {2, 8}};
    CHECK(r_square(t, t) == 1.0);
    const Matrix means{{2, 5}, {2, 5}, {2, 5}};
    CHECK(r_square(means, t) == doctest::Approx(0.0));
    const Matrix bad{{5, -3}, {-2, 12}, {9, 0}};
    CHECK(r_square(bad, t) < 0.0);

    const Matrix y{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 1, 0}};
    CHECK(accuracy(y, y) == 1.0);
    const Matrix flat(4, 3, 0.5);
    CHECK(accuracy(flat, y) == 0.25);

    Philox rng(4, "test/accuracy");
    const std::size_t n = 20000;
    Matrix logits(n, 10);
    Matrix labels(n, 10, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < 10; ++c) {
            logits(i, c) = rng.normal();
        }
        labels(i, rng.below(10)) = 1.0;
    }
    CHECK(std::abs(accuracy(logits, labels) - 0.1) <= 0.03);
}

TEST_CASE("config parsing") {
    const auto cfg = parse_config(small_config());
    CHECK(cfg.task == TaskKind::regression_teacher);
    CHECK(cfg.methods.size() == 2);
    CHECK(cfg.methods[1] == Method::prl_l);
    CHECK(cfg.tau_max() == 0.2);
    CHECK(cfg.repeats == 2);
    CHECK(cfg.train.hidden == std::vector<std::size_t>{8});

    const auto again = parse_config(to_json(cfg));
    CHECK(to_json(again) == to_json(cfg));

    SUBCASE("unknown keys are rejected") {
        auto j = small_config();
        j["n_trian"] = 10;
        CHECK_THROWS_AS(parse_config(j), ConfigError);
        auto k = small_config();
        k["train"]["learning_rate"] = 0.1;
        CHECK_THROWS_AS(parse_config(k), ConfigError);
        auto l = small_config();
        l["corruption"]["ratio"] = 0.1;
        CHECK_THROWS_AS(parse_config(l), ConfigError);
    }
    SUBCASE("invalid values are rejected") {
        auto j = small_config();
        j["repeats"] = 0;
        CHECK_THROWS_AS(parse_config(j), ConfigError);
        auto k = small_config();
        k["train"]["method"] = "prl_x";
        CHECK_THROWS_AS(parse_config(k), ConfigError);
        auto l = small_config();
        l["corruption"]["rate"] = 1.5;
        CHECK_THROWS_AS(parse_config(l), ConfigError);
        auto m = small_config();
        m["task"] = "classification_blobs";
        m["corruption"]["kind"] = "linadv";
        CHECK_THROWS_AS(parse_config(m), ConfigError);
        auto o = small_config();
        o["assumed_eps"] = 1.0;
        CHECK_THROWS_AS(parse_config(o), ConfigError);
        auto s = small_config();
        s["n_train"] = "many";
        CHECK_THROWS_AS(parse_config(s), ConfigError);
    }
    SUBCASE("assumed eps sets the drop ratio") {
        auto j = small_config();
        j["assumed_eps"] = 0.3;
        CHECK(parse_config(j).tau_max() == 0.3);
    }
    SUBCASE("classification defaults to cross entropy") {
        auto j = small_config();
        j["task"] = "classification_blobs";
        j["corruption"]["kind"] = "pairflip";
        const auto c = parse_config(j);
        CHECK(c.classification());
        CHECK(c.train.loss.kind == LossKind::cross_entropy);
    }
    SUBCASE("files") {
        const fs::path dir = scratch("config");
        fs::create_directories(dir);
        std::ofstream(dir / "c.json") << small_config().dump();
        CHECK(load_config(dir / "c.json").repeats == 2);
        std::ofstream(dir / "broken.json") << "{\"task\": ";
        CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
        CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
        fs::remove_all(dir);
    }
}

TEST_CASE("csv formatting") {
    CHECK(format_number(0.123456789) == "0.123457");
    CHECK(format_number(1234567.0) == "1.23457e+06");
    CHECK(format_number(2.0) == "2");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(-INFINITY) == "-inf");
    CHECK(quote_field("plain") == "plain");
    CHECK(quote_field("a,b") == "\"a,b\"");
    CHECK(quote_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(quote_field("two\nlines") == "\"two\nlines\"");

    CsvTable t({"name", "value", "count"});
    t.add("x,y").add(0.5).add(std::uint64_t{3});
    t.end_row();
    CHECK(t.str() == "name,value,count\r\n\"x,y\",0.5,3\r\n");
    t.add("short");
    CHECK_THROWS_AS(t.end_row(), ContractViolation);
}

TEST_CASE("experiment accounting and outputs") {
    const auto cfg = parse_config(small_config());
    const auto result = run_experiment(cfg);
    REQUIRE(result.runs.size() == 4);
    std::map<std::string, int> per_method;
    for (const auto& run : result.runs) {
        ++per_method[run.row.method];
        CHECK(run.trace.epochs.size() == 12);
        CHECK(run.row.true_eps == 0.2);
        CHECK(run.row.assumed_eps == 0.2);
        CHECK(run.row.final_metric <= 1.0);
    }
    CHECK(per_method["standard"] == 2);
    CHECK(per_method["prl_l"] == 2);
    CHECK(result.runs[0].row.seed == 5);
    CHECK(result.runs[1].row.seed == 6);

    const fs::path dir = scratch("outputs");
    write_experiment(result, dir);
    for (const char* f : {"results.csv", "summary.csv", "timing.csv", "trace_standard_5.csv", "trace_prl_l_6.csv"}) {
        CHECK(fs::exists(dir / f));
    }
    const std::string results = slurp(dir / "results.csv");
    CHECK(results.rfind("method,corruption,true_eps,assumed_eps,seed,final_metric,metric_std_last10\r\n", 0) == 0);
    std::size_t lines = 0;
    for (char c : results) {
        lines += c == '\n';
    }
    CHECK(lines == 5);
    CHECK(results.find("wall") == std::string::npos);

    const fs::path again = scratch("outputs_again");
    write_experiment(run_experiment(cfg), again);
    for (const char* f : {"results.csv", "summary.csv", "trace_standard_5.csv", "trace_prl_l_6.csv"}) {
        CHECK(slurp(dir / f) == slurp(again / f));
    }
    fs::remove_all(dir);
    fs::remove_all(again);
}

TEST_CASE("final metric window") {
    TrainTrace t;
    for (std::size_t e = 1; e <= 15; ++e) {
        EpochRecord r;
        r.epoch = e;
        r.eval_metric = e <= 5 ? 0.0 : (e % 2 == 0 ? 1.0 : 0.5);
        t.epochs.push_back(r);
    }
    const auto [mean, sd] = final_metric(t);
    CHECK(mean == doctest::Approx(0.75));
    CHECK(sd == doctest::Approx(0.25));
    TrainTrace shortt;
    shortt.epochs = {t.epochs[5], t.epochs[6]};
    CHECK(final_metric(shortt).first == doctest::Approx(0.75));
}

TEST_CASE("output directory") {
    auto cfg = parse_config(small_config());
    cfg.out_dir = "somewhere";
    unsetenv("ROBUSTLAB_OUT");
    CHECK(output_dir(cfg) == fs::path("somewhere"));
    setenv("ROBUSTLAB_OUT", "/tmp/elsewhere", 1);
    CHECK(output_dir(cfg) == fs::path("/tmp/elsewhere"));
    setenv("ROBUSTLAB_OUT", "", 1);
    CHECK(output_dir(cfg) == fs::path("somewhere"));
    unsetenv("ROBUSTLAB_OUT");

    const fs::path blocker = scratch("blocker");
    std::ofstream(blocker) << "file";
    CsvTable t({"a"});
    t.add("1");
    t.end_row();
    CHECK_THROWS_AS(t.write(blocker / "sub" / "x.csv"), std::runtime_error);
    fs::remove_all(blocker);
}

TEST_CASE("sensitivity rates") {
    const auto r = sensitivity_rates(0.45);
    REQUIRE(r.size() == 5);
    CHECK(r[0] == doctest::Approx(0.35));
    CHECK(r[4] == doctest::Approx(0.55));
    const auto low = sensitivity_rates(0.05);
    REQUIRE(low.size() == 4);
    CHECK(low[0] == 0.0);
    CHECK(low[3] == doctest::Approx(0.15));
}

TEST_CASE("sweep and sensitivity write one directory per rate") {
    auto j = small_config();
    j["repeats"] = 1;
    j["train"]["method"] = "prl_l";
    j["train"]["epochs"] = 2;
    const auto cfg = parse_config(j);
    const fs::path dir = scratch("sweep");
    const double rates[] = {0.1, 0.3};
    const auto sweep = run_sweep(cfg, rates, dir);
    REQUIRE(sweep.size() == 2);
    CHECK(sweep[1].runs[0].row.true_eps == 0.3);
    CHECK(sweep[1].runs[0].row.assumed_eps == 0.3);
    CHECK(fs::exists(dir / "results.csv"));
    std::size_t subdirs = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        subdirs += e.is_directory();
    }
    CHECK(subdirs == 2);

    const fs::path sdir = scratch("sens");
    const auto sens = run_sensitivity(cfg, sdir);
    REQUIRE(sens.size() == 5);
    CHECK(sens[0].runs[0].row.true_eps == 0.2);
    CHECK(sens[0].runs[0].row.assumed_eps == doctest::Approx(0.1));
    CHECK(fs::exists(sdir / "summary.csv"));
    fs::remove_all(dir);
    fs::remove_all(sdir);
}

TEST_CASE("filtering precision improves as the drop ratio ramps up") {
    json j{{"task", "regression_teacher"},
           {"n_train", 1000},
           {"n_test", 200},
           {"p", 20},
           {"q", 5},
           {"corruption", {{"kind", "signflip"}, {"rate", 0.4}, {"seed", 1}}},
           {"train",
            {{"method", "prl_l"}, {"epochs", 15}, {"batch_size", 64}, {"ramp_epochs", 10}, {"hidden", {32, 32}}}}};
    const auto result = run_experiment(parse_config(j));
    const auto& epochs = result.runs[0].trace.epochs;
    CHECK(epochs.back().filtering_precision > epochs.front().filtering_precision);
}

TEST_CASE("csv dataset") {
    const fs::path dir = scratch("csvdata");
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "d.csv");
        out << "f1,y,f2\n";
        for (int i = 0; i < 10; ++i) {
            out << i << "," << 2 * i << "," << -i << "\n";
        }
    }
    const auto d = load_csv_dataset({(dir / "d.csv").string(), 1, 1, 3, false});
    CHECK(d.train.size() == 7);
    CHECK(d.test.size() == 3);
    CHECK(d.train.X.cols() == 2);
    CHECK(d.train.X(2, 1) == -2.0);
    CHECK(d.train.Y(2, 0) == 4.0);
    CHECK(d.test.X(0, 0) == 7.0);
    CHECK_THROWS_AS(load_csv_dataset({(dir / "d.csv").string(), 2, 2, 3, false}), ConfigError);
    CHECK_THROWS_AS(load_csv_dataset({(dir / "d.csv").string(), 1, 1, 3, true}), ConfigError);
    CHECK_THROWS_AS(load_csv_dataset({(dir / "nope.csv").string(), 1, 1, 3, false}), ConfigError);

    json j{{"task", {{"csv_dataset", {{"path", (dir / "d.csv").string()}, {"target_begin", 1}, {"n_test", 3}}}}},
           {"train", {{"epochs", 2}, {"batch_size", 4}, {"hidden", {4}}}}};
    const auto cfg = parse_config(j);
    CHECK(cfg.task == TaskKind::csv_dataset);
    CHECK(run_experiment(cfg).runs.size() == 1);
    fs::remove_all(dir);
}

TEST_CASE("theory suite passes") {
    for (const auto& c : run_theory_suite(50, 0)) {
        INFO(c.name << ": " << c.detail);
        CHECK(c.passed);
    }
}
