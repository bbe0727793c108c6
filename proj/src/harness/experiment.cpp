// SPDX-License-Identifier: Apache-2.0
#include "robustlab/harness/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <stdexcept>

#include "robustlab/error.hpp"
#include "robustlab/harness/csv.hpp"

namespace robustlab::harness {
namespace {

std::string rate_label(double rate) {
    return format_number(std::round(rate * 1e6) / 1e6);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
        throw std::runtime_error("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
}

std::vector<RunRecord> concat(const std::vector<ExperimentResult>& parts) {
    std::vector<RunRecord> all;
    for (const auto& part : parts) {
        all.insert(all.end(), part.runs.begin(), part.runs.end());
    }
    return all;
}

}  // namespace

std::pair<double, double> final_metric(const TrainTrace& trace, std::size_t window) {
    require(!trace.epochs.empty(), "empty trace");
    const std::size_t n = std::min(window, trace.epochs.size());
    double sum = 0.0;
    for (std::size_t i = trace.epochs.size() - n; i < trace.epochs.size(); ++i) {
        sum += trace.epochs[i].eval_metric;
    }
    const double mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = trace.epochs.size() - n; i < trace.epochs.size(); ++i) {
        const double d = trace.epochs[i].eval_metric - mean;
        var += d * d;
    }
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

Dataset make_dataset(const ExperimentConfig& cfg, std::size_t repeat) {
    const std::uint64_t seed = cfg.data_seed + repeat;
    switch (cfg.task) {
    case TaskKind::regression_teacher:
        return gen_regression(cfg.n_train, cfg.n_test, cfg.p, cfg.q, seed);
    case TaskKind::classification_blobs:
        return gen_blobs(cfg.n_train, cfg.n_test, cfg.p, cfg.q, seed);
    case TaskKind::csv_dataset:
        return load_csv_dataset(cfg.csv);
    }
    throw ConfigError("unknown task");
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult result;
    std::vector<Dataset> data;
    std::vector<CorruptionResult> corrupted;
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
        data.push_back(make_dataset(cfg, r));
        CorruptionSpec spec = cfg.corruption;
        spec.seed += r;
        corrupted.push_back(corrupt(data.back().train.X, data.back().train.Y, spec, data.back().target));
    }
    for (Method method : cfg.methods) {
        for (std::size_t r = 0; r < cfg.repeats; ++r) {
            TrainConfig t = cfg.train;
            t.method = method;
            t.drop_fraction = cfg.tau_max();
            t.seed = cfg.train.seed + r;
            t.validate(data[r].train.size());
            const Batch noisy{data[r].train.X, corrupted[r].targets};
            const CorruptionReport* report =
                cfg.corruption.kind == CorruptionKind::none ? nullptr : &corrupted[r].report;

            const auto start = std::chrono::steady_clock::now();
            TrainTrace trace = is_co_method(method) ? train_co(noisy, data[r].test, t, report).trace
                                                    : train(noisy, data[r].test, t, report).trace;
            const double seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

            const auto [mean, sd] = final_metric(trace);
            ResultRow row{std::string(to_string(method)),
                          std::string(to_string(cfg.corruption.kind)),
                          cfg.corruption.rate,
                          cfg.tau_max(),
                          t.seed,
                          mean,
                          sd,
                          seconds};
            result.runs.push_back({std::move(row), std::move(trace)});
        }
    }
    return result;
}

std::string results_csv(std::span<const RunRecord> runs) {
    CsvTable t({"method", "corruption", "true_eps", "assumed_eps", "seed", "final_metric", "metric_std_last10"});
    for (const auto& run : runs) {
        const ResultRow& r = run.row;
        t.add(r.method).add(r.corruption).add(r.true_eps).add(r.assumed_eps).add(r.seed).add(r.final_metric).add(
            r.metric_std);
        t.end_row();
    }
    return t.str();
}

std::string summary_csv(std::span<const RunRecord> runs) {
    // Groups keep first-appearance order.
    struct Group {
        const ResultRow* first;
        std::vector<double> metrics;
    };
    std::vector<Group> groups;
    std::map<std::tuple<std::string, std::string, double, double>, std::size_t> index;
    for (const auto& run : runs) {
        const ResultRow& r = run.row;
        const auto key = std::make_tuple(r.method, r.corruption, r.true_eps, r.assumed_eps);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, groups.size()).first;
            groups.push_back({&r, {}});
        }
        groups[it->second].metrics.push_back(r.final_metric);
    }
    CsvTable t({"method", "corruption", "true_eps", "assumed_eps", "repeats", "mean_final_metric",
                "std_final_metric"});
    for (const auto& g : groups) {
        double mean = 0.0;
        for (double m : g.metrics) {
            mean += m;
        }
        mean /= static_cast<double>(g.metrics.size());
        double var = 0.0;
        for (double m : g.metrics) {
            var += (m - mean) * (m - mean);
        }
        const double sd = g.metrics.size() > 1 ? std::sqrt(var / static_cast<double>(g.metrics.size() - 1)) : 0.0;
        t.add(g.first->method).add(g.first->corruption).add(g.first->true_eps).add(g.first->assumed_eps);
        t.add(static_cast<std::uint64_t>(g.metrics.size())).add(mean).add(sd);
        t.end_row();
    }
    return t.str();
}

std::string trace_csv(const TrainTrace& trace) {
    CsvTable t({"epoch", "train_loss", "eval_metric", "peer_eval_metric", "mean_kept", "filtering_precision",
                "drop_fraction"});
    for (const auto& e : trace.epochs) {
        t.add(static_cast<std::uint64_t>(e.epoch)).add(e.train_loss).add(e.eval_metric).add(e.peer_eval_metric);
        t.add(e.mean_kept).add(e.filtering_precision).add(e.drop_fraction);
        t.end_row();
    }
    return t.str();
}

void write_experiment(const ExperimentResult& result, const std::filesystem::path& dir) {
    write_text(dir / "results.csv", results_csv(result.runs));
    write_text(dir / "summary.csv", summary_csv(result.runs));
    CsvTable timing({"method", "seed", "wall_seconds"});
    for (const auto& run : result.runs) {
        write_text(dir / ("trace_" + run.row.method + "_" + std::to_string(run.row.seed) + ".csv"),
                   trace_csv(run.trace));
        timing.add(run.row.method).add(run.row.seed).add(run.row.wall_seconds);
        timing.end_row();
    }
    timing.write(dir / "timing.csv");
}

std::vector<ExperimentResult> run_sweep(const ExperimentConfig& cfg, std::span<const double> rates,
                                        const std::filesystem::path& dir) {
    require(!rates.empty(), "sweep needs at least one rate");
    std::vector<ExperimentResult> parts;
    for (double rate : rates) {
        ExperimentConfig c = cfg;
        c.corruption.rate = rate;
        c.assumed_eps = rate;
        c.validate();
        parts.push_back(run_experiment(c));
        write_experiment(parts.back(), dir / ("eps_" + rate_label(rate)));
    }
    const auto all = concat(parts);
    write_text(dir / "results.csv", results_csv(all));
    write_text(dir / "summary.csv", summary_csv(all));
    return parts;
}

std::vector<double> sensitivity_rates(double eps) {
    std::vector<double> rates;
    for (double offset : kSensitivityOffsets) {
        const double r = std::round((eps + offset) * 1e9) / 1e9;
        if (r >= 0.0 && r < 1.0) {
            rates.push_back(r);
        }
    }
    return rates;
}

std::vector<ExperimentResult> run_sensitivity(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
    std::vector<ExperimentResult> parts;
    for (double rate : sensitivity_rates(cfg.corruption.rate)) {
        ExperimentConfig c = cfg;
        c.assumed_eps = rate;
        c.validate();
        parts.push_back(run_experiment(c));
        write_experiment(parts.back(), dir / ("assumed_" + rate_label(rate)));
    }
    const auto all = concat(parts);
    write_text(dir / "results.csv", results_csv(all));
    write_text(dir / "summary.csv", summary_csv(all));
    return parts;
}

std::filesystem::path output_dir(const ExperimentConfig& cfg) {
    const char* env = std::getenv("ROBUSTLAB_OUT");
    if (env != nullptr && *env != '\0') {
        return env;
    }
    return cfg.out_dir;
}

}  // namespace robustlab::harness
