// SPDX-License-Identifier: Apache-2.0
//
// Experiment orchestration: data generation, corruption, training of every
// configured method over every repeat, and CSV persistence.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "robustlab/harness/config.hpp"
#include "robustlab/training.hpp"

namespace robustlab::harness {

inline constexpr std::size_t kFinalWindow = 10;

struct ResultRow {
    std::string method;
    std::string corruption;
    double true_eps = 0.0;
    double assumed_eps = 0.0;
    std::uint64_t seed = 0;
    double final_metric = 0.0;  // mean eval metric over the last kFinalWindow epochs
    double metric_std = 0.0;    // population std over the same epochs
    double wall_seconds = 0.0;
};

struct RunRecord {
    ResultRow row;
    TrainTrace trace;
};

struct ExperimentResult {
    std::vector<RunRecord> runs;  // ordered by (method as configured, repeat)
};

/// Mean and population std of the eval metric over the last `window` epochs.
std::pair<double, double> final_metric(const TrainTrace& trace, std::size_t window = kFinalWindow);

/// Dataset of repeat r (seed data_seed + r), before corruption.
Dataset make_dataset(const ExperimentConfig& cfg, std::size_t repeat);

/// Repeat r trains with seed train.seed + r on targets corrupted with seed corruption.seed + r.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// results.csv, summary.csv, trace_<method>_<seed>.csv and timing.csv. Only
/// timing.csv depends on wall-clock time.
void write_experiment(const ExperimentResult& result, const std::filesystem::path& dir);

std::string results_csv(std::span<const RunRecord> runs);
std::string summary_csv(std::span<const RunRecord> runs);
std::string trace_csv(const TrainTrace& trace);

/// One sub-experiment per rate (corruption rate and drop ratio both set to it),
/// written to dir/eps_<rate>, plus a combined dir/results.csv and dir/summary.csv.
std::vector<ExperimentResult> run_sweep(const ExperimentConfig& cfg, std::span<const double> rates,
                                        const std::filesystem::path& dir);

/// Drop-ratio offsets probed by the sensitivity run.
inline constexpr double kSensitivityOffsets[] = {-0.10, -0.05, 0.0, 0.05, 0.10};

/// Assumed rates eps + offset, keeping those in [0, 1).
std::vector<double> sensitivity_rates(double eps);

/// Fixed corruption rate, drop ratio varied over sensitivity_rates; written to
/// dir/assumed_<rate> plus combined CSVs.
std::vector<ExperimentResult> run_sensitivity(const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// ROBUSTLAB_OUT when set and non-empty, otherwise cfg.out_dir.
std::filesystem::path output_dir(const ExperimentConfig& cfg);

}  // namespace robustlab::harness
