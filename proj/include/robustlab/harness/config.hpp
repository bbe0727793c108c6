// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration as strict JSON: every key must be known.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "robustlab/corruption.hpp"
#include "robustlab/harness/datasets.hpp"
#include "robustlab/training.hpp"

namespace robustlab::harness {

enum class TaskKind { regression_teacher, classification_blobs, csv_dataset };

struct ExperimentConfig {
    TaskKind task = TaskKind::regression_teacher;
    CsvDatasetSpec csv;  // csv_dataset only
    std::size_t n_train = 2000;
    std::size_t n_test = 500;
    std::size_t p = 20;
    std::size_t q = 5;
    std::uint64_t data_seed = 0;
    CorruptionSpec corruption;
    TrainConfig train;            // train.method is overwritten per entry of `methods`
    std::vector<Method> methods{Method::standard};
    std::size_t repeats = 1;
    std::optional<double> assumed_eps;  // drop ratio tau_max; defaults to the corruption rate
    std::string out_dir = "results";

    double tau_max() const { return assumed_eps.value_or(corruption.rate); }
    bool classification() const;
    /// Throws ConfigError.
    void validate() const;
};

/// Keys: task, n_train, n_test, p, q, data_seed, corruption{kind, rate, seed},
/// train{method, loss, huber_delta, lr, batch_size, epochs, ramp_epochs, optimizer,
/// adam_beta1, adam_beta2, adam_eps, clip_c, seed, hidden, activation}, repeats,
/// assumed_eps, out_dir. "method" may be a string or a list of strings.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

std::string_view to_string(TaskKind task);

}  // namespace robustlab::harness
