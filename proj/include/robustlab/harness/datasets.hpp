// SPDX-License-Identifier: Apache-2.0
//
// Synthetic tasks and CSV ingestion. Train and test rows are always disjoint.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "robustlab/corruption.hpp"
#include "robustlab/mlp.hpp"

namespace robustlab::harness {

struct Dataset {
    Batch train;
    Batch test;
    TargetKind target = TargetKind::regression;
};

inline constexpr std::size_t kTeacherHidden = 32;
inline constexpr double kRegressionNoiseStd = 0.01;
/// Pre-activation scale of the teacher hidden layer.
inline constexpr double kTeacherInputScale = 0.35;
/// Typical distance between two blob centers, calibrated for 10 classes in 20 dimensions.
inline constexpr double kBlobSeparation = 6.0;

/// Standard normal features, targets from a fixed random p -> 32 -> q tanh teacher,
/// standardized per column, plus N(0, 0.01^2) observation noise.
Dataset gen_regression(std::size_t n_train, std::size_t n_test, std::size_t p, std::size_t q, std::uint64_t seed);

/// Unit-variance Gaussian clusters around random centers; labels assigned round-robin
/// so every class count is within one of the others. One-hot targets.
Dataset gen_blobs(std::size_t n_train, std::size_t n_test, std::size_t p, std::size_t classes, std::uint64_t seed,
                  double separation = kBlobSeparation);

struct CsvDatasetSpec {
    std::string path;
    std::size_t target_begin = 0;  // first target column
    std::size_t target_count = 1;
    std::size_t n_test = 0;        // last n_test rows form the test set
    bool classification = false;  // targets must then be one-hot
};

/// Numeric CSV, optional header line. Columns outside the target span are features.
Dataset load_csv_dataset(const CsvDatasetSpec& spec);

}  // namespace robustlab::harness
