// SPDX-License-Identifier: Apache-2.0
//
// Gradient aggregators. Rows of G are per-sample gradients (m x d).
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "robustlab/matrix.hpp"

namespace robustlab {

struct SelectionResult {
    std::vector<std::size_t> kept;     // ascending
    std::vector<std::size_t> dropped;  // ascending
    Vector scores;
};

/// ceil(tau * m), guarded against representation error (0.1 * 30 drops 3, not 4).
/// At least one row is always kept.
std::size_t drop_count(std::size_t m, double tau);

Vector empirical_mean(const Matrix& G);
/// Column means over the listed rows.
Vector mean_of_rows(const Matrix& G, std::span<const std::size_t> rows);

/// Drops the ceil(tau*m) largest scores. Equal scores keep the lower index;
/// NaN scores rank above everything.
SelectionResult select_by_norm(std::span<const double> scores, double tau);

/// Algorithm-1 aggregation: drop the rows with the largest L2 norm, average the rest.
Vector filtered_mean_full(const Matrix& G, double tau);

Vector coordinate_median(const Matrix& G);

/// Row i scaled by min(1, c / ||row_i||). Zero rows stay zero.
Matrix clip_rows(const Matrix& G, double c);
Vector clip_vector(std::span<const double> g, double c);

}  // namespace robustlab
