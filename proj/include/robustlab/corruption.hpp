// SPDX-License-Identifier: Apache-2.0
//
// Supervision adversaries. Features are never touched; exactly floor(rate * n)
// target rows are rewritten and every other row is left bit-identical.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "robustlab/matrix.hpp"

namespace robustlab {

enum class CorruptionKind { none, linadv, signflip, uninoise, pairflip, symmetric, mixture };

enum class TargetKind { regression, classification };

struct CorruptionSpec {
    CorruptionKind kind = CorruptionKind::none;
    double rate = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct CorruptionReport {
    std::vector<std::size_t> corrupted_indices;  // ascending
    std::vector<CorruptionKind> kind_per_index;  // parallel to corrupted_indices

    bool is_corrupted(std::size_t index) const;
};

struct CorruptionResult {
    Matrix targets;
    CorruptionReport report;
};

/// floor(rate * n), guarded against representation error.
std::size_t corrupted_count(std::size_t n, double rate);

CorruptionResult corrupt(const Matrix& X, const Matrix& Y, const CorruptionSpec& spec, TargetKind targets);

/// Fraction of kept indices that are clean.
double filtering_precision(const CorruptionReport& report, std::span<const std::size_t> kept);

std::string_view to_string(CorruptionKind kind);
CorruptionKind parse_corruption_kind(std::string_view name);

}  // namespace robustlab
