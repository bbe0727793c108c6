// SPDX-License-Identifier: Apache-2.0
//
// The theory checks run by `robustlab verify-theory`.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace robustlab::harness {

struct SuiteCheck {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

/// `trials` constructions per bound configuration.
std::vector<SuiteCheck> run_theory_suite(std::size_t trials, std::uint64_t seed);

}  // namespace robustlab::harness
