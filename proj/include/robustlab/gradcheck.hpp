// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference check of backprop on small random networks. The
// numerical side uses only forward() and the loss values.
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "robustlab/losses.hpp"
#include "robustlab/mlp.hpp"

namespace robustlab {

inline constexpr double kGradcheckStep = 1e-6;
inline constexpr std::size_t kGradcheckMaxParams = 50;

/// Gradient of the mean loss over the batch, by central differences.
Vector finite_difference_gradient(const MlpParams& params, const Batch& batch, const Loss& loss,
                                  double step = kGradcheckStep);

/// ||g_backprop - g_fd|| / max(||g_fd||, 1e-12), with g_backprop the mean of per-sample rows.
double gradcheck_relative_error(const MlpParams& params, const Batch& batch, const Loss& loss,
                                double step = kGradcheckStep);

struct GradcheckCase {
    std::vector<std::size_t> widths;
    Activation activation = Activation::leaky_relu;
    LossKind loss = LossKind::mse;
    std::size_t params = 0;
    double relative_error = 0.0;
};

struct GradcheckReport {
    std::vector<GradcheckCase> cases;
    double max_relative_error = 0.0;
};

/// Random nets with 1 to 3 layers and at most kGradcheckMaxParams parameters,
/// alternating mse, cross-entropy and huber losses.
GradcheckReport run_gradcheck(std::size_t networks, std::uint64_t seed);

}  // namespace robustlab
