// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "robustlab/matrix.hpp"

namespace robustlab {

/// 1 - SSE/SST over all entries, SST taken against each column's target mean.
/// Negative when the predictions are worse than the per-column mean predictor.
double r_square(const Matrix& pred, const Matrix& target);

/// Fraction of rows whose argmax (lowest index on ties) matches the one-hot target.
double accuracy(const Matrix& logits, const Matrix& one_hot_targets);

}  // namespace robustlab
