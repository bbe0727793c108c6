// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "robustlab/matrix.hpp"

namespace robustlab {

enum class LossKind { mse, cross_entropy, huber };

struct Loss {
    LossKind kind = LossKind::mse;
    double huber_delta = 1.0;

    void validate() const;
};

struct LossEval {
    Vector per_sample;  // m
    Matrix layer_grad;  // m x q, d loss_i / d output_i
};

/// mse: 0.5||yhat - y||^2, grad yhat - y.
/// cross_entropy: -<y, log softmax(o)>, grad softmax(o) - y. Targets must be one-hot.
/// huber: coordinate-wise Huber summed over q, grad clip(yhat - y, -delta, delta).
LossEval loss_and_layer_grad(const Loss& loss, const Matrix& outputs, const Matrix& targets);

/// Per-row L2 norm of the loss-layer gradient: the PRL(L) score.
Vector layer_grad_norms(const Matrix& layer_grad);

Matrix softmax(const Matrix& logits);
Matrix log_softmax(const Matrix& logits);

bool is_one_hot(std::span<const double> row);
/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> row);

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

}  // namespace robustlab
