// SPDX-License-Identifier: Apache-2.0
//
// Fully connected network with exact per-sample backpropagation. Hidden layers
// share one activation; the output layer is always affine, so forward() returns
// raw logits (classification) or coordinates (regression).
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "robustlab/matrix.hpp"

namespace robustlab {

enum class Activation { leaky_relu, identity };

inline constexpr double kLeakySlope = 0.01;

struct DenseLayer {
    Matrix weight;  // out x in
    Vector bias;    // out

    std::size_t in() const noexcept { return weight.cols(); }
    std::size_t out() const noexcept { return weight.rows(); }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct MlpParams {
    std::vector<DenseLayer> layers;
    Activation activation = Activation::leaky_relu;
    double slope = kLeakySlope;

    std::size_t input_dim() const;
    std::size_t output_dim() const;
    /// Total weight and bias entries (d).
    std::size_t param_count() const;
    /// Throws ContractViolation unless consecutive layers chain.
    void validate() const;

    friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

struct Batch {
    Matrix X;  // m x p
    Matrix Y;  // m x q

    std::size_t size() const noexcept { return X.rows(); }
    void validate() const;
};

/// Widths {p, h_1, ..., h_k, q}. Weights uniform in +-sqrt(6/fan_in), biases zero.
MlpParams init_mlp(std::span<const std::size_t> widths, Activation activation, std::uint64_t seed,
                   std::uint64_t stream = 0);

double activate(double z, Activation activation, double slope = kLeakySlope);
double activate_derivative(double z, Activation activation, double slope = kLeakySlope);

/// Intermediate values of one forward pass, kept for backprop.
struct ForwardCache {
    std::vector<Matrix> inputs;   // inputs[l] feeds layer l; inputs[0] == X
    std::vector<Matrix> preacts;  // preacts[l] = inputs[l] * W_l^T + b_l

    const Matrix& output() const { return preacts.back(); }
};

ForwardCache forward_cached(const MlpParams& params, const Matrix& X);
Matrix forward(const MlpParams& params, const Matrix& X);

/// Flattened gradient averaged over `rows` of the cached batch, given the loss-layer
/// gradient (one row per batch sample). Only the selected rows take part.
Vector backward_mean(const MlpParams& params, const ForwardCache& cache, const Matrix& layer_grad,
                     std::span<const std::size_t> rows);

/// Same as backward_mean over every row.
Vector backward_mean(const MlpParams& params, const ForwardCache& cache, const Matrix& layer_grad);

/// Row i is sample i's flattened gradient; backprop is looped over rows.
Matrix backward_per_sample(const MlpParams& params, const Batch& batch, const Matrix& layer_grad);
Matrix backward_per_sample(const MlpParams& params, const ForwardCache& cache, const Matrix& layer_grad);

/// Layer by layer: weight (row-major) then bias.
Vector flatten(const MlpParams& params);
MlpParams unflatten(const MlpParams& shape, std::span<const double> flat);

}  // namespace robustlab
