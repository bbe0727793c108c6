// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

#include "robustlab/matrix.hpp"
#include "robustlab/mlp.hpp"

namespace robustlab {

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// SGD or bias-corrected Adam over a flat parameter vector.
class Optimizer {
public:
    Optimizer(OptimizerConfig config, std::size_t param_count);

    void step(std::span<double> theta, std::span<const double> grad, double lr);
    /// Updates the network in flatten() order without materialising a copy.
    void step(MlpParams& params, std::span<const double> grad, double lr);

    std::size_t steps_taken() const noexcept { return t_; }
    const OptimizerConfig& config() const noexcept { return config_; }

private:
    void begin_step(std::size_t grad_size);
    void update_block(std::span<double> theta, std::span<const double> grad, std::size_t offset, double lr);

    OptimizerConfig config_;
    Vector first_;
    Vector second_;
    std::size_t t_ = 0;
    double correction1_ = 1.0;
    double correction2_ = 1.0;
};

}  // namespace robustlab
