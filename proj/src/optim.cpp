// SPDX-License-Identifier: Apache-2.0
#include "robustlab/optim.hpp"

#include <cmath>

#include "robustlab/error.hpp"

namespace robustlab {

Optimizer::Optimizer(OptimizerConfig config, std::size_t param_count) : config_(config) {
    if (config_.kind == OptimizerKind::adam) {
        require(config_.beta1 >= 0.0 && config_.beta1 < 1.0, "adam beta1 must lie in [0, 1)");
        require(config_.beta2 >= 0.0 && config_.beta2 < 1.0, "adam beta2 must lie in [0, 1)");
        require(config_.eps > 0.0, "adam eps must be positive");
        first_.assign(param_count, 0.0);
        second_.assign(param_count, 0.0);
    }
}

void Optimizer::begin_step(std::size_t grad_size) {
    if (config_.kind == OptimizerKind::adam) {
        require(grad_size == first_.size(), "gradient length does not match optimizer state");
    }
    ++t_;
    correction1_ = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    correction2_ = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
}

void Optimizer::update_block(std::span<double> theta, std::span<const double> grad, std::size_t offset,
                             double lr) {
    if (config_.kind == OptimizerKind::sgd) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            theta[i] -= lr * grad[offset + i];
        }
        return;
    }
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double g = grad[offset + i];
        double& m = first_[offset + i];
        double& v = second_[offset + i];
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        const double m_hat = m / correction1_;
        const double v_hat = v / correction2_;
        theta[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
}

void Optimizer::step(std::span<double> theta, std::span<const double> grad, double lr) {
    require(theta.size() == grad.size(), "parameter and gradient lengths differ");
    begin_step(grad.size());
    update_block(theta, grad, 0, lr);
}

void Optimizer::step(MlpParams& params, std::span<const double> grad, double lr) {
    require(grad.size() == params.param_count(), "gradient length does not match parameter count");
    begin_step(grad.size());
    std::size_t offset = 0;
    for (auto& layer : params.layers) {
        update_block(layer.weight.values(), grad, offset, lr);
        offset += layer.weight.size();
        update_block(layer.bias, grad, offset, lr);
        offset += layer.bias.size();
    }
}

}  // namespace robustlab
