// SPDX-License-Identifier: Apache-2.0
#include "robustlab/losses.hpp"

#include <algorithm>
#include <cmath>

#include "robustlab/error.hpp"

namespace robustlab {

void Loss::validate() const {
    if (kind == LossKind::huber) {
        require(huber_delta > 0.0, "huber delta must be positive");
    }
}

bool is_one_hot(std::span<const double> row) {
    std::size_t ones = 0;
    for (double v : row) {
        if (v == 1.0) {
            ++ones;
        } else if (v != 0.0) {
            return false;
        }
    }
    return ones == 1;
}

std::size_t argmax(std::span<const double> row) {
    require(!row.empty(), "argmax of empty row");
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j) {
        if (row[j] > row[best]) {
            best = j;
        }
    }
    return best;
}

Matrix log_softmax(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto o = logits.row(i);
        const double peak = *std::max_element(o.begin(), o.end());
        double sum = 0.0;
        for (double v : o) {
            sum += std::exp(v - peak);
        }
        const double log_norm = peak + std::log(sum);
        auto r = out.row(i);
        for (std::size_t j = 0; j < o.size(); ++j) {
            r[j] = o[j] - log_norm;
        }
    }
    return out;
}

Matrix softmax(const Matrix& logits) {
    Matrix out = log_softmax(logits);
    for (double& v : out.values()) {
        v = std::exp(v);
    }
    return out;
}

LossEval loss_and_layer_grad(const Loss& loss, const Matrix& outputs, const Matrix& targets) {
    loss.validate();
    require(outputs.rows() == targets.rows() && outputs.cols() == targets.cols(),
            "outputs and targets must have the same shape");
    const std::size_t m = outputs.rows();
    const std::size_t q = outputs.cols();
    LossEval eval{Vector(m, 0.0), Matrix(m, q)};

    switch (loss.kind) {
    case LossKind::mse:
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < q; ++j) {
                const double r = outputs(i, j) - targets(i, j);
                eval.layer_grad(i, j) = r;
                s += r * r;
            }
            eval.per_sample[i] = 0.5 * s;
        }
        break;
    case LossKind::cross_entropy: {
        const Matrix logp = log_softmax(outputs);
        for (std::size_t i = 0; i < m; ++i) {
            require(is_one_hot(targets.row(i)), "cross-entropy target row " + std::to_string(i) + " is not one-hot");
            double s = 0.0;
            for (std::size_t j = 0; j < q; ++j) {
                s -= targets(i, j) * logp(i, j);
                eval.layer_grad(i, j) = std::exp(logp(i, j)) - targets(i, j);
            }
            eval.per_sample[i] = s;
        }
        break;
    }
    case LossKind::huber: {
        const double delta = loss.huber_delta;
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < q; ++j) {
                const double r = outputs(i, j) - targets(i, j);
                const double a = std::abs(r);
                s += a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
                eval.layer_grad(i, j) = std::clamp(r, -delta, delta);
            }
            eval.per_sample[i] = s;
        }
        break;
    }
    }
    return eval;
}

Vector layer_grad_norms(const Matrix& layer_grad) {
    return row_norms(layer_grad);
}

std::string_view to_string(LossKind kind) {
    switch (kind) {
    case LossKind::mse: return "mse";
    case LossKind::cross_entropy: return "cross_entropy";
    case LossKind::huber: return "huber";
    }
    return "?";
}

LossKind parse_loss_kind(std::string_view name) {
    if (name == "mse") return LossKind::mse;
    if (name == "cross_entropy" || name == "ce") return LossKind::cross_entropy;
    if (name == "huber") return LossKind::huber;
    throw ConfigError("unknown loss '" + std::string(name) + "'");
}

}  // namespace robustlab
