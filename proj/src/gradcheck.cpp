// SPDX-License-Identifier: Apache-2.0
#include "robustlab/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "robustlab/error.hpp"
#include "robustlab/rng.hpp"
#include "robustlab/robust_grad.hpp"

namespace robustlab {
namespace {

double mean_loss(const MlpParams& params, const Batch& batch, const Loss& loss) {
    const LossEval eval = loss_and_layer_grad(loss, forward(params, batch.X), batch.Y);
    double s = 0.0;
    for (double v : eval.per_sample) {
        s += v;
    }
    return s / static_cast<double>(eval.per_sample.size());
}

std::vector<std::size_t> random_widths(Philox& rng) {
    for (;;) {
        const std::size_t layers = 1 + rng.below(3);
        std::vector<std::size_t> widths;
        widths.push_back(1 + rng.below(4));
        for (std::size_t l = 0; l + 1 < layers; ++l) {
            widths.push_back(1 + rng.below(5));
        }
        widths.push_back(2 + rng.below(3));
        std::size_t params = 0;
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            params += widths[l] * widths[l + 1] + widths[l + 1];
        }
        if (params <= kGradcheckMaxParams) {
            return widths;
        }
    }
}

}  // namespace

Vector finite_difference_gradient(const MlpParams& params, const Batch& batch, const Loss& loss, double step) {
    require(step > 0.0, "finite-difference step must be positive");
    Vector theta = flatten(params);
    Vector grad(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double saved = theta[i];
        theta[i] = saved + step;
        const double up = mean_loss(unflatten(params, theta), batch, loss);
        theta[i] = saved - step;
        const double down = mean_loss(unflatten(params, theta), batch, loss);
        theta[i] = saved;
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

double gradcheck_relative_error(const MlpParams& params, const Batch& batch, const Loss& loss, double step) {
    const LossEval eval = loss_and_layer_grad(loss, forward(params, batch.X), batch.Y);
    const Matrix rows = backward_per_sample(params, batch, eval.layer_grad);
    const Vector analytic = empirical_mean(rows);
    const Vector numeric = finite_difference_gradient(params, batch, loss, step);
    double diff = 0.0;
    double ref = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
        diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
        ref += numeric[i] * numeric[i];
    }
    return std::sqrt(diff) / std::max(std::sqrt(ref), 1e-12);
}

GradcheckReport run_gradcheck(std::size_t networks, std::uint64_t seed) {
    Philox rng(seed, "gradcheck");
    GradcheckReport report;
    constexpr LossKind kLosses[] = {LossKind::mse, LossKind::cross_entropy, LossKind::huber};
    for (std::size_t n = 0; n < networks; ++n) {
        GradcheckCase c;
        c.widths = random_widths(rng);
        c.activation = rng.below(4) == 0 ? Activation::identity : Activation::leaky_relu;
        c.loss = kLosses[n % 3];
        MlpParams params = init_mlp(c.widths, c.activation, seed, n);
        // Random biases keep the check away from the all-zero special case.
        for (auto& layer : params.layers) {
            for (double& b : layer.bias) {
                b = rng.uniform(-0.5, 0.5);
            }
        }
        c.params = params.param_count();

        const std::size_t m = 2 + rng.below(4);
        const std::size_t p = c.widths.front();
        const std::size_t q = c.widths.back();
        Batch batch{Matrix(m, p), Matrix(m, q)};
        for (double& x : batch.X.values()) {
            x = rng.normal();
        }
        for (std::size_t i = 0; i < m; ++i) {
            if (c.loss == LossKind::cross_entropy) {
                batch.Y(i, rng.below(q)) = 1.0;
            } else {
                for (std::size_t j = 0; j < q; ++j) {
                    batch.Y(i, j) = 2.0 * rng.normal();
                }
            }
        }
        c.relative_error = gradcheck_relative_error(params, batch, Loss{c.loss, 1.0});
        report.max_relative_error = std::max(report.max_relative_error, c.relative_error);
        report.cases.push_back(std::move(c));
    }
    return report;
}

}  // namespace robustlab
