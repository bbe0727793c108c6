// SPDX-License-Identifier: Apache-2.0
#include "robustlab/metrics.hpp"

#include "robustlab/error.hpp"
#include "robustlab/losses.hpp"

namespace robustlab {

double r_square(const Matrix& pred, const Matrix& target) {
    require(pred.rows() == target.rows() && pred.cols() == target.cols(), "r_square shape mismatch");
    require(target.rows() >= 1, "r_square of an empty set");
    const std::size_t n = target.rows();
    const std::size_t q = target.cols();
    Vector mean(q, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < q; ++j) {
            mean[j] += target(i, j);
        }
    }
    for (double& v : mean) {
        v /= static_cast<double>(n);
    }
    double sse = 0.0;
    double sst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < q; ++j) {
            const double e = pred(i, j) - target(i, j);
            const double c = target(i, j) - mean[j];
            sse += e * e;
            sst += c * c;
        }
    }
    require(sst > 0.0, "r_square undefined for constant targets");
    return 1.0 - sse / sst;
}

double accuracy(const Matrix& logits, const Matrix& one_hot_targets) {
    require(logits.rows() == one_hot_targets.rows() && logits.cols() == one_hot_targets.cols(),
            "accuracy shape mismatch");
    require(logits.rows() >= 1, "accuracy of an empty set");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        if (argmax(logits.row(i)) == argmax(one_hot_targets.row(i))) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

}  // namespace robustlab
