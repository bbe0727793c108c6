// SPDX-License-Identifier: Apache-2.0
#include "robustlab/robust_grad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "robustlab/error.hpp"

namespace robustlab {

std::size_t drop_count(std::size_t m, double tau) {
    require(tau >= 0.0 && tau < 1.0, "drop fraction must lie in [0, 1)");
    const double raw = tau * static_cast<double>(m);
    const auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    return std::min(k, m == 0 ? 0 : m - 1);
}

Vector empirical_mean(const Matrix& G) {
    std::vector<std::size_t> rows(G.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return mean_of_rows(G, rows);
}

Vector mean_of_rows(const Matrix& G, std::span<const std::size_t> rows) {
    require(!rows.empty(), "mean over an empty row set");
    Vector mean(G.cols(), 0.0);
    for (std::size_t r : rows) {
        require(r < G.rows(), "row index out of range");
        const auto g = G.row(r);
        for (std::size_t j = 0; j < mean.size(); ++j) {
            mean[j] += g[j];
        }
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (double& v : mean) {
        v *= inv;
    }
    return mean;
}

SelectionResult select_by_norm(std::span<const double> scores, double tau) {
    const std::size_t m = scores.size();
    const std::size_t k = drop_count(m, tau);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto key = [&](std::size_t i) {
        return std::isnan(scores[i]) ? std::numeric_limits<double>::infinity() : scores[i];
    };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ka = key(a);
        const double kb = key(b);
        if (ka != kb) {
            return ka < kb;
        }
        // NaN outranks a genuine +inf so that it is dropped first.
        return !std::isnan(scores[a]) && std::isnan(scores[b]);
    });

    SelectionResult result;
    result.scores.assign(scores.begin(), scores.end());
    result.kept.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m - k));
    result.dropped.assign(order.begin() + static_cast<std::ptrdiff_t>(m - k), order.end());
    std::sort(result.kept.begin(), result.kept.end());
    std::sort(result.dropped.begin(), result.dropped.end());
    return result;
}

Vector filtered_mean_full(const Matrix& G, double tau) {
    require(tau < 1.0, "drop fraction must be below 1");
    require(G.rows() >= 1, "gradient matrix has no rows");
    const auto norms = row_norms(G);
    const auto selection = select_by_norm(norms, tau);
    return mean_of_rows(G, selection.kept);
}

Vector coordinate_median(const Matrix& G) {
    require(G.rows() >= 1, "gradient matrix has no rows");
    const std::size_t m = G.rows();
    Vector median(G.cols());
    std::vector<double> column(m);
    for (std::size_t j = 0; j < G.cols(); ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            column[i] = G(i, j);
        }
        std::sort(column.begin(), column.end());
        median[j] = m % 2 == 1 ? column[m / 2] : 0.5 * (column[m / 2 - 1] + column[m / 2]);
    }
    return median;
}

Vector clip_vector(std::span<const double> g, double c) {
    require(c > 0.0, "clip threshold must be positive");
    Vector out(g.begin(), g.end());
    const double n = norm2(g);
    if (n > c) {
        const double scale = c / n;
        for (double& v : out) {
            v *= scale;
        }
    }
    return out;
}

Matrix clip_rows(const Matrix& G, double c) {
    require(c > 0.0, "clip threshold must be positive");
    Matrix out = G;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto r = out.row(i);
        const double n = norm2(r);
        if (n > c) {
            const double scale = c / n;
            for (double& v : r) {
                v *= scale;
            }
        }
    }
    return out;
}

}  // namespace robustlab
