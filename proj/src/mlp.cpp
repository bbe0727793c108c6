// SPDX-License-Identifier: Apache-2.0
#include "robustlab/mlp.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "robustlab/error.hpp"
#include "robustlab/rng.hpp"

namespace robustlab {

std::size_t MlpParams::input_dim() const {
    require(!layers.empty(), "network has no layers");
    return layers.front().in();
}

std::size_t MlpParams::output_dim() const {
    require(!layers.empty(), "network has no layers");
    return layers.back().out();
}

std::size_t MlpParams::param_count() const {
    std::size_t d = 0;
    for (const auto& layer : layers) {
        d += layer.weight.size() + layer.bias.size();
    }
    return d;
}

void MlpParams::validate() const {
    require(!layers.empty(), "network has no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        require(layers[l].bias.size() == layers[l].out(), "bias length mismatch in layer " + std::to_string(l));
        if (l > 0) {
            require(layers[l].in() == layers[l - 1].out(),
                    "layer " + std::to_string(l) + " input width does not chain");
        }
    }
}

void Batch::validate() const {
    require(X.rows() == Y.rows(), "batch X and Y row counts differ");
    require(X.rows() >= 1, "batch must hold at least one sample");
}

MlpParams init_mlp(std::span<const std::size_t> widths, Activation activation, std::uint64_t seed,
                   std::uint64_t stream) {
    require(widths.size() >= 2, "need at least input and output widths");
    Philox rng(seed, "init/" + std::to_string(stream));
    MlpParams params;
    params.activation = activation;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t in = widths[l];
        const std::size_t out = widths[l + 1];
        require(in > 0 && out > 0, "layer widths must be positive");
        DenseLayer layer{Matrix(out, in), Vector(out, 0.0)};
        const double bound = std::sqrt(6.0 / static_cast<double>(in));
        for (double& w : layer.weight.values()) {
            w = rng.uniform(-bound, bound);
        }
        params.layers.push_back(std::move(layer));
    }
    return params;
}

double activate(double z, Activation activation, double slope) {
    if (activation == Activation::identity) {
        return z;
    }
    return z > 0.0 ? z : slope * z;
}

double activate_derivative(double z, Activation activation, double slope) {
    if (activation == Activation::identity) {
        return 1.0;
    }
    return z > 0.0 ? 1.0 : slope;
}

ForwardCache forward_cached(const MlpParams& params, const Matrix& X) {
    params.validate();
    require(X.cols() == params.input_dim(), "input has " + std::to_string(X.cols()) +
                                                " columns, network expects " +
                                                std::to_string(params.input_dim()));
    ForwardCache cache;
    cache.inputs.reserve(params.layers.size());
    cache.preacts.reserve(params.layers.size());
    cache.inputs.push_back(X);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        Matrix z = matmul_nt(cache.inputs.back(), layer.weight);
        for (std::size_t i = 0; i < z.rows(); ++i) {
            auto r = z.row(i);
            for (std::size_t j = 0; j < r.size(); ++j) {
                r[j] += layer.bias[j];
            }
        }
        if (l + 1 < params.layers.size()) {
            Matrix a = z;
            for (double& v : a.values()) {
                v = activate(v, params.activation, params.slope);
            }
            cache.inputs.push_back(std::move(a));
        }
        cache.preacts.push_back(std::move(z));
    }
    return cache;
}

Matrix forward(const MlpParams& params, const Matrix& X) {
    return forward_cached(params, X).output();
}

Vector backward_mean(const MlpParams& params, const ForwardCache& cache, const Matrix& layer_grad,
                     std::span<const std::size_t> rows) {
    const std::size_t depth = params.layers.size();
    require(cache.preacts.size() == depth, "forward cache does not match network depth");
    require(layer_grad.rows() == cache.output().rows() && layer_grad.cols() == params.output_dim(),
            "loss-layer gradient shape does not match network output");
    require(!rows.empty(), "backward pass needs at least one row");

    std::vector<std::size_t> offsets(depth + 1, 0);
    for (std::size_t l = 0; l < depth; ++l) {
        offsets[l + 1] = offsets[l] + params.layers[l].weight.size() + params.layers[l].bias.size();
    }
    Vector grad(offsets.back(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(rows.size());

    Matrix delta = layer_grad.gather_rows(rows);
    for (std::size_t l = depth; l-- > 0;) {
        const auto& layer = params.layers[l];
        const Matrix a = cache.inputs[l].gather_rows(rows);
        const Matrix gw = matmul_tn(delta, a);
        double* out = grad.data() + offsets[l];
        for (double v : gw.values()) {
            *out++ = v * inv_n;
        }
        for (std::size_t j = 0; j < layer.out(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < delta.rows(); ++i) {
                s += delta(i, j);
            }
            *out++ = s * inv_n;
        }
        if (l > 0) {
            Matrix back = matmul(delta, layer.weight);
            const auto& z = cache.preacts[l - 1];
            for (std::size_t i = 0; i < back.rows(); ++i) {
                const auto zr = z.row(rows[i]);
                auto br = back.row(i);
                for (std::size_t j = 0; j < br.size(); ++j) {
                    br[j] *= activate_derivative(zr[j], params.activation, params.slope);
                }
            }
            delta = std::move(back);
        }
    }
    return grad;
}

Vector backward_mean(const MlpParams& params, const ForwardCache& cache, const Matrix& layer_grad) {
    std::vector<std::size_t> rows(layer_grad.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return backward_mean(params, cache, layer_grad, rows);
}

Matrix backward_per_sample(const MlpParams& params, const ForwardCache& cache, const Matrix& layer_grad) {
    const std::size_t m = layer_grad.rows();
    Matrix out(m, params.param_count());
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t row = i;
        const Vector g = backward_mean(params, cache, layer_grad, std::span<const std::size_t>(&row, 1));
        std::copy(g.begin(), g.end(), out.row(i).begin());
    }
    return out;
}

Matrix backward_per_sample(const MlpParams& params, const Batch& batch, const Matrix& layer_grad) {
    batch.validate();
    require(layer_grad.rows() == batch.size(), "loss-layer gradient rows must match batch size");
    return backward_per_sample(params, forward_cached(params, batch.X), layer_grad);
}

Vector flatten(const MlpParams& params) {
    Vector flat;
    flat.reserve(params.param_count());
    for (const auto& layer : params.layers) {
        flat.insert(flat.end(), layer.weight.values().begin(), layer.weight.values().end());
        flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
    }
    return flat;
}

MlpParams unflatten(const MlpParams& shape, std::span<const double> flat) {
    require(flat.size() == shape.param_count(),
            "flat parameter vector has length " + std::to_string(flat.size()) + ", expected " +
                std::to_string(shape.param_count()));
    MlpParams out = shape;
    std::size_t k = 0;
    for (auto& layer : out.layers) {
        for (double& w : layer.weight.values()) {
            w = flat[k++];
        }
        for (double& b : layer.bias) {
            b = flat[k++];
        }
    }
    return out;
}

}  // namespace robustlab
