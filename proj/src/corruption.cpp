// SPDX-License-Identifier: Apache-2.0
#include "robustlab/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "robustlab/error.hpp"
#include "robustlab/losses.hpp"
#include "robustlab/rng.hpp"

namespace robustlab {
namespace {

constexpr double kUniformBound = 5.0;

bool regression_only(CorruptionKind kind) {
    return kind == CorruptionKind::linadv || kind == CorruptionKind::signflip ||
           kind == CorruptionKind::uninoise || kind == CorruptionKind::mixture;
}

void set_class(std::span<double> row, std::size_t cls) {
    std::fill(row.begin(), row.end(), 0.0);
    row[cls] = 1.0;
}

// Streams are keyed by purpose so the draws of one kind never shift another's.
struct Streams {
    explicit Streams(std::uint64_t seed)
        : select(seed, "corrupt/select"),
          linadv(seed, "corrupt/linadv"),
          uninoise(seed, "corrupt/uninoise"),
          symmetric(seed, "corrupt/symmetric"),
          mixture(seed, "corrupt/mixture") {}

    Philox select;
    Philox linadv;
    Philox uninoise;
    Philox symmetric;
    Philox mixture;
};

}  // namespace

void CorruptionSpec::validate() const {
    require(rate >= 0.0 && rate < 1.0, "corruption rate must lie in [0, 1)");
}

bool CorruptionReport::is_corrupted(std::size_t index) const {
    return std::binary_search(corrupted_indices.begin(), corrupted_indices.end(), index);
}

std::size_t corrupted_count(std::size_t n, double rate) {
    return static_cast<std::size_t>(std::floor(rate * static_cast<double>(n) + 1e-9));
}

CorruptionResult corrupt(const Matrix& X, const Matrix& Y, const CorruptionSpec& spec, TargetKind targets) {
    spec.validate();
    require(X.rows() == Y.rows(), "features and targets must have the same row count");
    const std::size_t n = Y.rows();
    const std::size_t p = X.cols();
    const std::size_t q = Y.cols();

    CorruptionResult result{Y, {}};
    if (spec.kind == CorruptionKind::none || spec.rate == 0.0) {
        return result;
    }
    if (targets == TargetKind::classification) {
        require(!regression_only(spec.kind),
                std::string(to_string(spec.kind)) + " corruption applies to regression targets only");
        for (std::size_t i = 0; i < n; ++i) {
            require(is_one_hot(Y.row(i)), "classification corruption needs one-hot targets");
        }
    } else {
        require(spec.kind != CorruptionKind::symmetric, "symmetric corruption applies to classification only");
    }
    if (spec.kind == CorruptionKind::symmetric) {
        require(q >= 2, "symmetric corruption needs at least two classes");
    }

    Streams rng(spec.seed);
    const std::size_t count = corrupted_count(n, spec.rate);
    result.report.corrupted_indices = rng.select.sample_without_replacement(n, count);
    result.report.kind_per_index.resize(count, spec.kind);

    Matrix linadv_weights;
    auto linadv_row = [&](std::size_t i, std::span<double> out) {
        if (linadv_weights.empty()) {
            linadv_weights = Matrix(p, q);
            const double scale = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(p, 1)));
            for (double& w : linadv_weights.values()) {
                w = rng.linadv.normal() * scale;
            }
        }
        const auto x = X.row(i);
        for (std::size_t j = 0; j < q; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < p; ++k) {
                s += x[k] * linadv_weights(k, j);
            }
            out[j] = s;
        }
    };

    for (std::size_t c = 0; c < count; ++c) {
        const std::size_t i = result.report.corrupted_indices[c];
        auto out = result.targets.row(i);
        CorruptionKind kind = spec.kind;
        if (kind == CorruptionKind::mixture) {
            static constexpr CorruptionKind kParts[] = {CorruptionKind::linadv, CorruptionKind::signflip,
                                                        CorruptionKind::uninoise};
            kind = kParts[rng.mixture.below(3)];
            result.report.kind_per_index[c] = kind;
        }
        switch (kind) {
        case CorruptionKind::linadv:
            linadv_row(i, out);
            break;
        case CorruptionKind::signflip:
            for (double& v : out) {
                v = -v;
            }
            break;
        case CorruptionKind::uninoise:
            for (double& v : out) {
                v = rng.uninoise.uniform(-kUniformBound, kUniformBound);
            }
            break;
        case CorruptionKind::pairflip:
            if (targets == TargetKind::classification) {
                set_class(out, (argmax(Y.row(i)) + 1) % q);
            } else {
                // Coordinate j takes the value of coordinate j+1 (cyclic).
                const auto src = Y.row(i);
                for (std::size_t j = 0; j < q; ++j) {
                    out[j] = src[(j + 1) % q];
                }
            }
            break;
        case CorruptionKind::symmetric: {
            const std::size_t truth = argmax(Y.row(i));
            std::size_t other = static_cast<std::size_t>(rng.symmetric.below(q - 1));
            if (other >= truth) {
                ++other;
            }
            set_class(out, other);
            break;
        }
        case CorruptionKind::none:
        case CorruptionKind::mixture:
            break;
        }
    }
    return result;
}

double filtering_precision(const CorruptionReport& report, std::span<const std::size_t> kept) {
    require(!kept.empty(), "filtering precision of an empty kept set");
    std::size_t clean = 0;
    for (std::size_t i : kept) {
        if (!report.is_corrupted(i)) {
            ++clean;
        }
    }
    return static_cast<double>(clean) / static_cast<double>(kept.size());
}

std::string_view to_string(CorruptionKind kind) {
    switch (kind) {
    case CorruptionKind::none: return "none";
    case CorruptionKind::linadv: return "linadv";
    case CorruptionKind::signflip: return "signflip";
    case CorruptionKind::uninoise: return "uninoise";
    case CorruptionKind::pairflip: return "pairflip";
    case CorruptionKind::symmetric: return "symmetric";
    case CorruptionKind::mixture: return "mixture";
    }
    return "?";
}

CorruptionKind parse_corruption_kind(std::string_view name) {
    for (auto kind : {CorruptionKind::none, CorruptionKind::linadv, CorruptionKind::signflip,
                      CorruptionKind::uninoise, CorruptionKind::pairflip, CorruptionKind::symmetric,
                      CorruptionKind::mixture}) {
        if (name == to_string(kind)) {
            return kind;
        }
    }
    throw ConfigError("unknown corruption kind '" + std::string(name) + "'");
}

}  // namespace robustlab
