// SPDX-License-Identifier: Apache-2.0
#include "robustlab/harness/datasets.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

#include "robustlab/error.hpp"
#include "robustlab/losses.hpp"
#include "robustlab/rng.hpp"

namespace robustlab::harness {
namespace {

void fill_normal(Matrix& m, Philox& rng, double scale = 1.0) {
    for (double& x : m.values()) {
        x = scale * rng.normal();
    }
}

Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end) {
    Matrix out(end - begin, m.cols());
    for (std::size_t i = begin; i < end; ++i) {
        const auto src = m.row(i);
        std::copy(src.begin(), src.end(), out.row(i - begin).begin());
    }
    return out;
}

bool parse_double(std::string_view text, double& out) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) {
        text.remove_prefix(1);
    }
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) {
            return fields;
        }
        start = comma + 1;
    }
}

}  // namespace

Dataset gen_regression(std::size_t n_train, std::size_t n_test, std::size_t p, std::size_t q, std::uint64_t seed) {
    require(n_train >= 2 && n_test >= 2, "regression task needs at least two train and two test rows");
    require(p >= 1 && q >= 1, "regression task needs p, q >= 1");
    const std::size_t n = n_train + n_test;

    Philox teacher_rng(seed, "data/regression/teacher");
    Matrix w1(kTeacherHidden, p);
    Matrix w2(q, kTeacherHidden);
    fill_normal(w1, teacher_rng, kTeacherInputScale / std::sqrt(static_cast<double>(p)));
    fill_normal(w2, teacher_rng, 1.0 / std::sqrt(static_cast<double>(kTeacherHidden)));
    Vector b1(kTeacherHidden);
    for (double& b : b1) {
        b = kTeacherInputScale * 0.5 * teacher_rng.normal();
    }

    Philox feature_rng(seed, "data/regression/features");
    Matrix X(n, p);
    fill_normal(X, feature_rng);

    Matrix hidden = matmul_nt(X, w1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < kTeacherHidden; ++j) {
            hidden(i, j) = std::tanh(hidden(i, j) + b1[j]);
        }
    }
    Matrix Y = matmul_nt(hidden, w2);
    for (std::size_t j = 0; j < q; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mean += Y(i, j);
        }
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            var += (Y(i, j) - mean) * (Y(i, j) - mean);
        }
        const double sd = std::sqrt(var / static_cast<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            Y(i, j) = sd > 0.0 ? (Y(i, j) - mean) / sd : 0.0;
        }
    }
    Philox noise_rng(seed, "data/regression/noise");
    for (double& y : Y.values()) {
        y += kRegressionNoiseStd * noise_rng.normal();
    }

    return Dataset{{slice_rows(X, 0, n_train), slice_rows(Y, 0, n_train)},
                   {slice_rows(X, n_train, n), slice_rows(Y, n_train, n)},
                   TargetKind::regression};
}

Dataset gen_blobs(std::size_t n_train, std::size_t n_test, std::size_t p, std::size_t classes, std::uint64_t seed,
                  double separation) {
    require(classes >= 2, "blobs need at least two classes");
    require(p >= 1, "blobs need p >= 1");
    require(n_train >= classes && n_test >= 1, "blobs need at least one train row per class and a test row");
    require(separation > 0.0, "blob separation must be positive");

    Philox center_rng(seed, "data/blobs/centers");
    Matrix centers(classes, p);
    fill_normal(centers, center_rng, separation / std::sqrt(2.0 * static_cast<double>(p)));

    auto sample = [&](std::size_t n, std::string_view tag) {
        Philox rng(seed, tag);
        Batch b{Matrix(n, p), Matrix(n, classes)};
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = i % classes;
            for (std::size_t j = 0; j < p; ++j) {
                b.X(i, j) = centers(c, j) + rng.normal();
            }
            b.Y(i, c) = 1.0;
        }
        return b;
    };
    return Dataset{sample(n_train, "data/blobs/train"), sample(n_test, "data/blobs/test"),
                   TargetKind::classification};
}

Dataset load_csv_dataset(const CsvDatasetSpec& spec) {
    std::ifstream in(spec.path);
    if (!in) {
        throw ConfigError("cannot open csv dataset '" + spec.path + "'");
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto fields = split_commas(line);
        std::vector<double> values(fields.size());
        bool numeric = true;
        for (std::size_t i = 0; i < fields.size() && numeric; ++i) {
            numeric = parse_double(fields[i], values[i]);
        }
        if (!numeric) {
            if (rows.empty() && line_no == 1) {
                continue;  // header
            }
            throw ConfigError(spec.path + ":" + std::to_string(line_no) + ": non-numeric field");
        }
        if (!rows.empty() && values.size() != rows.front().size()) {
            throw ConfigError(spec.path + ":" + std::to_string(line_no) + ": inconsistent column count");
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) {
        throw ConfigError("csv dataset '" + spec.path + "' has no data rows");
    }
    const std::size_t cols = rows.front().size();
    if (spec.target_count == 0 || spec.target_begin + spec.target_count > cols) {
        throw ConfigError("target columns exceed the csv width");
    }
    if (spec.target_count == cols) {
        throw ConfigError("csv dataset has no feature columns");
    }
    if (spec.n_test == 0 || spec.n_test >= rows.size()) {
        throw ConfigError("csv n_test must be in [1, rows)");
    }
    const std::size_t n = rows.size();
    const std::size_t p = cols - spec.target_count;
    Matrix X(n, p);
    Matrix Y(n, spec.target_count);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t f = 0;
        for (std::size_t c = 0; c < cols; ++c) {
            if (c >= spec.target_begin && c < spec.target_begin + spec.target_count) {
                Y(i, c - spec.target_begin) = rows[i][c];
            } else {
                X(i, f++) = rows[i][c];
            }
        }
        if (spec.classification && !is_one_hot(Y.row(i))) {
            throw ConfigError("csv row " + std::to_string(i) + " target is not one-hot");
        }
    }
    const std::size_t n_train = n - spec.n_test;
    return Dataset{{slice_rows(X, 0, n_train), slice_rows(Y, 0, n_train)},
                   {slice_rows(X, n_train, n), slice_rows(Y, n_train, n)},
                   spec.classification ? TargetKind::classification : TargetKind::regression};
}

}  // namespace robustlab::harness
