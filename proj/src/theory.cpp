// SPDX-License-Identifier: Apache-2.0
#include "robustlab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "robustlab/error.hpp"
#include "robustlab/rng.hpp"
#include "robustlab/robust_grad.hpp"

namespace robustlab::theory {
namespace {

Vector random_direction(Philox& rng, std::size_t dim) {
    Vector v(dim);
    double n = 0.0;
    while (n < 1e-12) {
        for (double& x : v) {
            x = rng.normal();
        }
        n = norm2(v);
    }
    for (double& x : v) {
        x /= n;
    }
    return v;
}

Vector scaled(std::span<const double> v, double s) {
    Vector out(v.begin(), v.end());
    for (double& x : out) {
        x *= s;
    }
    return out;
}

// Largest eigenvalue of a small symmetric matrix by cyclic Jacobi rotations.
double max_symmetric_eigenvalue(Matrix a) {
    const std::size_t n = a.rows();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        double scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            scale += a(i, i) * a(i, i);
            for (std::size_t j = i + 1; j < n; ++j) {
                off += a(i, j) * a(i, j);
            }
        }
        if (off <= 1e-30 * std::max(scale, 1e-300)) {
            break;
        }
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) {
                    continue;
                }
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t r = 0; r < n; ++r) {
                    const double arp = a(r, p);
                    const double arq = a(r, q);
                    a(r, p) = c * arp - s * arq;
                    a(r, q) = s * arp + c * arq;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double apr = a(p, r);
                    const double aqr = a(q, r);
                    a(p, r) = c * apr - s * aqr;
                    a(q, r) = s * apr + c * aqr;
                }
            }
        }
    }
    double best = a(0, 0);
    for (std::size_t i = 1; i < n; ++i) {
        best = std::max(best, a(i, i));
    }
    return best;
}

std::size_t integral_count(std::size_t m, double eps) {
    const double raw = eps * static_cast<double>(m);
    const double rounded = std::round(raw);
    require(std::abs(raw - rounded) < 1e-9, "eps * m must be integral, got " + std::to_string(raw));
    return static_cast<std::size_t>(rounded);
}

std::size_t binomial_capped(std::size_t n, std::size_t k, std::size_t cap) {
    k = std::min(k, n - k);
    double c = 1.0;
    for (std::size_t i = 1; i <= k; ++i) {
        c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
        if (c > static_cast<double>(cap)) {
            return cap + 1;
        }
    }
    return static_cast<std::size_t>(std::llround(c));
}

// Advances a sorted k-combination of [0, n); false after the last one.
bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
    const std::size_t k = idx.size();
    for (std::size_t i = k; i-- > 0;) {
        if (idx[i] < n - k + i) {
            ++idx[i];
            for (std::size_t j = i + 1; j < k; ++j) {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    return false;
}

constexpr CorruptionShape kShapes[] = {CorruptionShape::random, CorruptionShape::huge, CorruptionShape::mimic,
                                       CorruptionShape::flipped, CorruptionShape::aligned};

// A zero bound only tolerates round-off relative to the gradient scale.
double ratio_of(double error, double bound, double scale) {
    if (bound > 0.0) {
        return error / bound;
    }
    return error <= 1e-12 * std::max(scale, 1.0) ? 0.0 : std::numeric_limits<double>::infinity();
}

double max_row_norm(const Matrix& G) {
    const Vector norms = row_norms(G);
    return norms.empty() ? 0.0 : *std::max_element(norms.begin(), norms.end());
}

// Evaluates any-subset bound ratios over excluded sets, reusing the observed row sum.
class SubsetScorer {
public:
    SubsetScorer(const FactoredGradients& g, double eps) : g_(g), eps_(eps) {
        const std::size_t m = g.observed.rows();
        const std::size_t d = g.observed.cols();
        clean_mean_ = empirical_mean(g.clean);
        total_.assign(d, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const auto r = g.observed.row(i);
            for (std::size_t j = 0; j < d; ++j) {
                total_[j] += r[j];
            }
        }
        c_ = g.max_op_norm();
        k_ = g.max_clean_layer_norm();
        excluded_mask_.assign(m, false);
        scale_ = max_row_norm(g.observed);
    }

    // Returns error and ratio for the subset that drops `excluded`.
    std::pair<double, double> score(std::span<const std::size_t> excluded) {
        const std::size_t m = g_.observed.rows();
        const std::size_t d = g_.observed.cols();
        const double n = static_cast<double>(m - excluded.size());
        Vector sum = total_;
        for (std::size_t e : excluded) {
            const auto r = g_.observed.row(e);
            for (std::size_t j = 0; j < d; ++j) {
                sum[j] -= r[j];
            }
            excluded_mask_[e] = true;
        }
        double err2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = clean_mean_[j] - sum[j] / n;
            err2 += diff * diff;
        }
        double v = 0.0;
        for (std::size_t c : g_.corrupted) {
            if (!excluded_mask_[c]) {
                v = std::max(v, g_.observed_layer_norms[c]);
            }
        }
        for (std::size_t e : excluded) {
            excluded_mask_[e] = false;
        }
        const double err = std::sqrt(err2);
        return {err, ratio_of(err, lemma1_bound({c_, k_, v, eps_}), scale_)};
    }

private:
    const FactoredGradients& g_;
    double eps_;
    Vector clean_mean_;
    Vector total_;
    double c_ = 0.0;
    double k_ = 0.0;
    std::vector<bool> excluded_mask_;
    double scale_ = 0.0;
};

void absorb(VerifyReport& report, std::pair<double, double> scored) {
    report.worst_error = std::max(report.worst_error, scored.first);
    report.worst_ratio = std::max(report.worst_ratio, scored.second);
    ++report.subsets;
}

// Keeps every corrupted row and drops the clean rows that pull the kept mean
// back toward the clean mean.
std::vector<std::size_t> greedy_excluded(const FactoredGradients& g, std::size_t drop) {
    const std::size_t m = g.observed.rows();
    const Vector clean_mean = empirical_mean(g.clean);
    const Vector observed_mean = empirical_mean(g.observed);
    Vector direction(clean_mean.size());
    for (std::size_t j = 0; j < direction.size(); ++j) {
        direction[j] = observed_mean[j] - clean_mean[j];
    }
    std::vector<std::pair<double, std::size_t>> clean_rows;
    for (std::size_t i = 0; i < m; ++i) {
        if (!g.is_corrupted(i)) {
            clean_rows.emplace_back(dot(g.observed.row(i), direction), i);
        }
    }
    std::sort(clean_rows.begin(), clean_rows.end());
    std::vector<std::size_t> excluded;
    for (std::size_t i = 0; i < drop && i < clean_rows.size(); ++i) {
        excluded.push_back(clean_rows[i].second);
    }
    std::sort(excluded.begin(), excluded.end());
    return excluded;
}

double population_variance_excluding(std::span<const double> v, std::size_t k) {
    const double count = static_cast<double>(v.size() - 1);
    double sum = 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i != k) {
            sum += v[i];
            sq += v[i] * v[i];
        }
    }
    const double mean = sum / count;
    return sq / count - mean * mean;
}

void require_simplex(std::span<const double> p, const char* name) {
    double sum = 0.0;
    for (double x : p) {
        require(x >= -1e-9, std::string(name) + " has a negative entry");
        sum += x;
    }
    require(std::abs(sum - 1.0) <= 1e-9, std::string(name) + " does not sum to one");
}

double squared_distance_to_one_hot(std::span<const double> p, std::size_t k) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double t = (i == k ? 1.0 : 0.0) - p[i];
        s += t * t;
    }
    return s;
}

Vector random_simplex(Philox& rng, std::size_t q) {
    // Power-transformed uniforms give anything from near-uniform to very spiky vectors.
    static constexpr double kSharpness[] = {0.5, 1.0, 2.0, 4.0, 8.0};
    const double s = kSharpness[rng.below(5)];
    Vector v(q);
    double sum = 0.0;
    for (double& x : v) {
        x = std::pow(rng.uniform(), s);
        sum += x;
    }
    for (double& x : v) {
        x /= sum;
    }
    return v;
}

}  // namespace

void BoundParams::validate() const {
    require(C >= 0.0 && k >= 0.0 && v >= 0.0, "bound parameters C, k, v must be non-negative");
    require(eps >= 0.0 && eps < 0.5, "the bounds need 0 <= eps < 0.5");
}

double lemma1_bound(const BoundParams& p) {
    p.validate();
    const double e = p.eps;
    return p.C * p.k * (3.0 * e - 4.0 * e * e) / (1.0 - e) + p.C * p.v * e / (1.0 - e);
}

double theorem2_bound(double C, double k, double eps) {
    BoundParams{C, k, k, eps}.validate();
    return 4.0 * eps * C * k;
}

double corollary1_bound(double L, double eps) {
    require(L >= 0.0, "row-norm bound must be non-negative");
    require(eps >= 0.0 && eps < 0.5, "the bounds need 0 <= eps < 0.5");
    return 4.0 * L - 2.0 * L * eps / (1.0 - eps);
}

double operator_norm(const Matrix& W) {
    require(!W.empty(), "operator norm of an empty matrix");
    return std::sqrt(std::max(0.0, max_symmetric_eigenvalue(matmul_nt(W, W))));
}

double FactoredGradients::max_op_norm() const {
    return op_norms.empty() ? 0.0 : *std::max_element(op_norms.begin(), op_norms.end());
}

double FactoredGradients::max_clean_layer_norm() const {
    return clean_layer_norms.empty() ? 0.0 : *std::max_element(clean_layer_norms.begin(), clean_layer_norms.end());
}

double FactoredGradients::max_kept_corrupted_norm(std::span<const std::size_t> kept) const {
    double v = 0.0;
    for (std::size_t i : kept) {
        if (is_corrupted(i)) {
            v = std::max(v, observed_layer_norms[i]);
        }
    }
    return v;
}

bool FactoredGradients::is_corrupted(std::size_t row) const {
    return std::binary_search(corrupted.begin(), corrupted.end(), row);
}

FactoredGradients construct_factored(std::size_t m, std::size_t d, std::size_t q, double C, double k, double v,
                                     double eps, CorruptionShape shape, std::uint64_t seed) {
    require(m >= 1 && d >= 1 && q >= 1, "construction needs positive dimensions");
    BoundParams{C, k, v, eps}.validate();
    const std::size_t bad = integral_count(m, eps);
    Philox rng(seed, "theory/construct");

    FactoredGradients g;
    g.clean = Matrix(m, d);
    g.observed = Matrix(m, d);
    g.clean_layer_norms.assign(m, 0.0);
    g.observed_layer_norms.assign(m, 0.0);
    g.op_norms.assign(m, 0.0);

    std::vector<Matrix> jacobians;
    std::vector<Vector> alphas;
    const Vector shared = random_direction(rng, q);
    for (std::size_t i = 0; i < m; ++i) {
        Matrix W(q, d);
        for (double& x : W.values()) {
            x = rng.normal();
        }
        const double target = C * rng.uniform(0.5, 1.0);
        const double current = operator_norm(W);
        for (double& x : W.values()) {
            x *= target / current;
        }
        g.op_norms[i] = operator_norm(W);
        const Vector alpha = shape == CorruptionShape::aligned ? scaled(shared, k)
                                                               : scaled(random_direction(rng, q), k * rng.uniform(0.2, 1.0));
        g.clean_layer_norms[i] = norm2(alpha);
        jacobians.push_back(std::move(W));
        alphas.push_back(alpha);
    }

    g.corrupted = rng.sample_without_replacement(m, bad);
    std::vector<Vector> deltas = alphas;
    for (std::size_t i : g.corrupted) {
        switch (shape) {
        case CorruptionShape::random:
        case CorruptionShape::aligned:
            deltas[i] = scaled(random_direction(rng, q), v * rng.uniform());
            break;
        case CorruptionShape::huge:
            deltas[i] = scaled(random_direction(rng, q), std::max(k, 1.0) * rng.uniform(100.0, 1000.0));
            break;
        case CorruptionShape::mimic:
            break;
        case CorruptionShape::flipped: {
            const double n = norm2(alphas[i]);
            deltas[i] = scaled(alphas[i], n > 0.0 ? -v * rng.uniform(0.5, 1.0) / n : 0.0);
            break;
        }
        }
    }

    for (std::size_t i = 0; i < m; ++i) {
        const auto& W = jacobians[i];
        auto clean_row = g.clean.row(i);
        auto observed_row = g.observed.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            double a = 0.0;
            double b = 0.0;
            for (std::size_t r = 0; r < q; ++r) {
                a += alphas[i][r] * W(r, j);
                b += deltas[i][r] * W(r, j);
            }
            clean_row[j] = a;
            observed_row[j] = b;
        }
        g.observed_layer_norms[i] = norm2(deltas[i]);
    }
    return g;
}

double estimation_error(const FactoredGradients& g, std::span<const std::size_t> kept) {
    const Vector clean = empirical_mean(g.clean);
    const Vector filtered = mean_of_rows(g.observed, kept);
    double s = 0.0;
    for (std::size_t j = 0; j < clean.size(); ++j) {
        const double diff = clean[j] - filtered[j];
        s += diff * diff;
    }
    return std::sqrt(s);
}

VerifyReport verify_lemma1(std::size_t trials, std::size_t m, std::size_t d, std::size_t q, const BoundParams& p,
                           std::uint64_t seed) {
    p.validate();
    const std::size_t drop = integral_count(m, p.eps);
    const std::size_t count = binomial_capped(m, drop, kExhaustiveSubsetLimit);
    VerifyReport report;
    report.exhaustive = count <= kExhaustiveSubsetLimit;
    for (std::size_t t = 0; t < trials; ++t) {
        const auto shape = kShapes[t % std::size(kShapes)];
        const auto g = construct_factored(m, d, q, p.C, p.k, p.v, p.eps, shape, derive_seed(seed, t));
        SubsetScorer scorer(g, p.eps);
        if (report.exhaustive) {
            std::vector<std::size_t> excluded(drop);
            std::iota(excluded.begin(), excluded.end(), std::size_t{0});
            do {
                absorb(report, scorer.score(excluded));
            } while (drop > 0 && next_combination(excluded, m));
        } else {
            Philox rng(derive_seed(seed, t), "theory/subsets");
            for (std::size_t s = 0; s < kSampledSubsets; ++s) {
                absorb(report, scorer.score(rng.sample_without_replacement(m, drop)));
            }
            absorb(report, scorer.score(greedy_excluded(g, drop)));
        }
        ++report.trials;
    }
    return report;
}

VerifyReport verify_theorem2(std::size_t trials, std::size_t m, std::size_t d, std::size_t q, double C, double k,
                             double eps, std::uint64_t seed) {
    BoundParams{C, k, k, eps}.validate();
    VerifyReport report;
    for (std::size_t t = 0; t < trials; ++t) {
        const auto shape = kShapes[t % std::size(kShapes)];
        const auto g = construct_factored(m, d, q, C, k, 3.0 * k, eps, shape, derive_seed(seed, t));
        const auto kept = select_by_norm(g.observed_layer_norms, eps).kept;
        const double k_obs = g.max_clean_layer_norm();
        if (g.max_kept_corrupted_norm(kept) > k_obs) {
            report.kept_norm_guarantee = false;
        }
        const double err = estimation_error(g, kept);
        report.worst_error = std::max(report.worst_error, err);
        report.worst_ratio = std::max(report.worst_ratio, ratio_of(err, theorem2_bound(g.max_op_norm(), k_obs, eps), max_row_norm(g.observed)));
        ++report.subsets;
        ++report.trials;
    }
    return report;
}

VerifyReport verify_corollary1(std::size_t trials, std::size_t m, std::size_t d, double L, double eps,
                               std::uint64_t seed) {
    require(L > 0.0, "row-norm bound must be positive");
    const std::size_t bad = integral_count(m, eps);
    VerifyReport report;
    for (std::size_t t = 0; t < trials; ++t) {
        Philox rng(derive_seed(seed, t), "theory/corollary1");
        FactoredGradients g;
        g.clean = Matrix(m, d);
        for (std::size_t i = 0; i < m; ++i) {
            const Vector row = scaled(random_direction(rng, d), L * rng.uniform(0.1, 1.0));
            std::copy(row.begin(), row.end(), g.clean.row(i).begin());
        }
        g.observed = g.clean;
        g.corrupted = rng.sample_without_replacement(m, bad);
        for (std::size_t i : g.corrupted) {
            // Alternate between stealthy and blatant replacements.
            const double radius = (t % 2 == 0) ? L * rng.uniform(0.0, 1.0) : L * rng.uniform(0.0, 10.0);
            const Vector row = scaled(random_direction(rng, d), radius);
            std::copy(row.begin(), row.end(), g.observed.row(i).begin());
        }
        const Vector clean_norms = row_norms(g.clean);
        const Vector observed_norms = row_norms(g.observed);
        const double l_obs = *std::max_element(clean_norms.begin(), clean_norms.end());
        const auto kept = select_by_norm(observed_norms, eps).kept;
        for (std::size_t i : kept) {
            if (observed_norms[i] > l_obs) {
                report.kept_norm_guarantee = false;
            }
        }
        const double err = estimation_error(g, kept);
        report.worst_error = std::max(report.worst_error, err);
        report.worst_ratio = std::max(report.worst_ratio, ratio_of(err, corollary1_bound(l_obs, eps), max_row_norm(g.observed)));
        ++report.subsets;
        ++report.trials;
    }
    return report;
}

bool lemma2_condition(std::span<const double> alpha, std::span<const double> beta, std::size_t k) {
    require(alpha.size() == beta.size() && alpha.size() >= 2, "need two vectors of the same length q >= 2");
    require(k < alpha.size(), "class index out of range");
    require_simplex(alpha, "alpha");
    require_simplex(beta, "beta");
    require(alpha[k] >= beta[k], "expects alpha_k >= beta_k");
    const double q = static_cast<double>(alpha.size());
    const double lhs = population_variance_excluding(alpha, k) - population_variance_excluding(beta, k);
    const double rhs = q / ((q - 1.0) * (q - 1.0)) * (alpha[k] - beta[k]) * (2.0 - alpha[k] - beta[k]);
    return lhs >= rhs;
}

Lemma2Survey lemma2_survey(std::size_t samples, std::size_t q, std::uint64_t seed) {
    require(q >= 2, "need at least two classes");
    Philox rng(seed, "theory/lemma2");
    Lemma2Survey survey;
    for (std::size_t s = 0; s < samples; ++s) {
        Vector a = random_simplex(rng, q);
        Vector b = random_simplex(rng, q);
        const auto k = static_cast<std::size_t>(rng.below(q));
        if (a[k] < b[k]) {
            std::swap(a, b);
        }
        const bool condition = lemma2_condition(a, b, k);
        const bool ordering = squared_distance_to_one_hot(a, k) >= squared_distance_to_one_hot(b, k);
        ++survey.samples;
        if (condition) {
            ++survey.condition_true;
            if (!ordering) {
                ++survey.counterexamples;
            }
        } else if (ordering) {
            ++survey.ordering_without_condition;
        }
    }
    return survey;
}

QuadraticPoint eval_diagonal_quadratic(std::span<const double> q_diag, std::span<const double> x) {
    require(q_diag.size() == x.size(), "quadratic and point dimensions differ");
    QuadraticPoint pt{Vector(x.begin(), x.end()), 0.0, 0.0};
    double g2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        pt.loss += 0.5 * q_diag[i] * x[i] * x[i];
        const double g = q_diag[i] * x[i];
        g2 += g * g;
    }
    pt.grad_norm = std::sqrt(g2);
    return pt;
}

PlCounterexample pl_counterexample() {
    const double q[] = {1.0, 100.0};
    const double a[] = {1000.0, 1.0};
    const double b[] = {495.0, -49.5};
    PlCounterexample ex{eval_diagonal_quadratic(q, a), eval_diagonal_quadratic(q, b), false};
    const bool loss_says_first = ex.first.loss > ex.second.loss;
    const bool grad_says_first = ex.first.grad_norm > ex.second.grad_norm;
    ex.orderings_opposite = loss_says_first != grad_says_first;
    return ex;
}

double condition_number(std::span<const double> q_diag) {
    require(!q_diag.empty(), "condition number of an empty matrix");
    const auto [lo, hi] = std::minmax_element(q_diag.begin(), q_diag.end());
    require(*lo > 0.0, "condition number needs a positive definite diagonal");
    return *hi / *lo;
}

double monotone_condition_threshold() {
    return 3.0 + 2.0 * std::sqrt(2.0);
}

void BiasedOracleSpec::validate() const {
    require(zeta >= 0.0 && sigma >= 0.0, "bias and noise bounds must be non-negative");
    require(L > 0.0, "smoothness constant must be positive");
    require(F >= 0.0, "initial suboptimality must be non-negative");
}

Theorem1Result verify_theorem1(const BiasedOracleSpec& spec, std::size_t T, std::uint64_t seed, std::size_t dim) {
    spec.validate();
    require(T >= 1, "need at least one iteration");
    require(dim >= 1, "dimension must be positive");
    Philox setup(seed, "theory/theorem1");
    const Vector direction = random_direction(setup, dim);
    const Vector theta0 = scaled(direction, std::sqrt(2.0 * spec.F / spec.L));
    const Vector bias = scaled(direction, -spec.zeta);

    double step = 1.0 / spec.L;
    if (spec.sigma > 0.0) {
        step = std::min(step, std::sqrt(spec.L * spec.F / (spec.sigma * static_cast<double>(T))));
    }

    // Mean over streams of ||grad||^2 at each iterate t = 0..T.
    Vector mean_sq(T + 1, 0.0);
    for (std::size_t s = 0; s < kNoiseStreams; ++s) {
        Philox noise(derive_seed(seed, s), "theory/theorem1/noise");
        Vector theta = theta0;
        for (std::size_t t = 0; t <= T; ++t) {
            const double gn = spec.L * norm2(theta);
            mean_sq[t] += gn * gn / static_cast<double>(kNoiseStreams);
            if (t == T) {
                break;
            }
            const Vector n = spec.sigma > 0.0 ? scaled(random_direction(noise, dim), spec.sigma) : Vector(dim, 0.0);
            for (std::size_t j = 0; j < dim; ++j) {
                theta[j] -= step * (spec.L * theta[j] + bias[j] + n[j]);
            }
        }
    }
    Theorem1Result result;
    result.min_grad_norm = std::sqrt(*std::min_element(mean_sq.begin(), mean_sq.end()));
    result.step_size = step;
    result.reference = spec.zeta + spec.sigma * std::pow(static_cast<double>(T), -0.25);
    return result;
}

}  // namespace robustlab::theory
