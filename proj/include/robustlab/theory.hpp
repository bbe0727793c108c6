// SPDX-License-Identifier: Apache-2.0
//
// Closed-form error bounds for filtered gradient means, and the sampling /
// enumeration procedures that check them on explicitly constructed gradients.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "robustlab/matrix.hpp"

namespace robustlab::theory {

struct BoundParams {
    double C = 1.0;    // bound on ||W_i||_op
    double k = 1.0;    // max clean loss-layer gradient norm
    double v = 1.0;    // max corrupted loss-layer gradient norm among kept rows
    double eps = 0.0;  // corruption fraction, < 0.5

    void validate() const;
};

/// Any (1-eps) subset: C k (3 eps - 4 eps^2)/(1 - eps) + C v eps/(1 - eps).
double lemma1_bound(const BoundParams& p);
/// Norm-filtered subset on the loss layer (v <= k): 4 eps C k.
double theorem2_bound(double C, double k, double eps);
/// Norm-filtered subset on full gradients with row norms <= L: 4L - 2L eps/(1 - eps).
double corollary1_bound(double L, double eps);

/// Largest singular value, via Jacobi eigenvalues of W W^T.
double operator_norm(const Matrix& W);

// -- Factored gradient constructions (rows g_i = a_i W_i) -------------------

enum class CorruptionShape {
    random,   // corrupted loss-layer vectors of random direction and moderate norm
    huge,     // corrupted norms far above every clean norm
    mimic,    // corrupted vectors copy a clean row's loss-layer vector
    flipped,  // corrupted vectors oppose their own clean vector
    aligned,  // every clean vector shares one direction and norm
};

struct FactoredGradients {
    Matrix clean;                           // G, m x d
    Matrix observed;                        // G-tilde, m x d
    std::vector<std::size_t> corrupted;     // ascending
    Vector clean_layer_norms;               // ||alpha_i||
    Vector observed_layer_norms;            // ||delta_i|| on corrupted rows, ||alpha_i|| otherwise
    Vector op_norms;                        // ||W_i||_op

    double max_op_norm() const;
    double max_clean_layer_norm() const;
    /// Largest ||delta_i|| among kept corrupted rows (0 if none kept).
    double max_kept_corrupted_norm(std::span<const std::size_t> kept) const;
    bool is_corrupted(std::size_t row) const;
};

/// eps * m must be integral. `v` caps corrupted norms for the random shape and is
/// ignored by shapes that define their own norms.
FactoredGradients construct_factored(std::size_t m, std::size_t d, std::size_t q, double C, double k, double v,
                                     double eps, CorruptionShape shape, std::uint64_t seed);

/// ||mu(G) - mu(N)|| with N the kept rows of G-tilde.
double estimation_error(const FactoredGradients& g, std::span<const std::size_t> kept);

struct VerifyReport {
    double worst_ratio = 0.0;
    double worst_error = 0.0;
    std::size_t trials = 0;
    std::size_t subsets = 0;
    bool exhaustive = true;
    bool kept_norm_guarantee = true;  // v <= k (or kept row norms <= L) on every filtered subset
};

inline constexpr std::size_t kExhaustiveSubsetLimit = 100000;
inline constexpr std::size_t kSampledSubsets = 10000;

/// Worst error / lemma1_bound over adversarial (1-eps) subsets. All subsets are
/// enumerated when their count is at most kExhaustiveSubsetLimit, otherwise
/// kSampledSubsets random ones plus a greedy worst-direction subset are used.
VerifyReport verify_lemma1(std::size_t trials, std::size_t m, std::size_t d, std::size_t q, const BoundParams& p,
                           std::uint64_t seed);

/// Loss-layer norm filtering against 4 eps C k, cycling through every CorruptionShape.
VerifyReport verify_theorem2(std::size_t trials, std::size_t m, std::size_t d, std::size_t q, double C, double k,
                             double eps, std::uint64_t seed);

/// Full-gradient norm filtering against 4L - 2L eps/(1-eps), clean row norms <= L.
VerifyReport verify_corollary1(std::size_t trials, std::size_t m, std::size_t d, double L, double eps,
                               std::uint64_t seed);

// -- Cross-entropy vs squared-error ranking ---------------------------------

/// Var_{i!=k}(alpha) - Var_{i!=k}(beta) >= q/(q-1)^2 (alpha_k - beta_k)(2 - alpha_k - beta_k),
/// population variance. Requires alpha_k >= beta_k and both on the simplex.
bool lemma2_condition(std::span<const double> alpha, std::span<const double> beta, std::size_t k);

struct Lemma2Survey {
    std::size_t samples = 0;
    std::size_t condition_true = 0;
    std::size_t counterexamples = 0;              // condition true but ||alpha - y|| < ||beta - y||
    std::size_t ordering_without_condition = 0;   // ordering holds though the condition is false
};

Lemma2Survey lemma2_survey(std::size_t samples, std::size_t q, std::uint64_t seed);

// -- Loss vs gradient-norm ordering on quadratics ---------------------------

struct QuadraticPoint {
    Vector x;
    double loss = 0.0;
    double grad_norm = 0.0;
};

/// phi(x) = 0.5 sum_i Q_ii x_i^2.
QuadraticPoint eval_diagonal_quadratic(std::span<const double> q_diag, std::span<const double> x);

struct PlCounterexample {
    QuadraticPoint first;   // (1000, 1)
    QuadraticPoint second;  // (495, -49.5)
    bool orderings_opposite = false;
};

/// phi = 0.5 x1^2 + 50 x2^2 at (1000, 1) and (495, -49.5).
PlCounterexample pl_counterexample();

double condition_number(std::span<const double> q_diag);
/// Condition number below which loss and gradient-norm orderings agree: 3 + 2 sqrt(2).
double monotone_condition_threshold();

// -- Biased SGD plateau ------------------------------------------------------

struct BiasedOracleSpec {
    double zeta = 0.0;   // ||b||
    double sigma = 0.0;  // ||n||
    double L = 1.0;      // smoothness
    double F = 50.0;     // phi(theta_0) - phi*

    void validate() const;
};

struct Theorem1Result {
    double min_grad_norm = 0.0;  // sqrt of min_t mean_streams ||grad phi(theta_t)||^2
    double step_size = 0.0;
    double reference = 0.0;      // zeta + sigma T^{-1/4}
};

inline constexpr std::size_t kNoiseStreams = 32;

/// Biased SGD on phi = 0.5 L ||theta||^2 with a fixed bias of norm zeta pointing away
/// from the optimum and noise of norm sigma; step min{1/L, sqrt(LF/(sigma T))}.
Theorem1Result verify_theorem1(const BiasedOracleSpec& spec, std::size_t T, std::uint64_t seed,
                               std::size_t dim = 10);

}  // namespace robustlab::theory
