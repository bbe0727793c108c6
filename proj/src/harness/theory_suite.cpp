// SPDX-License-Identifier: Apache-2.0
#include "robustlab/harness/theory_suite.hpp"

#include <chrono>
#include <cmath>
#include <functional>

#include "robustlab/harness/csv.hpp"
#include "robustlab/theory.hpp"

namespace robustlab::harness {
namespace {

using namespace robustlab::theory;

SuiteCheck timed(std::string name, const std::function<bool(std::string&)>& body) {
    SuiteCheck check;
    check.name = std::move(name);
    const auto start = std::chrono::steady_clock::now();
    check.passed = body(check.detail);
    check.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return check;
}

std::string describe(const VerifyReport& r) {
    return "worst_ratio=" + format_number(r.worst_ratio) + " trials=" + std::to_string(r.trials) +
           " subsets=" + std::to_string(r.subsets) + (r.exhaustive ? " exhaustive" : " sampled");
}

}  // namespace

std::vector<SuiteCheck> run_theory_suite(std::size_t trials, std::uint64_t seed) {
    std::vector<SuiteCheck> out;
    for (double eps : {0.1, 0.2, 0.3, 0.4}) {
        out.push_back(timed("filtered bound eps=" + format_number(eps), [&](std::string& d) {
            const auto r = verify_theorem2(trials, 20, 8, 3, 1.0, 1.0, eps, seed);
            d = describe(r) + (r.kept_norm_guarantee ? " v<=k" : " v>k");
            return r.worst_ratio <= 1.0 && r.kept_norm_guarantee;
        }));
    }
    struct SubsetCase {
        std::size_t m;
        double eps;
    };
    for (const SubsetCase c : {SubsetCase{12, 1.0 / 6.0}, SubsetCase{20, 0.2}, SubsetCase{20, 0.4}}) {
        const std::string name = "any-subset bound m=" + std::to_string(c.m) + " eps=" + format_number(c.eps);
        out.push_back(timed(name, [&](std::string& d) {
            const auto r = verify_lemma1(trials, c.m, 8, 3, BoundParams{1.0, 1.0, 1.0, c.eps}, seed);
            d = describe(r);
            return r.worst_ratio <= 1.0;
        }));
    }
    for (double eps : {0.1, 0.2, 0.3, 0.4}) {
        out.push_back(timed("full-gradient bound eps=" + format_number(eps), [&](std::string& d) {
            const auto r = verify_corollary1(trials, 20, 8, 1.0, eps, seed);
            d = describe(r);
            return r.worst_ratio <= 1.0 && r.kept_norm_guarantee;
        }));
    }
    out.push_back(timed("ranking condition q=10", [&](std::string& d) {
        const auto s = lemma2_survey(10000, 10, seed);
        d = "samples=" + std::to_string(s.samples) + " condition_true=" + std::to_string(s.condition_true) +
            " counterexamples=" + std::to_string(s.counterexamples) +
            " ordering_without_condition=" + std::to_string(s.ordering_without_condition);
        return s.counterexamples == 0;
    }));
    out.push_back(timed("quadratic counterexample", [&](std::string& d) {
        const auto ex = pl_counterexample();
        d = "loss " + format_number(ex.first.loss) + " vs " + format_number(ex.second.loss) + ", grad " +
            format_number(ex.first.grad_norm) + " vs " + format_number(ex.second.grad_norm);
        const double diag[] = {1.0, 100.0};
        return ex.orderings_opposite && condition_number(diag) > monotone_condition_threshold();
    }));
    out.push_back(timed("biased sgd plateau", [&](std::string& d) {
        const auto a = verify_theorem1({0.1, 0.0, 1.0, 50.0}, 1000, seed);
        const auto b = verify_theorem1({0.1, 0.0, 1.0, 50.0}, 2000, seed);
        const auto noisy = verify_theorem1({0.1, 0.5, 1.0, 50.0}, 10000, seed);
        const auto exact = verify_theorem1({0.0, 0.0, 1.0, 50.0}, 1000, seed);
        const double change = std::abs(b.min_grad_norm - a.min_grad_norm) / a.min_grad_norm;
        d = "plateau=" + format_number(a.min_grad_norm) + " doubling_change=" + format_number(change) +
            " noisy=" + format_number(noisy.min_grad_norm) + " exact=" + format_number(exact.min_grad_norm);
        return std::abs(a.min_grad_norm - 0.1) <= 0.01 && change < 0.05 && noisy.min_grad_norm <= 0.3 &&
               noisy.min_grad_norm <= 3.0 * noisy.reference && exact.min_grad_norm <= 1e-12;
    }));
    return out;
}

}  // namespace robustlab::harness
