// SPDX-License-Identifier: Apache-2.0
//
// robustlab command line. Exit codes: 0 success, 1 config error, 2 runtime
// failure, 3 theory or gradient check failure.
#include <cstdio>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "robustlab/error.hpp"
#include "robustlab/gradcheck.hpp"
#include "robustlab/harness/config.hpp"
#include "robustlab/harness/csv.hpp"
#include "robustlab/harness/experiment.hpp"
#include "robustlab/harness/theory_suite.hpp"

namespace {

using namespace robustlab;
using namespace robustlab::harness;

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitCheck = 3;

std::vector<double> parse_rates(const std::string& text) {
    std::vector<double> rates;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            rates.push_back(std::stod(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw ConfigError("bad rate '" + item + "' in --eps");
        }
    }
    if (rates.empty()) {
        throw ConfigError("--eps needs at least one rate");
    }
    return rates;
}

void print_summary(const std::vector<RunRecord>& runs) {
    for (const auto& run : runs) {
        std::printf("%-12s %-10s eps=%-6s tau=%-6s seed=%-4llu metric=%s (+-%s) %.1fs\n", run.row.method.c_str(),
                    run.row.corruption.c_str(), format_number(run.row.true_eps).c_str(),
                    format_number(run.row.assumed_eps).c_str(), static_cast<unsigned long long>(run.row.seed),
                    format_number(run.row.final_metric).c_str(), format_number(run.row.metric_std).c_str(),
                    run.row.wall_seconds);
    }
}

void print_parts(const std::vector<ExperimentResult>& parts) {
    for (const auto& p : parts) {
        print_summary(p.runs);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust training under corrupted supervision"};
    app.require_subcommand(1);

    std::string config_path;
    std::string eps_list = "0.1,0.2,0.3,0.4";
    std::size_t trials = 200;
    std::uint64_t seed = 0;
    std::size_t networks = 20;

    auto* run = app.add_subcommand("run", "Train every configured method over every repeat");
    run->add_option("config", config_path, "Experiment JSON")->required();

    auto* sweep = app.add_subcommand("sweep-epsilon", "Repeat an experiment over several corruption rates");
    sweep->add_option("config", config_path, "Experiment JSON")->required();
    sweep->add_option("--eps", eps_list, "Comma separated corruption rates")->capture_default_str();

    auto* sens = app.add_subcommand("sensitivity", "Vary the assumed rate around the true corruption rate");
    sens->add_option("config", config_path, "Experiment JSON")->required();

    auto* theory = app.add_subcommand("verify-theory", "Check every bound and analytic claim numerically");
    theory->add_option("--trials", trials, "Constructions per bound configuration")->capture_default_str();
    theory->add_option("--seed", seed, "Seed")->capture_default_str();

    auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of backprop on random small networks");
    grad->add_option("--networks", networks, "Number of random networks")->capture_default_str();
    grad->add_option("--seed", seed, "Seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) {
            const auto cfg = load_config(config_path);
            const auto dir = output_dir(cfg);
            const auto result = run_experiment(cfg);
            write_experiment(result, dir);
            print_summary(result.runs);
            std::printf("wrote %s\n", dir.string().c_str());
        } else if (*sweep) {
            const auto cfg = load_config(config_path);
            const auto rates = parse_rates(eps_list);
            const auto dir = output_dir(cfg);
            print_parts(run_sweep(cfg, rates, dir));
            std::printf("wrote %s\n", dir.string().c_str());
        } else if (*sens) {
            const auto cfg = load_config(config_path);
            const auto dir = output_dir(cfg);
            print_parts(run_sensitivity(cfg, dir));
            std::printf("wrote %s\n", dir.string().c_str());
        } else if (*theory) {
            bool ok = true;
            for (const auto& check : run_theory_suite(trials, seed)) {
                std::printf("%s  %-28s %s (%.2fs)\n", check.passed ? "PASS" : "FAIL", check.name.c_str(),
                            check.detail.c_str(), check.seconds);
                ok = ok && check.passed;
            }
            return ok ? 0 : kExitCheck;
        } else if (*grad) {
            const auto report = run_gradcheck(networks, seed);
            for (std::size_t i = 0; i < report.cases.size(); ++i) {
                const auto& c = report.cases[i];
                std::string widths;
                for (std::size_t w : c.widths) {
                    widths += (widths.empty() ? "" : "-") + std::to_string(w);
                }
                std::printf("net %2zu  %-14s %-13s d=%-3zu rel_err=%s\n", i, widths.c_str(),
                            std::string(to_string(c.loss)).c_str(), c.params, format_number(c.relative_error).c_str());
            }
            const bool ok = report.max_relative_error < 1e-5;
            std::printf("%s  max relative error %s\n", ok ? "PASS" : "FAIL",
                        format_number(report.max_relative_error).c_str());
            return ok ? 0 : kExitCheck;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DivergenceError& e) {
        std::cerr << "diverged: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
