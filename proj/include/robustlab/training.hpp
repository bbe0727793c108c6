// SPDX-License-Identifier: Apache-2.0
//
// Training loops for every method. One run is single-threaded and fully determined
// by (config, data, seed); independent runs share no mutable state.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "robustlab/corruption.hpp"
#include "robustlab/losses.hpp"
#include "robustlab/mlp.hpp"
#include "robustlab/optim.hpp"

namespace robustlab {

enum class Method {
    standard,
    normclip,
    huber,
    min_sgd,
    ignormclip,
    spl,
    prl_g,
    prl_l,
    co_teaching,
    co_prl_l,
};

std::string_view to_string(Method method);
Method parse_method(std::string_view name);
bool is_co_method(Method method);
/// Methods whose drop ratio follows the ramp schedule.
bool uses_drop_schedule(Method method);

inline constexpr std::size_t kMaxFullGradientParams = 100000;

struct TrainConfig {
    Method method = Method::standard;
    Loss loss{};
    double lr = 1e-3;
    std::size_t batch_size = 128;
    std::size_t epochs = 50;
    double drop_fraction = 0.0;  // tau_max
    std::size_t ramp_epochs = 10;  // T_k
    OptimizerConfig optimizer{};
    double clip_c = 1.0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> hidden{256, 256};
    Activation activation = Activation::leaky_relu;

    /// Throws ConfigError for an invalid combination on a dataset of n rows.
    void validate(std::size_t n) const;
    /// Loss actually optimised (Huber forces the huber loss).
    Loss training_loss() const;
    bool classification() const { return loss.kind == LossKind::cross_entropy; }
};

/// tau_max * min(1, t / T_k), for epoch t >= 1.
double drop_schedule(std::size_t epoch, double tau_max, std::size_t ramp_epochs);
/// R(t) = 1 - min{(t/T_k) tau_max, tau_max}.
double keep_fraction(std::size_t epoch, double tau_max, std::size_t ramp_epochs);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;        // mean loss over the rows used for updates
    double eval_metric = 0.0;       // R^2 or accuracy on the clean test set
    double peer_eval_metric = 0.0;  // second network (co-training), NaN otherwise
    double mean_kept = 0.0;
    double filtering_precision = 0.0;  // NaN without a corruption report
    double drop_fraction = 0.0;
};

struct TrainTrace {
    std::vector<EpochRecord> epochs;
};

struct StepEvent {
    std::size_t epoch;
    std::size_t step;
    std::size_t network;                  // 0 for f (or the single net), 1 for g
    std::span<const std::size_t> kept;    // dataset row indices selected by that network
};

using StepObserver = std::function<void(const StepEvent&)>;

struct TrainOptions {
    std::optional<MlpParams> init;       // overrides seeded init of the (first) network
    std::optional<MlpParams> init_peer;  // overrides seeded init of the co-training peer
    StepObserver observer;
};

struct TrainResult {
    MlpParams params;
    TrainTrace trace;
};

struct CoTrainResult {
    MlpParams params_f;
    MlpParams params_g;
    TrainTrace trace;
};

/// Architecture widths {p, hidden..., q}.
std::vector<std::size_t> network_widths(const TrainConfig& config, std::size_t p, std::size_t q);

TrainResult train(const Batch& data, const Batch& test, const TrainConfig& config,
                  const CorruptionReport* report = nullptr, const TrainOptions& options = {});

/// Co-teaching style training: each network keeps its R(t) fraction of lowest-score
/// rows and that selection updates the other network.
CoTrainResult train_co(const Batch& data, const Batch& test, const TrainConfig& config,
                       const CorruptionReport* report = nullptr, const TrainOptions& options = {});

}  // namespace robustlab
