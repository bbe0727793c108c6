// SPDX-License-Identifier: Apache-2.0
#include "robustlab/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "robustlab/error.hpp"
#include "robustlab/metrics.hpp"
#include "robustlab/rng.hpp"
#include "robustlab/robust_grad.hpp"

namespace robustlab {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Selection {
    std::vector<std::size_t> kept;  // batch-local rows, ascending
};

struct ScoredBatch {
    ForwardCache cache;
    LossEval eval;
};

ScoredBatch score_batch(const MlpParams& params, const Loss& loss, const Matrix& X, const Matrix& Y) {
    ScoredBatch scored{forward_cached(params, X), {}};
    scored.eval = loss_and_layer_grad(loss, scored.cache.output(), Y);
    return scored;
}

std::vector<std::size_t> all_rows(std::size_t m) {
    std::vector<std::size_t> rows(m);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

double mean_over(const Vector& values, std::span<const std::size_t> rows) {
    double s = 0.0;
    for (std::size_t r : rows) {
        s += values[r];
    }
    return s / static_cast<double>(rows.size());
}

bool finite(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

std::vector<std::size_t> smallest_loss_row(const Vector& losses) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < losses.size(); ++i) {
        if (losses[i] < losses[best]) {
            best = i;
        }
    }
    return {best};
}

struct StepResult {
    Vector grad;
    std::vector<std::size_t> kept;
    double kept_loss = 0.0;
};

// One update direction for a single-network method on one mini-batch.
StepResult single_step(Method method, const TrainConfig& config, const Loss& loss, const MlpParams& params,
                       const Matrix& X, const Matrix& Y, double tau) {
    const ScoredBatch scored = score_batch(params, loss, X, Y);
    const Matrix& layer_grad = scored.eval.layer_grad;
    const Vector& losses = scored.eval.per_sample;
    StepResult step;

    switch (method) {
    case Method::standard:
    case Method::huber:
        step.kept = all_rows(X.rows());
        step.grad = backward_mean(params, scored.cache, layer_grad, step.kept);
        break;
    case Method::normclip:
        step.kept = all_rows(X.rows());
        step.grad = clip_vector(backward_mean(params, scored.cache, layer_grad, step.kept), config.clip_c);
        break;
    case Method::min_sgd:
        step.kept = smallest_loss_row(losses);
        step.grad = backward_mean(params, scored.cache, layer_grad, step.kept);
        break;
    case Method::spl:
        step.kept = select_by_norm(losses, tau).kept;
        step.grad = backward_mean(params, scored.cache, layer_grad, step.kept);
        break;
    case Method::prl_l:
        // Selection on the m x q loss-layer gradients, then one backprop over kept rows.
        step.kept = select_by_norm(layer_grad_norms(layer_grad), tau).kept;
        step.grad = backward_mean(params, scored.cache, layer_grad, step.kept);
        break;
    case Method::ignormclip: {
        const Matrix per_sample = backward_per_sample(params, scored.cache, layer_grad);
        step.kept = all_rows(X.rows());
        step.grad = empirical_mean(clip_rows(per_sample, config.clip_c));
        break;
    }
    case Method::prl_g: {
        const Matrix per_sample = backward_per_sample(params, scored.cache, layer_grad);
        step.kept = select_by_norm(row_norms(per_sample), tau).kept;
        step.grad = mean_of_rows(per_sample, step.kept);
        break;
    }
    case Method::co_teaching:
    case Method::co_prl_l:
        throw ContractViolation("co-training methods run through train_co");
    }
    step.kept_loss = mean_over(losses, step.kept);
    return step;
}

std::vector<std::size_t> to_dataset_rows(std::span<const std::size_t> local, std::span<const std::size_t> batch) {
    std::vector<std::size_t> out(local.size());
    for (std::size_t i = 0; i < local.size(); ++i) {
        out[i] = batch[local[i]];
    }
    return out;
}

double evaluate(const MlpParams& params, const Batch& test, bool classification) {
    const Matrix pred = forward(params, test.X);
    return classification ? accuracy(pred, test.Y) : r_square(pred, test.Y);
}

struct EpochAccumulator {
    double loss = 0.0;
    double kept = 0.0;
    double precision = 0.0;
    std::size_t steps = 0;

    void add(double kept_loss, std::span<const std::size_t> kept_rows, const CorruptionReport* report) {
        loss += kept_loss;
        kept += static_cast<double>(kept_rows.size());
        if (report != nullptr) {
            precision += filtering_precision(*report, kept_rows);
        }
        ++steps;
    }

    EpochRecord finish(std::size_t epoch, double tau, const CorruptionReport* report) const {
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss / static_cast<double>(steps);
        rec.mean_kept = kept / static_cast<double>(steps);
        rec.filtering_precision = report != nullptr ? precision / static_cast<double>(steps) : kNaN;
        rec.drop_fraction = tau;
        rec.peer_eval_metric = kNaN;
        return rec;
    }
};

void check_finite(double loss, std::span<const double> grad, std::size_t epoch) {
    if (!std::isfinite(loss)) {
        throw DivergenceError(epoch, "training loss is not finite");
    }
    if (!finite(grad)) {
        throw DivergenceError(epoch, "gradient is not finite");
    }
}

MlpParams initial_params(const std::optional<MlpParams>& given, const TrainConfig& config, std::size_t p,
                         std::size_t q, std::uint64_t stream) {
    if (given) {
        given->validate();
        require(given->input_dim() == p && given->output_dim() == q, "initial parameters do not fit the data");
        return *given;
    }
    const auto widths = network_widths(config, p, q);
    return init_mlp(widths, config.activation, config.seed, stream);
}

// Mini-batches of one epoch, sampled without replacement.
template <typename Fn>
void for_each_batch(std::vector<std::size_t>& order, Philox& shuffle, std::size_t batch_size, Fn&& fn) {
    shuffle.shuffle(order);
    std::size_t step = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size, ++step) {
        const std::size_t end = std::min(order.size(), start + batch_size);
        fn(step, std::span<const std::size_t>(order.data() + start, end - start));
    }
}

}  // namespace

std::string_view to_string(Method method) {
    switch (method) {
    case Method::standard: return "standard";
    case Method::normclip: return "normclip";
    case Method::huber: return "huber";
    case Method::min_sgd: return "min_sgd";
    case Method::ignormclip: return "ignormclip";
    case Method::spl: return "spl";
    case Method::prl_g: return "prl_g";
    case Method::prl_l: return "prl_l";
    case Method::co_teaching: return "co_teaching";
    case Method::co_prl_l: return "co_prl_l";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    for (auto m : {Method::standard, Method::normclip, Method::huber, Method::min_sgd, Method::ignormclip,
                   Method::spl, Method::prl_g, Method::prl_l, Method::co_teaching, Method::co_prl_l}) {
        if (name == to_string(m)) {
            return m;
        }
    }
    throw ConfigError("unknown method '" + std::string(name) + "'");
}

bool is_co_method(Method method) {
    return method == Method::co_teaching || method == Method::co_prl_l;
}

bool uses_drop_schedule(Method method) {
    return method == Method::spl || method == Method::prl_g || method == Method::prl_l || is_co_method(method);
}

void TrainConfig::validate(std::size_t n) const {
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (batch_size < 1 || batch_size > n) throw ConfigError("batch size must lie in [1, n]");
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (!(drop_fraction >= 0.0 && drop_fraction < 1.0)) throw ConfigError("drop fraction must lie in [0, 1)");
    if (ramp_epochs < 1) throw ConfigError("ramp epochs must be at least 1");
    if ((method == Method::normclip || method == Method::ignormclip) && !(clip_c > 0.0)) {
        throw ConfigError("clip threshold must be positive");
    }
    if (method == Method::huber && classification()) {
        throw ConfigError("huber training applies to regression only");
    }
    try {
        training_loss().validate();
    } catch (const ContractViolation& e) {
        throw ConfigError(e.what());
    }
}

Loss TrainConfig::training_loss() const {
    if (method == Method::huber) {
        return Loss{LossKind::huber, loss.kind == LossKind::huber ? loss.huber_delta : 1.0};
    }
    return loss;
}

double drop_schedule(std::size_t epoch, double tau_max, std::size_t ramp_epochs) {
    require(epoch >= 1, "epochs are counted from 1");
    require(ramp_epochs >= 1, "ramp length must be at least 1");
    const double ramp = std::min(1.0, static_cast<double>(epoch) / static_cast<double>(ramp_epochs));
    return tau_max * ramp;
}

double keep_fraction(std::size_t epoch, double tau_max, std::size_t ramp_epochs) {
    return 1.0 - drop_schedule(epoch, tau_max, ramp_epochs);
}

std::vector<std::size_t> network_widths(const TrainConfig& config, std::size_t p, std::size_t q) {
    std::vector<std::size_t> widths;
    widths.push_back(p);
    widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
    widths.push_back(q);
    return widths;
}

TrainResult train(const Batch& data, const Batch& test, const TrainConfig& config, const CorruptionReport* report,
                  const TrainOptions& options) {
    data.validate();
    test.validate();
    config.validate(data.size());
    if (is_co_method(config.method)) {
        throw ContractViolation("co-training methods run through train_co");
    }
    const std::size_t p = data.X.cols();
    const std::size_t q = data.Y.cols();
    MlpParams params = initial_params(options.init, config, p, q, 0);
    if (config.method == Method::prl_g && params.param_count() > kMaxFullGradientParams) {
        throw ConfigError("prl_g materialises per-sample gradients and is limited to " +
                          std::to_string(kMaxFullGradientParams) + " parameters; network has " +
                          std::to_string(params.param_count()));
    }

    const Loss loss = config.training_loss();
    Optimizer optimizer(config.optimizer, params.param_count());
    Philox shuffle(config.seed, "shuffle");
    std::vector<std::size_t> order = all_rows(data.size());
    TrainTrace trace;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const double tau =
            uses_drop_schedule(config.method) ? drop_schedule(epoch, config.drop_fraction, config.ramp_epochs) : 0.0;
        EpochAccumulator acc;
        for_each_batch(order, shuffle, config.batch_size, [&](std::size_t step, std::span<const std::size_t> batch) {
            const Matrix X = data.X.gather_rows(batch);
            const Matrix Y = data.Y.gather_rows(batch);
            const StepResult result = single_step(config.method, config, loss, params, X, Y, tau);
            check_finite(result.kept_loss, result.grad, epoch);
            const auto kept_rows = to_dataset_rows(result.kept, batch);
            if (options.observer) {
                options.observer(StepEvent{epoch, step, 0, kept_rows});
            }
            acc.add(result.kept_loss, kept_rows, report);
            optimizer.step(params, result.grad, config.lr);
        });
        EpochRecord rec = acc.finish(epoch, tau, report);
        rec.eval_metric = evaluate(params, test, config.classification());
        trace.epochs.push_back(rec);
    }
    return {std::move(params), std::move(trace)};
}

CoTrainResult train_co(const Batch& data, const Batch& test, const TrainConfig& config,
                       const CorruptionReport* report, const TrainOptions& options) {
    data.validate();
    test.validate();
    config.validate(data.size());
    require(is_co_method(config.method), "train_co requires co_teaching or co_prl_l");
    const std::size_t p = data.X.cols();
    const std::size_t q = data.Y.cols();
    MlpParams net_f = initial_params(options.init, config, p, q, 0);
    MlpParams net_g = initial_params(options.init_peer, config, p, q, 1);

    const Loss loss = config.training_loss();
    Optimizer opt_f(config.optimizer, net_f.param_count());
    Optimizer opt_g(config.optimizer, net_g.param_count());
    Philox shuffle(config.seed, "shuffle");
    std::vector<std::size_t> order = all_rows(data.size());
    TrainTrace trace;

    auto select = [&](const ScoredBatch& scored, double tau) {
        if (config.method == Method::co_prl_l) {
            return select_by_norm(layer_grad_norms(scored.eval.layer_grad), tau).kept;
        }
        return select_by_norm(scored.eval.per_sample, tau).kept;
    };

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const double tau = drop_schedule(epoch, config.drop_fraction, config.ramp_epochs);
        EpochAccumulator acc;
        for_each_batch(order, shuffle, config.batch_size, [&](std::size_t step, std::span<const std::size_t> batch) {
            const Matrix X = data.X.gather_rows(batch);
            const Matrix Y = data.Y.gather_rows(batch);
            const ScoredBatch scored_f = score_batch(net_f, loss, X, Y);
            const ScoredBatch scored_g = score_batch(net_g, loss, X, Y);
            const auto kept_f = select(scored_f, tau);
            const auto kept_g = select(scored_g, tau);

            // Each network learns from the rows its peer selected.
            const Vector grad_f = backward_mean(net_f, scored_f.cache, scored_f.eval.layer_grad, kept_g);
            const Vector grad_g = backward_mean(net_g, scored_g.cache, scored_g.eval.layer_grad, kept_f);
            const double loss_f = mean_over(scored_f.eval.per_sample, kept_g);
            const double loss_g = mean_over(scored_g.eval.per_sample, kept_f);
            check_finite(loss_f, grad_f, epoch);
            check_finite(loss_g, grad_g, epoch);

            const auto rows_f = to_dataset_rows(kept_f, batch);
            const auto rows_g = to_dataset_rows(kept_g, batch);
            if (options.observer) {
                options.observer(StepEvent{epoch, step, 0, rows_f});
                options.observer(StepEvent{epoch, step, 1, rows_g});
            }
            acc.add(loss_f, rows_f, report);
            opt_f.step(net_f, grad_f, config.lr);
            opt_g.step(net_g, grad_g, config.lr);
        });
        EpochRecord rec = acc.finish(epoch, tau, report);
        rec.eval_metric = evaluate(net_f, test, config.classification());
        rec.peer_eval_metric = evaluate(net_g, test, config.classification());
        trace.epochs.push_back(rec);
    }
    return {std::move(net_f), std::move(net_g), std::move(trace)};
}

}  // namespace robustlab
