#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "robustlab/error.hpp"
#include "robustlab/harness/datasets.hpp"
#include "robustlab/losses.hpp"
#include "robustlab/optim.hpp"
#include "robustlab/robust_grad.hpp"
#include "robustlab/training.hpp"

using namespace robustlab;

namespace {

harness::Dataset small_regression() { return harness::gen_regression(300, 100, 6, 3, 5); }

TrainConfig quick(Method m, double tau = 0.0) {
    TrainConfig c;
    c.method = m;
    c.hidden = {16};
    c.epochs = 4;
    c.batch_size = 32;
    c.drop_fraction = tau;
    c.ramp_epochs = 2;
    c.seed = 3;
    return c;
}

bool same_trace(const TrainTrace& a, const TrainTrace& b) {
    if (a.epochs.size() != b.epochs.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.epochs.size(); ++i) {
        const auto& x = a.epochs[i];
        const auto& y = b.epochs[i];
        if (x.epoch != y.epoch || x.train_loss != y.train_loss || x.eval_metric != y.eval_metric ||
            x.mean_kept != y.mean_kept || x.drop_fraction != y.drop_fraction) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("drop schedule examples") {
    CHECK(drop_schedule(5, 0.5, 10) == doctest::Approx(0.25));
    CHECK(keep_fraction(5, 0.5, 10) == doctest::Approx(0.75));
    // R(T) = 1 - min{T/T_k tau, tau}, evaluated independently
    for (std::size_t t = 1; t <= 30; ++t) {
        const double r = 1.0 - std::min(static_cast<double>(t) / 10.0 * 0.45, 0.45);
        CHECK(keep_fraction(t, 0.45, 10) == doctest::Approx(r).epsilon(1e-15));
    }
    CHECK(drop_schedule(10, 0.4, 10) == 0.4);
    CHECK(drop_schedule(37, 0.4, 10) == 0.4);
    for (std::size_t t = 1; t < 20; ++t) {
        CHECK(drop_schedule(t, 0.0, 7) == 0.0);
    }
    CHECK_THROWS_AS(drop_schedule(0, 0.2, 10), ContractViolation);
}

TEST_CASE("optimizer examples") {
    SUBCASE("sgd step") {
        Optimizer opt({OptimizerKind::sgd}, 1);
        Vector theta{1.0};
        const Vector grad{2.0};
        opt.step(theta, grad, 0.1);
        CHECK(theta[0] == doctest::Approx(0.8));
    }
    SUBCASE("first adam step moves by about lr") {
        Optimizer opt({}, 1);
        Vector theta{0.0};
        const Vector grad{1.0};
        opt.step(theta, grad, 0.001);
        // m_hat = 1, v_hat = 1, so the step is 0.001 / (1 + 1e-8)
        CHECK(theta[0] == doctest::Approx(-0.001 / (1.0 + 1e-8)).epsilon(1e-12));
    }
    SUBCASE("zero gradient leaves parameters unchanged") {
        for (auto kind : {OptimizerKind::sgd, OptimizerKind::adam}) {
            Optimizer opt({kind}, 3);
            Vector theta{1.0, -2.0, 3.0};
            const Vector zero(3, 0.0);
            opt.step(theta, zero, 0.5);
            opt.step(theta, zero, 0.5);
            CHECK(theta == Vector{1.0, -2.0, 3.0});
        }
    }
    SUBCASE("adam matches a hand-rolled reference over several steps") {
        Optimizer opt({}, 2);
        Vector theta{0.5, -0.5};
        Vector ref = theta;
        double m[2] = {0, 0};
        double v[2] = {0, 0};
        for (int t = 1; t <= 6; ++t) {
            const Vector g{std::sin(t * 1.0), std::cos(t * 2.0)};
            opt.step(theta, g, 0.01);
            for (int i = 0; i < 2; ++i) {
                m[i] = 0.9 * m[i] + 0.1 * g[i];
                v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
                const double mh = m[i] / (1.0 - std::pow(0.9, t));
                const double vh = v[i] / (1.0 - std::pow(0.999, t));
                ref[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
            }
        }
        CHECK(theta[0] == doctest::Approx(ref[0]).epsilon(1e-12));
        CHECK(theta[1] == doctest::Approx(ref[1]).epsilon(1e-12));
    }
    SUBCASE("network step equals the flat step") {
        const std::size_t widths[] = {3, 4, 2};
        MlpParams net = init_mlp(widths, Activation::leaky_relu, 1);
        Vector flat = flatten(net);
        Vector grad(flat.size());
        for (std::size_t i = 0; i < grad.size(); ++i) {
            grad[i] = std::sin(static_cast<double>(i));
        }
        Optimizer a({}, flat.size());
        Optimizer b({}, flat.size());
        for (int s = 0; s < 3; ++s) {
            a.step(net, grad, 0.01);
            b.step(flat, grad, 0.01);
        }
        CHECK(flatten(net) == flat);
    }
}

TEST_CASE("config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate(200));
    c.lr = 0.0;
    CHECK_THROWS_AS(c.validate(200), ConfigError);
    c = TrainConfig{};
    c.batch_size = 500;
    CHECK_THROWS_AS(c.validate(200), ConfigError);
    c = TrainConfig{};
    c.drop_fraction = 1.0;
    CHECK_THROWS_AS(c.validate(200), ConfigError);
    c = TrainConfig{};
    c.ramp_epochs = 0;
    CHECK_THROWS_AS(c.validate(200), ConfigError);
    c = TrainConfig{};
    c.method = Method::huber;
    c.loss.kind = LossKind::cross_entropy;
    CHECK_THROWS_AS(c.validate(200), ConfigError);
    c = TrainConfig{};
    c.method = Method::huber;
    CHECK(c.training_loss().kind == LossKind::huber);
    CHECK(parse_method("co_prl_l") == Method::co_prl_l);
    CHECK_THROWS_AS(parse_method("sever"), ConfigError);
}

TEST_CASE("filter disabled: PRL(L) with tau 0 reproduces Standard bit for bit") {
    const auto d = small_regression();
    const auto a = train(d.train, d.test, quick(Method::standard));
    const auto b = train(d.train, d.test, quick(Method::prl_l, 0.0));
    CHECK(same_trace(a.trace, b.trace));
    CHECK(a.params == b.params);
}

TEST_CASE("mse: PRL(L) and SPL keep the same rows at every step") {
    const auto d = small_regression();
    std::vector<std::vector<std::size_t>> prl;
    std::vector<std::vector<std::size_t>> spl;
    TrainOptions op;
    op.observer = [&](const StepEvent& e) { prl.emplace_back(e.kept.begin(), e.kept.end()); };
    TrainOptions os;
    os.observer = [&](const StepEvent& e) { spl.emplace_back(e.kept.begin(), e.kept.end()); };
    train(d.train, d.test, quick(Method::prl_l, 0.3), nullptr, op);
    train(d.train, d.test, quick(Method::spl, 0.3), nullptr, os);
    REQUIRE(prl.size() == 4 * 10);
    CHECK(prl == spl);
}

TEST_CASE("kept-set size follows m - ceil(tau_t m)") {
    const auto d = small_regression();
    for (Method m : {Method::spl, Method::prl_g, Method::prl_l}) {
        const TrainConfig c = quick(m, 0.35);
        std::size_t checked = 0;
        TrainOptions o;
        o.observer = [&](const StepEvent& e) {
            const std::size_t batch = e.step + 1 < 10 ? 32 : 300 - 9 * 32;
            const double tau = drop_schedule(e.epoch, 0.35, 2);
            CHECK(e.kept.size() == batch - static_cast<std::size_t>(std::ceil(tau * batch - 1e-9)));
            ++checked;
        };
        train(d.train, d.test, c, nullptr, o);
        CHECK(checked == 40);
    }
    const TrainConfig c = quick(Method::co_prl_l, 0.35);
    TrainOptions o;
    o.observer = [&](const StepEvent& e) {
        const std::size_t batch = e.step + 1 < 10 ? 32 : 300 - 9 * 32;
        const double tau = drop_schedule(e.epoch, 0.35, 2);
        CHECK(e.kept.size() == batch - static_cast<std::size_t>(std::ceil(tau * batch - 1e-9)));
    };
    train_co(d.train, d.test, c, nullptr, o);
}

TEST_CASE("min-sgd keeps exactly one row per batch") {
    const auto d = small_regression();
    TrainOptions o;
    o.observer = [&](const StepEvent& e) { CHECK(e.kept.size() == 1); };
    train(d.train, d.test, quick(Method::min_sgd), nullptr, o);
}

TEST_CASE("mean gradient of kept rows equals the filtered mean of per-sample rows") {
    const auto d = small_regression();
    const std::size_t widths[] = {6, 16, 3};
    const MlpParams p = init_mlp(widths, Activation::leaky_relu, 9);
    const Matrix X = d.train.X.gather_rows(std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
    const Matrix Y = d.train.Y.gather_rows(std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
    const ForwardCache cache = forward_cached(p, X);
    const LossEval e = loss_and_layer_grad(Loss{LossKind::mse}, cache.output(), Y);
    const auto kept = select_by_norm(layer_grad_norms(e.layer_grad), 0.25).kept;
    const Vector batched = backward_mean(p, cache, e.layer_grad, kept);
    const Vector filtered = mean_of_rows(backward_per_sample(p, cache, e.layer_grad), kept);
    CHECK(oracle::rel_error(batched, filtered) < 1e-10);
}

TEST_CASE("co-training with tau 0 runs two independent Standard trainings") {
    const auto d = small_regression();
    const TrainConfig co = quick(Method::co_prl_l, 0.0);
    const auto both = train_co(d.train, d.test, co);
    const auto f = train(d.train, d.test, quick(Method::standard));
    TrainOptions peer;
    peer.init = init_mlp(network_widths(co, 6, 3), co.activation, co.seed, 1);
    const auto g = train(d.train, d.test, quick(Method::standard), nullptr, peer);
    CHECK(both.params_f == f.params);
    CHECK(both.params_g == g.params);
    CHECK_FALSE(both.params_f == both.params_g);
    CHECK(same_trace(both.trace, f.trace));
    for (std::size_t i = 0; i < both.trace.epochs.size(); ++i) {
        CHECK(both.trace.epochs[i].peer_eval_metric == g.trace.epochs[i].eval_metric);
    }
}

TEST_CASE("identical initialisations reduce Co-PRL(L) to PRL(L)") {
    const auto d = small_regression();
    const TrainConfig co = quick(Method::co_prl_l, 0.3);
    TrainOptions o;
    o.init = init_mlp(network_widths(co, 6, 3), co.activation, 77);
    o.init_peer = o.init;
    const auto both = train_co(d.train, d.test, co, nullptr, o);
    TrainOptions s;
    s.init = o.init;
    const auto single = train(d.train, d.test, quick(Method::prl_l, 0.3), nullptr, s);
    CHECK(same_trace(both.trace, single.trace));
    CHECK(both.params_f == single.params);
    CHECK(both.params_g == single.params);
}

TEST_CASE("co-teaching updates each network with the peer's selection") {
    const auto d = small_regression();
    const TrainConfig co = quick(Method::co_teaching, 0.4);
    std::vector<std::vector<std::size_t>> f_rows;
    std::vector<std::vector<std::size_t>> g_rows;
    TrainOptions o;
    o.observer = [&](const StepEvent& e) {
        (e.network == 0 ? f_rows : g_rows).emplace_back(e.kept.begin(), e.kept.end());
    };
    const auto r = train_co(d.train, d.test, co, nullptr, o);
    CHECK(f_rows.size() == g_rows.size());
    std::size_t differing = 0;
    for (std::size_t i = 0; i < f_rows.size(); ++i) {
        differing += f_rows[i] != g_rows[i] ? 1 : 0;
    }
    CHECK(differing > 0);
    CHECK_THROWS_AS(train(d.train, d.test, co), ContractViolation);
    CHECK_THROWS_AS(train_co(d.train, d.test, quick(Method::prl_l)), ContractViolation);
    CHECK(r.trace.epochs.size() == 4);
}

TEST_CASE("every method trains and fills the trace") {
    const auto d = small_regression();
    const auto corrupted = corrupt(d.train.X, d.train.Y, {CorruptionKind::signflip, 0.2, 1}, TargetKind::regression);
    const Batch noisy{d.train.X, corrupted.targets};
    for (Method m : {Method::standard, Method::normclip, Method::huber, Method::min_sgd, Method::ignormclip,
                     Method::spl, Method::prl_g, Method::prl_l, Method::co_teaching, Method::co_prl_l}) {
        const TrainConfig c = quick(m, 0.2);
        const TrainTrace t = is_co_method(m) ? train_co(noisy, d.test, c, &corrupted.report).trace
                                             : train(noisy, d.test, c, &corrupted.report).trace;
        CHECK(t.epochs.size() == 4);
        for (const auto& e : t.epochs) {
            CHECK(std::isfinite(e.train_loss));
            CHECK(std::isfinite(e.eval_metric));
            CHECK(e.filtering_precision >= 0.0);
            CHECK(e.filtering_precision <= 1.0);
            CHECK(std::isnan(e.peer_eval_metric) != is_co_method(m));
        }
        const TrainTrace no_report = is_co_method(m) ? train_co(noisy, d.test, c).trace : train(noisy, d.test, c).trace;
        CHECK(std::isnan(no_report.epochs[0].filtering_precision));
    }
}

TEST_CASE("training is reproducible bit for bit") {
    const auto d = small_regression();
    const auto a = train(d.train, d.test, quick(Method::prl_g, 0.2));
    const auto b = train(d.train, d.test, quick(Method::prl_g, 0.2));
    CHECK(a.params == b.params);
    CHECK(same_trace(a.trace, b.trace));
    TrainConfig other = quick(Method::prl_g, 0.2);
    other.seed = 4;
    CHECK_FALSE(train(d.train, d.test, other).params == a.params);
}

TEST_CASE("divergence is reported with the epoch") {
    const auto d = small_regression();
    TrainConfig c = quick(Method::standard);
    c.optimizer.kind = OptimizerKind::sgd;
    c.lr = 1e12;
    c.epochs = 50;
    try {
        train(d.train, d.test, c);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.epoch() >= 1);
        CHECK(e.epoch() <= 50);
    }
}

TEST_CASE("PRL(G) refuses networks above the per-sample gradient limit") {
    const auto d = small_regression();
    TrainConfig c = quick(Method::prl_g, 0.1);
    c.hidden = {400, 300};
    CHECK_THROWS_AS(train(d.train, d.test, c), ConfigError);
    c.method = Method::prl_l;
    c.epochs = 1;
    CHECK_NOTHROW(train(d.train, d.test, c));
}
