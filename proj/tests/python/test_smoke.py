import math

import numpy as np
import pytest

import robustlab as rl


def test_forward_shapes_and_determinism():
    net = rl.init_mlp([4, 8, 3], seed=1)
    assert net.param_count == 4 * 8 + 8 + 8 * 3 + 3
    x = np.random.default_rng(0).normal(size=(5, 4))
    out = net.forward(x)
    assert out.shape == (5, 3)
    np.testing.assert_array_equal(out, rl.init_mlp([4, 8, 3], seed=1).forward(x))


def test_mse_loss_and_layer_gradient():
    out = np.array([[1.0, 2.0]])
    y = np.array([[0.0, 0.0]])
    per_sample, grad = rl.loss("mse", out, y)
    assert per_sample[0] == pytest.approx(2.5)
    np.testing.assert_allclose(grad, out - y)


def test_selection_and_means():
    kept, dropped = rl.select_by_norm(np.array([0.5, 3.0, 0.1, 2.0]), 0.5)
    assert kept == [0, 2]
    assert dropped == [1, 3]
    assert rl.drop_count(30, 0.1) == 3
    g = np.array([[1.0, 0.0], [0.0, 1.0], [100.0, 100.0]])
    np.testing.assert_allclose(rl.filtered_mean_full(g, 1 / 3), [0.5, 0.5])
    np.testing.assert_allclose(rl.coordinate_median(g), [1.0, 1.0])
    assert rl.drop_schedule(5, 0.4, 10) == pytest.approx(0.2)


def test_corruption_counts():
    x = np.zeros((10, 2))
    y = np.ones((10, 3))
    noisy, idx = rl.corrupt(x, y, "signflip", 0.3, seed=2)
    assert len(idx) == 3
    np.testing.assert_array_equal(noisy[idx], -y[idx])


def test_bounds_and_examples():
    assert rl.lemma1_bound(1, 1, 1, 0.1) == pytest.approx(0.4)
    assert rl.theorem2_bound(1, 2, 0.1) == pytest.approx(0.8)
    assert rl.corollary1_bound(1.0, 0.0) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        rl.theorem2_bound(1, 1, 0.5)
    alpha = np.array([0.08, 0.28] + [0.08] * 8)
    beta = np.array([0.1, 0.3, 0.34, 0.05, 0.05, 0.1, 0.03, 0.03, 0.0, 0.0])
    assert rl.lemma2_condition(beta, alpha, 1)
    ex = rl.pl_counterexample()
    assert ex["orderings_opposite"]
    assert ex["grad_norms"][1] == pytest.approx(math.hypot(495, 4950))


def test_metrics():
    t = np.array([[1.0, 2.0], [3.0, 5.0]])
    assert rl.r_square(t, t) == 1.0
    assert rl.accuracy(np.eye(3), np.eye(3)) == 1.0


def test_run_experiment_from_dict():
    cfg = {
        "task": "regression_teacher",
        "n_train": 100,
        "n_test": 30,
        "p": 4,
        "q": 2,
        "corruption": {"kind": "signflip", "rate": 0.2, "seed": 0},
        "train": {"method": ["standard", "prl_l"], "epochs": 3, "batch_size": 20, "hidden": [8]},
        "repeats": 2,
    }
    rows = rl.run_experiment(cfg)
    assert [r["method"] for r in rows] == ["standard", "standard", "prl_l", "prl_l"]
    assert all(len(r["eval_metric"]) == 3 for r in rows)
    assert rows == rl.run_experiment(cfg)
    with pytest.raises(ValueError):
        rl.run_experiment({"n_trian": 3})
