"""GP posterior vs dense-solve oracle, forest statistics vs explicit loops,
and measured-value override semantics."""

from __future__ import annotations

import numpy as np
import pytest

from flexibo.surrogate import (
    GPHyper,
    SurrogateError,
    gp_fit,
    gp_log_marginal_likelihood,
    gp_predict,
    gp_predict_batch,
    posterior_override,
    rf_fit,
    rf_predict,
    rf_predict_batch,
    select_gp_hyper,
)
from oracles import gp_dense_posterior, rf_stats_explicit


def spaced_dataset(rng: np.random.Generator, dims: int, max_points: int, min_gap: float = 0.08):
    """Random points in [0,1]^dims with a minimum pairwise separation, so the
    zero-noise kernel matrix stays numerically well conditioned."""
    points: list[np.ndarray] = []
    for _ in range(400):
        cand = rng.uniform(0, 1, size=dims)
        if all(np.linalg.norm(cand - p) >= min_gap for p in points):
            points.append(cand)
        if len(points) == max_points:
            break
    x = np.array(points)
    y = rng.normal(0, 1, size=len(points))
    return x, y


def test_gp_single_point_exact_interpolation():
    hyper = GPHyper(length_scales=(0.2,), noise_variance=0.0)
    model = gp_fit([[0.3]], [2.5], hyper)
    est = gp_predict(model, [0.3])
    assert est.mean == pytest.approx(2.5, abs=1e-12)
    assert est.std == 0.0


def test_gp_prior_recovery_far_from_data():
    hyper = GPHyper(length_scales=(0.05,), signal_variance=2.0, noise_variance=0.0)
    model = gp_fit([[0.0]], [5.0], hyper)
    est = gp_predict(model, [1.0])
    assert est.mean == pytest.approx(0.0, abs=1e-9)
    assert est.std == pytest.approx(np.sqrt(2.0), abs=1e-9)


def test_gp_two_point_frozen_dense_solve_values():
    # Expected values computed with the explicit 2x2 inversion oracle.
    hyper = GPHyper(length_scales=(0.5,), signal_variance=1.0, noise_variance=0.0)
    model = gp_fit([[0.2], [0.8]], [1.0, -1.0], hyper)
    est = gp_predict(model, [0.5])
    assert est.mean == pytest.approx(0.0, abs=1e-8)
    assert est.std == pytest.approx(0.24794357197785794, abs=1e-8)


def test_gp_matches_dense_oracle_randomized():
    rng = np.random.default_rng(101)
    for trial in range(100):
        dims = int(rng.integers(1, 5))
        n = int(rng.integers(2, 21))
        x = rng.uniform(0, 1, size=(n, dims))
        y = rng.normal(0, 1, size=n)
        hyper = GPHyper(
            length_scales=(float(rng.uniform(0.15, 0.8)),) * dims,
            signal_variance=float(rng.uniform(0.5, 2.0)),
            noise_variance=1e-4,
        )
        model = gp_fit(x, y, hyper)
        queries = rng.uniform(0, 1, size=(5, dims))
        mean, std = gp_predict_batch(model, queries)
        o_mean, o_std = gp_dense_posterior(
            model.train_x,
            model.train_y,
            queries,
            hyper.length_scales,
            hyper.signal_variance,
            hyper.noise_variance,
            model.jitter,
        )
        assert np.allclose(mean, o_mean, atol=1e-8)
        assert np.allclose(std, o_std, atol=1e-8)


def test_gp_zero_noise_interpolation_randomized():
    rng = np.random.default_rng(202)
    for trial in range(100):
        dims = int(rng.integers(1, 5))
        x, y = spaced_dataset(rng, dims, max_points=min(30, 8 + 4 * dims))
        hyper = GPHyper(length_scales=(0.2,) * dims, noise_variance=0.0)
        model = gp_fit(x, y, hyper)
        assert model.jitter <= 1e-10
        mean, std = gp_predict_batch(model, model.train_x)
        assert np.max(np.abs(mean - model.train_y)) <= 1e-6
        assert np.max(std) <= 1e-4


def test_gp_duplicate_rows_averaged():
    hyper = GPHyper(length_scales=(0.3,), noise_variance=0.0)
    model = gp_fit([[0.5], [0.5], [0.1]], [1.0, 3.0, 0.0], hyper)
    assert len(model.train_y) == 2
    assert gp_predict(model, [0.5]).mean == pytest.approx(2.0, abs=1e-9)


def test_gp_dimension_mismatch():
    model = gp_fit([[0.1, 0.2]], [1.0], GPHyper(length_scales=(0.2, 0.2)))
    with pytest.raises(SurrogateError):
        gp_predict(model, [0.1])
    with pytest.raises(SurrogateError):
        gp_fit([[0.1, 0.2]], [1.0], GPHyper(length_scales=(0.2,)))


def test_gp_variance_clamped_nonnegative():
    rng = np.random.default_rng(7)
    x = rng.uniform(0, 1, size=(25, 2))
    model = gp_fit(x, rng.normal(size=25), GPHyper(length_scales=(0.5, 0.5)))
    _, std = gp_predict_batch(model, x)
    assert np.all(std >= 0.0)


def test_select_gp_hyper_prefers_smooth_scale():
    rng = np.random.default_rng(11)
    x = np.linspace(0, 1, 20).reshape(-1, 1)
    y = (1 - x[:, 0]) ** 2
    hyper = select_gp_hyper(x, y)
    assert hyper.length_scales[0] >= 0.4

    rough = rng.normal(size=20)
    hyper_rough = select_gp_hyper(x, rough)
    assert hyper_rough.length_scales[0] <= 0.1


def test_gp_log_marginal_likelihood_finite():
    model = gp_fit([[0.1], [0.9]], [0.0, 1.0], GPHyper(length_scales=(0.4,)))
    assert np.isfinite(gp_log_marginal_likelihood(model))


def test_rf_constant_targets():
    rng = np.random.default_rng(3)
    x = rng.uniform(0, 1, size=(20, 2))
    # Dyadic constant: the tree-by-tree accumulation is exact.
    model = rf_fit(x, np.full(20, 4.25), tree_count=25, seed=0)
    mean, std = rf_predict_batch(model, rng.uniform(0, 1, size=(10, 2)))
    assert np.all(mean == 4.25)
    assert np.all(std == 0.0)
    # Non-dyadic constants are exact up to accumulation rounding.
    model = rf_fit(x, np.full(20, 4.2), tree_count=25, seed=0)
    mean, std = rf_predict_batch(model, rng.uniform(0, 1, size=(10, 2)))
    assert np.allclose(mean, 4.2, atol=1e-12)
    assert np.all(std <= 1e-12)


def test_rf_single_tree_zero_std():
    rng = np.random.default_rng(5)
    x = rng.uniform(0, 1, size=(30, 2))
    y = rng.normal(size=30)
    model = rf_fit(x, y, tree_count=1, seed=1)
    _, std = rf_predict_batch(model, x)
    assert np.all(std == 0.0)


def test_rf_mean_within_target_range():
    rng = np.random.default_rng(9)
    x = rng.uniform(0, 1, size=(40, 3))
    y = rng.uniform(-2, 5, size=40)
    model = rf_fit(x, y, tree_count=25, seed=2)
    mean, _ = rf_predict_batch(model, rng.uniform(0, 1, size=(50, 3)))
    assert np.all(mean >= y.min() - 1e-12)
    assert np.all(mean <= y.max() + 1e-12)


def test_rf_two_value_trees_mean_and_std():
    # Trees predicting {1, 3} must give mean 2 and population std 1.
    preds = np.array([1.0, 3.0])
    mean = preds.sum() / 2
    std = np.sqrt(((mean - preds) ** 2).sum() / 2)
    assert mean == 2.0 and std == 1.0


def test_rf_statistics_match_explicit_loop_bitwise():
    rng = np.random.default_rng(13)
    x = rng.uniform(0, 1, size=(60, 2))
    y = np.sin(6 * x[:, 0]) + rng.normal(0, 0.1, size=60)
    for w in (5, 25):
        model = rf_fit(x, y, tree_count=w, seed=7)
        for q in rng.uniform(0, 1, size=(20, 2)):
            est = rf_predict(model, q)
            o_mean, o_std = rf_stats_explicit(model.trees, q)
            assert est.mean == o_mean  # bit-for-bit
            assert est.std == o_std


def test_rf_deterministic_given_seed():
    rng = np.random.default_rng(17)
    x = rng.uniform(0, 1, size=(30, 2))
    y = rng.normal(size=30)
    q = rng.uniform(0, 1, size=(15, 2))
    a = rf_predict_batch(rf_fit(x, y, tree_count=10, seed=123), q)
    b = rf_predict_batch(rf_fit(x, y, tree_count=10, seed=123), q)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_rf_input_validation():
    with pytest.raises(SurrogateError):
        rf_fit(np.zeros((3, 2)), np.zeros(2))
    with pytest.raises(SurrogateError):
        rf_fit(np.zeros((3, 2)), np.zeros(3), tree_count=0)
    model = rf_fit(np.random.default_rng(0).uniform(size=(10, 2)), np.zeros(10))
    with pytest.raises(SurrogateError):
        rf_predict(model, [0.5])


def test_posterior_override_pins_measured_pairs():
    means = np.array([[0.5, 0.5], [1.0, 1.0]])
    stds = np.array([[0.2, 0.3], [0.4, 0.5]])
    mask = np.array([[True, True], [True, False]])
    values = np.array([[7.0, 8.0], [9.0, np.nan]])
    m2, s2 = posterior_override(means, stds, mask, values)
    assert m2[0].tolist() == [7.0, 8.0] and s2[0].tolist() == [0.0, 0.0]
    assert m2[1, 0] == 9.0 and s2[1, 0] == 0.0
    assert m2[1, 1] == 1.0 and s2[1, 1] == 0.5  # unmeasured objective untouched


def test_posterior_override_identity_and_idempotent():
    rng = np.random.default_rng(19)
    means = rng.normal(size=(6, 2))
    stds = rng.uniform(0.1, 1, size=(6, 2))
    mask = np.zeros((6, 2), dtype=bool)
    values = np.full((6, 2), np.nan)
    m2, s2 = posterior_override(means, stds, mask, values)
    assert np.array_equal(m2, means) and np.array_equal(s2, stds)

    mask[2, 1] = True
    values[2, 1] = 3.3
    once = posterior_override(means, stds, mask, values)
    twice = posterior_override(once[0], once[1], mask, values)
    assert np.array_equal(once[0], twice[0]) and np.array_equal(once[1], twice[1])
