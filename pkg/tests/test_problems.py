"""Built-in synthetic problems: fronts, decoupling, oracle determinism."""

from __future__ import annotations

import numpy as np
import pytest

from flexibo.problems import ProblemError, builtin_problems, get_problem
from oracles import bf_front_filter


def test_suite_shape():
    problems = builtin_problems()
    assert len(problems) >= 4
    names = [p.name for p in problems]
    assert names == ["concave", "convex", "cliff", "decoupled"]
    for p in problems:
        assert 100 <= p.space.size <= 10_000


def test_unknown_problem_rejected():
    with pytest.raises(ProblemError):
        get_problem("nope")


def test_analytic_fronts_match_exhaustive_filter():
    for name in ("concave", "convex"):
        p = get_problem(name)
        assert p.analytic_front_ids is not None
        exhaustive = p.true_front()
        assert sorted(exhaustive.owners.tolist()) == sorted(p.analytic_front_ids)


def test_concave_front_shape():
    p = get_problem("concave")
    vals = p.true_front().values
    # Closed form: efficiency = sqrt(1 - quality^2) along the front.
    assert np.allclose(vals[:, 1], np.sqrt(np.clip(1 - vals[:, 0] ** 2, 0, None)), atol=1e-12)


def test_convex_front_shape():
    p = get_problem("convex")
    vals = p.true_front().values
    assert np.allclose(vals[:, 1], (1 - vals[:, 0]) ** 2, atol=1e-12)


def test_true_front_equals_bruteforce_filter():
    for p in builtin_problems():
        values = p.internal_values_all()
        keep = bf_front_filter(values)
        expected = sorted(np.flatnonzero(keep).tolist())
        assert sorted(p.true_front().owners.tolist()) == expected


def test_cliff_mode_dimension_drives_first_objective_only():
    p = get_problem("cliff")
    raw = p.raw_values_all()
    shape = p.space.shape
    grid = raw[:, 0].reshape(shape)
    # Along the cliff option, the good setting stands out sharply at high levels.
    top = grid[-1, 0, :]
    assert top[4] == pytest.approx(1.0 - 0.15 * (0.0 - 0.6) ** 2)
    assert np.all(top[4] > top[np.arange(7) != 4] + 0.6)
    # The second objective never depends on the cliff option.
    second = raw[:, 1].reshape(shape)
    assert np.allclose(second, second[:, :, :1])


def test_decoupled_dimension_affects_cheap_objective_only():
    p = get_problem("decoupled")
    raw = p.raw_values_all()
    shape = p.space.shape
    score = raw[:, 1].reshape(shape)
    # Permuting the frequency knob leaves the expensive objective untouched.
    assert np.allclose(score, score[:, ::-1])
    assert np.allclose(score, score[:, :1])
    power = raw[:, 0].reshape(shape)
    assert not np.allclose(power, power[:, :1])


def test_decoupled_directions():
    p = get_problem("decoupled")
    assert p.objectives[0].direction == "minimize"
    assert p.objectives[1].direction == "maximize"
    internal = p.internal_values_all()
    assert np.all(internal[:, 0] == -p.raw_values_all()[:, 0])


def test_oracle_deterministic_within_run():
    p = get_problem("concave").with_noise((0.05, 0.0))
    oracle = p.oracle(seed=3)
    for fid in (0, 17, 101):
        for objective in (1, 2):
            first = oracle.evaluate(fid, objective)
            again = oracle.evaluate(fid, objective)
            assert first == again


def test_oracle_noise_seeded_per_pair():
    p = get_problem("concave").with_noise((0.05, 0.05))
    a = p.oracle(seed=3)
    b = p.oracle(seed=4)
    clean = p.oracle(seed=3, noise_std=(0.0, 0.0))
    noisy_same = [a.evaluate(i, 1)[0] for i in range(5)]
    noisy_other = [b.evaluate(i, 1)[0] for i in range(5)]
    exact = [clean.evaluate(i, 1)[0] for i in range(5)]
    assert noisy_same != noisy_other
    assert noisy_same != exact
    # Median pre-aggregation keeps draws near the clean value.
    assert np.max(np.abs(np.array(noisy_same) - np.array(exact))) < 0.15


def test_oracle_returns_effort():
    p = get_problem("decoupled")
    oracle = p.oracle(seed=1)
    assert oracle.evaluate(0, 1)[1] == p.theta[0]
    assert oracle.evaluate(0, 2)[1] == p.theta[1]


def test_reference_point_below_all_internal_values():
    for p in builtin_problems():
        ref = np.array(p.reference_point())
        vals = p.internal_values_all()
        assert np.all(vals >= ref + 1e-12)
