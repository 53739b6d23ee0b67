"""Coupled-evaluation baselines sharing the ledger and trace conventions.

All three baselines charge the full joint cost whenever they touch a point on
both objectives. The active-learning baseline classifies points as inside or
outside the front up to a tolerance derived from the observed value ranges and
always measures both objectives of the most uncertain unclassified point. The
random searcher draws uniformly among unmeasured (point, objective) pairs with
a hard cap on expensive measurements. The single-objective searcher optimizes
one objective by probability of improvement but still pays for both
measurements per iteration.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import numpy as np
from scipy.stats import norm

from .acquisition import BetaSchedule, beta, uncertainty_regions
from .costs import CostModel
from .optimizer import (
    OptimizerError,
    OptimizerState,
    ProblemOracle,
    RunResult,
    SCHEMA_VERSION,
    SurrogateEngine,
    _build_state_of_world,
    _initialize,
    _oracle_guarded,
    _trace_hv,
    actual_front,
    write_checkpoint,
    CHECKPOINT_EVERY,
)
from .space import DesignSpace, ObjectiveSpec
from .surrogate import GPHyper, gp_fit, gp_predict_batch, posterior_override, select_gp_hyper

_PAIRWISE_CHUNK = 512
_STD_FLOOR = 1e-12


def _coupled_trace_rows(state, records, t, volume, hv_reference) -> list[dict[str, Any]]:
    rows = []
    for record in records:
        rows.append(
            {
                "schema_version": SCHEMA_VERSION,
                "t": t,
                "flat_id": record.flat_id,
                "objective": record.objective,
                "value": record.value,
                "psi": record.psi,
                "cum_cost": state.cum_cost,
                "volume": volume,
                "hv_actual": _trace_hv(state, hv_reference),
            }
        )
    return rows


def _observed_ranges(state: OptimizerState) -> np.ndarray:
    """Per-objective spread of the values measured so far (0 when degenerate)."""
    ranges = np.zeros(2)
    for j in range(2):
        vals = state.values[state.measured_mask[:, j], j]
        if len(vals) > 0:
            ranges[j] = float(vals.max() - vals.min())
    return ranges


def _count_dominators(
    corners: np.ndarray, pool: np.ndarray, pool_rows: np.ndarray
) -> np.ndarray:
    """For each corner, how many pool rows dominate it componentwise."""
    counts = np.zeros(len(corners), dtype=np.int64)
    pts = pool[pool_rows]
    for start in range(0, len(corners), _PAIRWISE_CHUNK):
        block = corners[start : start + _PAIRWISE_CHUNK]
        dom = (pts[None, :, 0] >= block[:, None, 0]) & (pts[None, :, 1] >= block[:, None, 1])
        counts[start : start + _PAIRWISE_CHUNK] = dom.sum(axis=1)
    return counts


def pal_run(
    space: DesignSpace,
    objectives: tuple[ObjectiveSpec, ObjectiveSpec],
    oracle: ProblemOracle,
    costs: CostModel,
    surrogate: str = "gp",
    T: int = 200,
    epsilon_frac: float = 0.00004,
    seed: int = 1,
    init_k: int = 15,
    delta: float = 0.05,
    gp_refresh_every: int = 10,
    rf_trees: int = 25,
    cost_budget: float | None = None,
    hv_reference: tuple[float, float] | None = None,
    volume_origin: tuple[float, float] | None = None,
    checkpoint_dir: str | Path | None = None,
) -> RunResult:
    """Coupled active-learning baseline with epsilon classification.

    Every selected point is measured on both objectives. Points whose best
    case is dominated (within epsilon) by someone's worst case are ruled out;
    points nothing can beat by more than epsilon are accepted as front
    members. Selection targets the largest uncertainty-region diagonal among
    still-unclassified points. Terminates at T or once everything is
    classified.
    """
    if T < 1:
        raise OptimizerError(f"T must be >= 1, got {T}")
    state = OptimizerState.fresh(space.size, seed)
    guard = _oracle_guarded(state, "pal", checkpoint_dir)
    _initialize(state, space, objectives, oracle, costs, init_k, seed, guard)

    engine = SurrogateEngine(
        surrogate, space.encode_all(), seed, gp_refresh_every=gp_refresh_every, rf_trees=rf_trees
    )
    sched = BetaSchedule(n_objectives=2, space_size=space.size, delta=delta)
    owners_all = np.arange(space.size, dtype=np.int64)
    unclassified = np.ones(space.size, dtype=bool)
    accepted = np.zeros(space.size, dtype=bool)
    trace: list[dict[str, Any]] = []
    termination = "max_iterations"

    for t in range(1, T + 1):
        if cost_budget is not None and state.cum_cost > cost_budget:
            termination = "budget"
            break
        means, stds = engine.predict_all(state, t)
        means, stds = posterior_override(means, stds, state.measured_mask, state.values)
        regions = uncertainty_regions(owners_all, means, stds, beta(t, sched))
        _, region, _ = _build_state_of_world(regions, owners_all, state.volume_origin(volume_origin))
        state.t = t
        state.region = region

        eps = epsilon_frac * _observed_ranges(state)
        pool_rows = np.flatnonzero(unclassified | accepted)
        open_rows = np.flatnonzero(unclassified)

        # Rule out: someone's worst case beats the point's epsilon-shrunk best case.
        dom = _count_dominators(regions.opt[open_rows] - eps, regions.pess, pool_rows)
        self_dom = np.all(regions.pess[open_rows] >= regions.opt[open_rows] - eps, axis=1)
        ruled_out = open_rows[dom - self_dom.astype(np.int64) >= 1]
        unclassified[ruled_out] = False

        # Accept: nobody's best case beats the point's epsilon-padded worst case.
        open_rows = np.flatnonzero(unclassified)
        if len(open_rows) > 0:
            beats = _count_dominators(regions.pess[open_rows] + eps, regions.opt, pool_rows)
            self_beat = np.all(
                regions.opt[open_rows] >= regions.pess[open_rows] + eps, axis=1
            )
            stays_unbeaten = beats - self_beat.astype(np.int64) == 0
            newly_accepted = open_rows[stays_unbeaten]
            accepted[newly_accepted] = True
            unclassified[newly_accepted] = False

        selectable = unclassified & ~state.fully_measured
        if not unclassified.any():
            termination = "classified"
            break
        if not selectable.any():
            termination = "exhausted"
            break
        rows = np.flatnonzero(selectable)
        diag = np.linalg.norm(regions.opt[rows] - regions.pess[rows], axis=1)
        flat_id = int(rows[diag == diag.max()].min())
        new_records = [
            guard(state.measure, oracle, objectives, costs, flat_id, objective, t)
            for objective in (1, 2)
        ]
        trace.extend(_coupled_trace_rows(state, new_records, t, region.volume, hv_reference))
        if checkpoint_dir is not None and t % CHECKPOINT_EVERY == 0:
            write_checkpoint(state, "pal", checkpoint_dir)

    if checkpoint_dir is not None:
        write_checkpoint(state, "pal", checkpoint_dir)
    return RunResult(
        method="pal",
        objectives=objectives,
        records=state.records,
        trace=trace,
        front_actual=actual_front(state),
        region=state.region,
        total_cost=state.cum_cost,
        iterations_run=t_count(trace),
        termination=termination,
    )


def t_count(trace: list[dict[str, Any]]) -> int:
    return len({row["t"] for row in trace})


def rs_run(
    space: DesignSpace,
    objectives: tuple[ObjectiveSpec, ObjectiveSpec],
    oracle: ProblemOracle,
    costs: CostModel,
    T: int = 200,
    expensive_cap: int = 0,
    seed: int = 1,
    cost_budget: float | None = None,
    hv_reference: tuple[float, float] | None = None,
    checkpoint_dir: str | Path | None = None,
) -> RunResult:
    """Uniform random (point, objective) draws with an expensive-measurement cap.

    Once the expensive objective has been measured ``expensive_cap`` times,
    only cheap pairs are drawn; when those run out the run ends early.
    """
    if T < 1:
        raise OptimizerError(f"T must be >= 1, got {T}")
    if expensive_cap < 0:
        raise OptimizerError(f"expensive_cap must be >= 0, got {expensive_cap}")
    state = OptimizerState.fresh(space.size, seed)
    guard = _oracle_guarded(state, "rs", checkpoint_dir)
    rng = np.random.default_rng(seed)
    expensive = costs.most_expensive
    expensive_used = 0
    trace: list[dict[str, Any]] = []
    termination = "max_iterations"

    for t in range(1, T + 1):
        if cost_budget is not None and state.cum_cost > cost_budget:
            termination = "budget"
            break
        open_pairs = ~state.measured_mask
        if expensive_used >= expensive_cap:
            open_pairs[:, expensive - 1] = False
        ids, cols = np.nonzero(open_pairs)
        if len(ids) == 0:
            termination = "exhausted"
            break
        pick = int(rng.integers(0, len(ids)))
        flat_id, objective = int(ids[pick]), int(cols[pick]) + 1
        if objective == expensive:
            expensive_used += 1
        record = guard(state.measure, oracle, objectives, costs, flat_id, objective, t)
        state.t = t
        trace.append(
            {
                "schema_version": SCHEMA_VERSION,
                "t": t,
                "flat_id": flat_id,
                "objective": objective,
                "value": record.value,
                "psi": record.psi,
                "cum_cost": state.cum_cost,
                "volume": None,
                "hv_actual": _trace_hv(state, hv_reference),
            }
        )
        if checkpoint_dir is not None and t % CHECKPOINT_EVERY == 0:
            write_checkpoint(state, "rs", checkpoint_dir)

    if checkpoint_dir is not None:
        write_checkpoint(state, "rs", checkpoint_dir)
    return RunResult(
        method="rs",
        objectives=objectives,
        records=state.records,
        trace=trace,
        front_actual=actual_front(state),
        region=None,
        total_cost=state.cum_cost,
        iterations_run=len(trace),
        termination=termination,
    )


def _improvement_scores(
    means: np.ndarray, stds: np.ndarray, incumbent: float, kind: str
) -> np.ndarray:
    """Probability (or expectation) of improving on the incumbent; 0 where std is 0."""
    out = np.zeros(len(means))
    live = stds > _STD_FLOOR
    z = (means[live] - incumbent) / stds[live]
    if kind == "pi":
        out[live] = norm.cdf(z)
    elif kind == "ei":
        out[live] = (means[live] - incumbent) * norm.cdf(z) + stds[live] * norm.pdf(z)
    else:
        raise OptimizerError(f"acquisition must be 'pi' or 'ei', got {kind!r}")
    return out


def sobo_run(
    space: DesignSpace,
    objectives: tuple[ObjectiveSpec, ObjectiveSpec],
    oracle: ProblemOracle,
    costs: CostModel,
    target: int = 1,
    T: int = 200,
    seed: int = 1,
    init_k: int = 15,
    acquisition: str = "pi",
    gp_refresh_every: int = 10,
    cost_budget: float | None = None,
    hv_reference: tuple[float, float] | None = None,
    checkpoint_dir: str | Path | None = None,
) -> RunResult:
    """Single-objective GP search on one target objective, measuring both.

    Selection maximizes the probability of improvement over the incumbent
    (expected improvement behind the ``acquisition`` flag); every selected
    point is still measured and charged on both objectives.
    """
    if T < 1:
        raise OptimizerError(f"T must be >= 1, got {T}")
    if target not in (1, 2):
        raise OptimizerError(f"target objective must be 1 or 2, got {target}")
    method = f"sobo-{target}"
    state = OptimizerState.fresh(space.size, seed)
    guard = _oracle_guarded(state, method, checkpoint_dir)
    _initialize(state, space, objectives, oracle, costs, init_k, seed, guard)

    encoded = space.encode_all()
    j = target - 1
    hyper = GPHyper.default(encoded.shape[1])
    trace: list[dict[str, Any]] = []
    termination = "max_iterations"

    for t in range(1, T + 1):
        if cost_budget is not None and state.cum_cost > cost_budget:
            termination = "budget"
            break
        unmeasured = np.flatnonzero(~state.measured_mask[:, j])
        if len(unmeasured) == 0:
            termination = "exhausted"
            break
        rows = np.flatnonzero(state.measured_mask[:, j])
        x, y = encoded[rows], state.values[rows, j]
        if gp_refresh_every and t % gp_refresh_every == 0:
            hyper = select_gp_hyper(x, y)
        model = gp_fit(x, y, hyper)
        means, stds = gp_predict_batch(model, encoded[unmeasured])
        incumbent = float(y.max())
        scores = _improvement_scores(means, stds, incumbent, acquisition)
        flat_id = int(unmeasured[scores == scores.max()].min())
        new_records = [
            guard(state.measure, oracle, objectives, costs, flat_id, objective, t)
            for objective in (1, 2)
        ]
        state.t = t
        trace.extend(_coupled_trace_rows(state, new_records, t, None, hv_reference))
        if checkpoint_dir is not None and t % CHECKPOINT_EVERY == 0:
            write_checkpoint(state, method, checkpoint_dir)

    measured = np.flatnonzero(state.measured_mask[:, j])
    best_rows = measured[state.values[measured, j] == state.values[measured, j].max()]
    if checkpoint_dir is not None:
        write_checkpoint(state, method, checkpoint_dir)
    return RunResult(
        method=method,
        objectives=objectives,
        records=state.records,
        trace=trace,
        front_actual=actual_front(state),
        region=None,
        total_cost=state.cum_cost,
        iterations_run=t_count(trace),
        termination=termination,
        best_point=int(best_rows.min()),
    )
