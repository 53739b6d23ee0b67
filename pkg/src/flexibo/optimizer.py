"""The decoupled cost-aware optimization loop and its run state.

Each iteration fits one surrogate per objective on whatever has been measured
so far, pins measured coordinates, builds uncertainty regions scaled by the
confidence schedule, filters the undominated set, constructs the pessimistic
and optimistic fronts, and then measures the single (point, objective) pair
with the best volume reduction per unit cost. Initialization measures a small
random sample on both objectives. Runs are fully deterministic given a seed
and a deterministic problem oracle.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

import numpy as np

from .acquisition import (
    BetaSchedule,
    beta,
    select_next,
    uncertainty_regions,
    volume_change_per_cost,
)
from .costs import CostModel, EvaluationRecord
from .pareto import ParetoFront, ParetoRegion, front_of_points, hypervolume
from .pareto import build_fronts, clipped_region_volume, undominated_set
from .space import DesignSpace, ObjectiveSpec, sample_random
from .surrogate import (
    GPHyper,
    gp_fit,
    gp_predict_batch,
    posterior_override,
    rf_fit,
    rf_predict_batch,
    select_gp_hyper,
)

CHECKPOINT_EVERY = 25
SCHEMA_VERSION = 1


class OptimizerError(RuntimeError):
    """Invalid run parameters."""


class ProblemOracle(Protocol):
    """Measurement source for one problem.

    ``evaluate`` returns the raw measured value (in the objective's declared
    direction) and the raw effort spent; it must be deterministic given
    (flat_id, objective).
    """

    def evaluate(self, flat_id: int, objective: int) -> tuple[float, float]: ...


@dataclass
class OptimizerState:
    """Mutable per-run bookkeeping shared by all methods."""

    t: int
    seed: int
    measured_mask: np.ndarray  # (|E|, 2) bool
    values: np.ndarray  # (|E|, 2) internal orientation; NaN where unmeasured
    records: list[EvaluationRecord] = field(default_factory=list)
    cum_cost: float = 0.0
    undominated: np.ndarray | None = None
    region: ParetoRegion | None = None

    @classmethod
    def fresh(cls, size: int, seed: int) -> "OptimizerState":
        return cls(
            t=0,
            seed=seed,
            measured_mask=np.zeros((size, 2), dtype=bool),
            values=np.full((size, 2), np.nan),
        )

    @property
    def evaluated_ids(self) -> np.ndarray:
        """Flat ids measured on at least one objective (the sample set)."""
        return np.flatnonzero(self.measured_mask.any(axis=1))

    @property
    def fully_measured(self) -> np.ndarray:
        return self.measured_mask.all(axis=1)

    @property
    def observed_origin(self) -> tuple[float, float]:
        """Fallback translation origin: componentwise minimum of observed values.

        Harnesses that know the objective ranges should pass a fixed origin
        instead, so region volumes stay on one scale across the whole run.
        """
        origin = []
        for j in range(2):
            vals = self.values[self.measured_mask[:, j], j]
            if len(vals) == 0:
                raise OptimizerError(f"no measurements yet for objective {j + 1}")
            origin.append(float(vals.min()))
        return origin[0], origin[1]

    def volume_origin(self, fixed: tuple[float, float] | None) -> tuple[float, float]:
        return fixed if fixed is not None else self.observed_origin

    def measure(
        self,
        oracle: ProblemOracle,
        objectives: tuple[ObjectiveSpec, ObjectiveSpec],
        costs: CostModel,
        flat_id: int,
        objective: int,
        t: int,
    ) -> EvaluationRecord:
        """Charge the ledger and store one measurement (internal orientation)."""
        j = objective - 1
        if self.measured_mask[flat_id, j]:
            raise OptimizerError(f"pair ({flat_id}, {objective}) measured twice")
        raw, _effort = oracle.evaluate(flat_id, objective)
        value = objectives[j].to_internal(float(raw))
        record = EvaluationRecord(
            flat_id=flat_id,
            objective=objective,
            value=value,
            psi=costs.psi(objective),
            t=t,
            wall_ts=time.time(),
        )
        self.measured_mask[flat_id, j] = True
        self.values[flat_id, j] = value
        self.records.append(record)
        self.cum_cost += record.psi
        return record

    def checkpoint_dict(self, method: str) -> dict[str, Any]:
        pairs = [
            [int(i), int(j + 1)]
            for i, j in zip(*np.nonzero(self.measured_mask))
        ]
        return {
            "schema_version": SCHEMA_VERSION,
            "method": method,
            "t": self.t,
            "seed": self.seed,
            "cum_cost": self.cum_cost,
            "n_records": len(self.records),
            "measured_pairs": pairs,
            "volume": None if self.region is None else self.region.volume,
        }


def write_checkpoint(state: OptimizerState, method: str, directory: str | Path) -> Path:
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    target = path / "checkpoint.json"
    target.write_text(json.dumps(state.checkpoint_dict(method), indent=2))
    return target


@dataclass
class RunResult:
    """Everything a single optimization run produces."""

    method: str
    objectives: tuple[ObjectiveSpec, ObjectiveSpec]
    records: list[EvaluationRecord]
    trace: list[dict[str, Any]]
    front_actual: ParetoFront
    region: ParetoRegion | None
    total_cost: float
    iterations_run: int
    termination: str  # "max_iterations" | "converged" | "budget" | "exhausted" | "classified"
    best_point: int | None = None  # single-objective runs only

    @property
    def converged(self) -> bool:
        return self.termination in ("converged", "classified")

    def objective_counts(self) -> tuple[int, int]:
        c1 = sum(1 for r in self.records if r.objective == 1)
        return c1, len(self.records) - c1


class SurrogateEngine:
    """Per-objective model fitting and whole-space prediction."""

    def __init__(
        self,
        kind: str,
        encoded: np.ndarray,
        seed: int,
        gp_refresh_every: int = 10,
        rf_trees: int = 25,
    ) -> None:
        if kind not in ("gp", "rf"):
            raise OptimizerError(f"surrogate must be 'gp' or 'rf', got {kind!r}")
        self.kind = kind
        self.encoded = encoded
        self.seed = seed
        self.gp_refresh_every = gp_refresh_every
        self.rf_trees = rf_trees
        self.hypers = [GPHyper.default(encoded.shape[1]) for _ in range(2)]

    def _rf_seed(self, objective: int, t: int) -> int:
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(objective, t))
        return int(seq.generate_state(1)[0])

    def predict_all(self, state: OptimizerState, t: int) -> tuple[np.ndarray, np.ndarray]:
        """(|E|, 2) means and stds from the current per-objective models."""
        size = len(self.encoded)
        means = np.zeros((size, 2))
        stds = np.zeros((size, 2))
        for objective in (1, 2):
            j = objective - 1
            rows = self.measured_rows(state, objective)
            x = self.encoded[rows]
            y = state.values[rows, j]
            if self.kind == "gp":
                if self.gp_refresh_every and t >= 1 and t % self.gp_refresh_every == 0:
                    self.hypers[j] = select_gp_hyper(x, y)
                model = gp_fit(x, y, self.hypers[j])
                means[:, j], stds[:, j] = gp_predict_batch(model, self.encoded)
            else:
                model = rf_fit(x, y, tree_count=self.rf_trees, seed=self._rf_seed(objective, t))
                means[:, j], stds[:, j] = rf_predict_batch(model, self.encoded)
        return means, stds

    @staticmethod
    def measured_rows(state: OptimizerState, objective: int) -> np.ndarray:
        rows = np.flatnonzero(state.measured_mask[:, objective - 1])
        if len(rows) == 0:
            raise OptimizerError(f"no measurements yet for objective {objective}")
        return rows


def actual_front(state: OptimizerState) -> ParetoFront:
    """Non-dominated filter of the points measured on both objectives."""
    ids = np.flatnonzero(state.fully_measured)
    return front_of_points(state.values[ids], ids, kind="actual")


def _trace_hv(state: OptimizerState, hv_reference: tuple[float, float] | None) -> float | None:
    if hv_reference is None:
        return None
    front = actual_front(state)
    if len(front) == 0:
        return 0.0
    return hypervolume(front, hv_reference)


def _oracle_guarded(
    state: OptimizerState,
    method: str,
    checkpoint_dir: str | Path | None,
):
    """Decorator-ish helper: run a measurement, checkpointing on oracle failure."""

    def run(fn, *args):
        try:
            return fn(*args)
        except Exception:
            if checkpoint_dir is not None:
                write_checkpoint(state, method, checkpoint_dir)
            raise

    return run


def _initialize(
    state: OptimizerState,
    space: DesignSpace,
    objectives: tuple[ObjectiveSpec, ObjectiveSpec],
    oracle: ProblemOracle,
    costs: CostModel,
    init_k: int,
    seed: int,
    guard,
) -> None:
    if init_k < 1:
        raise OptimizerError(f"init_k must be >= 1, got {init_k}")
    for point in sample_random(space, init_k, seed):
        for objective in (1, 2):
            guard(state.measure, oracle, objectives, costs, point.flat_id, objective, 0)


def _build_state_of_world(
    regions, owners_all: np.ndarray, origin: tuple[float, float]
) -> tuple[np.ndarray, ParetoRegion, np.ndarray]:
    """Undominated filter, fronts and clipped volume for one iteration's regions."""
    undominated = undominated_set(regions)
    mask = np.zeros(len(owners_all), dtype=bool)
    mask[undominated] = True
    p_pess, p_opt = build_fronts(regions.subset(mask))
    volume = clipped_region_volume(p_pess, p_opt, origin)
    return undominated, ParetoRegion(p_pess, p_opt, volume), mask


def flexibo_run(
    space: DesignSpace,
    objectives: tuple[ObjectiveSpec, ObjectiveSpec],
    oracle: ProblemOracle,
    costs: CostModel,
    surrogate: str = "gp",
    T: int = 200,
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
    """Run the cost-aware decoupled loop for up to T iterations.

    Initialization measures ``init_k`` random points on both objectives. Every
    iteration then measures exactly one (point, objective) pair chosen by
    volume reduction per cost among the owners of the current fronts. The
    returned region reflects a final rebuild over all measurements.

    ``volume_origin`` fixes the translation origin for all region-volume
    areas; without it the running minimum of observed values is used.
    """
    if T < 1:
        raise OptimizerError(f"T must be >= 1, got {T}")
    method = f"flexibo-{surrogate}"
    state = OptimizerState.fresh(space.size, seed)
    guard = _oracle_guarded(state, method, checkpoint_dir)
    _initialize(state, space, objectives, oracle, costs, init_k, seed, guard)

    engine = SurrogateEngine(
        surrogate, space.encode_all(), seed, gp_refresh_every=gp_refresh_every, rf_trees=rf_trees
    )
    sched = BetaSchedule(n_objectives=2, space_size=space.size, delta=delta)
    owners_all = np.arange(space.size, dtype=np.int64)
    trace: list[dict[str, Any]] = []
    termination = "max_iterations"

    for t in range(1, T + 1):
        if cost_budget is not None and state.cum_cost > cost_budget:
            termination = "budget"
            break
        means, stds = engine.predict_all(state, t)
        means, stds = posterior_override(means, stds, state.measured_mask, state.values)
        regions = uncertainty_regions(owners_all, means, stds, beta(t, sched))
        origin = state.volume_origin(volume_origin)
        undominated, region, _ = _build_state_of_world(regions, owners_all, origin)
        state.t = t
        state.undominated = undominated
        state.region = region

        front_ids = np.union1d(region.p_pess.owners, region.p_opt.owners)
        candidate_ids = front_ids[~state.fully_measured[front_ids]]
        if len(candidate_ids) == 0:
            termination = "converged"
            break
        cmask = np.zeros(space.size, dtype=bool)
        cmask[candidate_ids] = True
        scores = volume_change_per_cost(regions.subset(cmask), region.volume, costs, origin)
        scores = [s for s in scores if not state.measured_mask[s.owner, s.objective - 1]]
        if not scores:
            termination = "converged"
            break
        flat_id, objective = select_next(scores)
        record = guard(state.measure, oracle, objectives, costs, flat_id, objective, t)
        trace.append(
            {
                "schema_version": SCHEMA_VERSION,
                "t": t,
                "flat_id": flat_id,
                "objective": objective,
                "value": record.value,
                "psi": record.psi,
                "cum_cost": state.cum_cost,
                "volume": region.volume,
                "hv_actual": _trace_hv(state, hv_reference),
            }
        )
        if checkpoint_dir is not None and t % CHECKPOINT_EVERY == 0:
            write_checkpoint(state, method, checkpoint_dir)

    # Final rebuild so the returned region reflects the last measurement.
    t_final = max(state.t, 1)
    means, stds = engine.predict_all(state, t_final)
    means, stds = posterior_override(means, stds, state.measured_mask, state.values)
    regions = uncertainty_regions(owners_all, means, stds, beta(t_final, sched))
    undominated, region, _ = _build_state_of_world(
        regions, owners_all, state.volume_origin(volume_origin)
    )
    state.undominated = undominated
    state.region = region
    if checkpoint_dir is not None:
        write_checkpoint(state, method, checkpoint_dir)

    return RunResult(
        method=method,
        objectives=objectives,
        records=state.records,
        trace=trace,
        front_actual=actual_front(state),
        region=region,
        total_cost=state.cum_cost,
        iterations_run=len(trace),
        termination=termination,
    )
