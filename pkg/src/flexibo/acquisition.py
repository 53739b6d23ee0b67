"""Uncertainty scaling, per-point regions, and volume-change-per-cost scoring.

Each iteration every design point gets an axis-aligned uncertainty rectangle
mean +/- sqrt(beta_t) * std. Candidates on the pessimistic or optimistic front
are scored per objective by how much the region volume would shrink if that
objective were pinned to the interval midpoint, divided by the objective's
evaluation cost; the best (point, objective) pair is measured next.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .costs import CostModel
from .pareto import (
    Regions,
    UncertaintyRegion,
    as_regions,
    build_fronts,
    region_volume,
)


class AcquisitionError(ValueError):
    """Pathological schedule parameters or an empty score list."""


@dataclass(frozen=True)
class BetaSchedule:
    """Confidence scaling schedule for the uncertainty regions.

    beta grows logarithmically with the iteration count, the design-space size
    and the objective count; delta is the confidence parameter.
    """

    n_objectives: int
    space_size: int
    delta: float = 0.05

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise AcquisitionError(f"delta must be in (0, 1), got {self.delta}")
        if self.n_objectives < 1 or self.space_size < 1:
            raise AcquisitionError("objective count and space size must be >= 1")


def beta(t: int, sched: BetaSchedule) -> float:
    """Scaling value at iteration t >= 1 (natural logarithm)."""
    if t < 1:
        raise AcquisitionError(f"iteration must be >= 1, got {t}")
    arg = sched.n_objectives * sched.space_size * math.pi**2 * t**2 / (6.0 * sched.delta)
    if arg <= 1.0:
        raise AcquisitionError(
            f"log argument {arg} <= 1; delta or space size is pathological"
        )
    return math.sqrt(2.0 * math.log(arg)) / 3.0


def uncertainty_regions(
    owners: np.ndarray, means: np.ndarray, stds: np.ndarray, beta_t: float
) -> Regions:
    """Rectangles [mean - sqrt(beta) std, mean + sqrt(beta) std] per point.

    Measured coordinates carry std 0 and collapse to segments or points.
    """
    if beta_t <= 0.0:
        raise AcquisitionError(f"beta must be positive, got {beta_t}")
    means = np.asarray(means, dtype=float)
    stds = np.asarray(stds, dtype=float)
    half = math.sqrt(beta_t) * stds
    return Regions(owners=np.asarray(owners), pess=means - half, opt=means + half)


@dataclass(frozen=True)
class AcquisitionScore:
    """Volume reduction per unit cost of measuring one objective of one point."""

    owner: int
    objective: int  # 1-based
    delta_v: float
    cost: float
    score: float


class _SortedCorners:
    """Corner set presorted by descending objective 1, for one-row edits.

    Corners are clipped into the quadrant above the origin (the dominated
    region is only defined there). The area is invariant to how objective-2
    ties are ordered, so a single descending sort over objective 1 supports
    exact area recomputation after pinning one corner's coordinate.
    """

    def __init__(self, corners: np.ndarray, origin: Sequence[float]) -> None:
        self.ox = float(origin[0])
        self.oy = float(origin[1])
        clipped = np.maximum(corners, [self.ox, self.oy])
        order = np.argsort(-clipped[:, 0], kind="stable")
        self.xs = clipped[order, 0]
        self.ys = clipped[order, 1]
        self.pos_of_row = np.empty(len(corners), dtype=np.int64)
        self.pos_of_row[order] = np.arange(len(corners))

    def area(self) -> float:
        return _area_desc_sorted(self.xs, self.ys, self.ox, self.oy)

    def area_with_edit(self, row: int, objective: int, value: float) -> float:
        """Area after setting one corner's coordinate to `value`."""
        pos = self.pos_of_row[row]
        if objective == 2:
            ys = self.ys.copy()
            ys[pos] = max(value, self.oy)
            return _area_desc_sorted(self.xs, ys, self.ox, self.oy)
        value = max(value, self.ox)
        xs = np.delete(self.xs, pos)
        ys = np.delete(self.ys, pos)
        insert_at = np.searchsorted(-xs, -value)
        xs = np.insert(xs, insert_at, value)
        ys = np.insert(ys, insert_at, self.ys[pos])
        return _area_desc_sorted(xs, ys, self.ox, self.oy)


def _area_desc_sorted(xs: np.ndarray, ys: np.ndarray, ox: float, oy: float) -> float:
    """Dominated area of corners already sorted descending by objective 1."""
    if len(xs) == 0:
        return 0.0
    prev = np.maximum.accumulate(np.concatenate(([oy], ys)))[:-1]
    return float(np.sum((xs - ox) * np.maximum(ys - prev, 0.0)))


def volume_change_per_cost(
    candidates: Regions | Iterable[UncertaintyRegion],
    current_volume: float,
    costs: CostModel,
    origin: Sequence[float] = (0.0, 0.0),
) -> list[AcquisitionScore]:
    """Score every (candidate, objective) pair by volume reduction per cost.

    For each pair the candidate's interval along that objective is collapsed
    to its midpoint, the fronts are rebuilt over the cloned candidate set and
    the volume recomputed; the reduction (clamped at 0) is divided by the
    objective's cost. Returns all 2 * len(candidates) scores.

    Rebuilding only ever moves the edited corner, and retention lifts never
    change front areas, so each rebuilt volume is computed from the presorted
    corner sets directly.
    """
    regions = as_regions(candidates)
    opt_corners = _SortedCorners(regions.opt, origin)
    pess_corners = _SortedCorners(regions.pess, origin)
    # Reductions below float-association noise are snapped to exactly zero so
    # candidates that cannot change the fronts never outrank the tie-breaks.
    snap = 1e-12 * max(1.0, abs(current_volume))
    scores: list[AcquisitionScore] = []
    for row in range(len(regions)):
        for objective in (1, 2):
            j = objective - 1
            midpoint = (regions.pess[row, j] + regions.opt[row, j]) / 2.0
            v_q = max(
                opt_corners.area_with_edit(row, objective, midpoint)
                - pess_corners.area_with_edit(row, objective, midpoint),
                0.0,
            )
            delta_v = max(current_volume - v_q, 0.0)
            if delta_v < snap:
                delta_v = 0.0
            cost = costs.psi(objective)
            scores.append(
                AcquisitionScore(
                    owner=int(regions.owners[row]),
                    objective=objective,
                    delta_v=delta_v,
                    cost=cost,
                    score=delta_v / cost,
                )
            )
    return scores


def select_next(scores: list[AcquisitionScore]) -> tuple[int, int]:
    """(flat_id, objective) with the maximal score.

    Ties go to the lower cost, then the lower flat id, then objective 1. An
    empty list signals an exhausted or degenerate state.
    """
    if not scores:
        raise AcquisitionError("no acquisition scores; state is exhausted or degenerate")
    best = min(scores, key=lambda s: (-s.score, s.cost, s.owner, s.objective))
    return best.owner, best.objective
