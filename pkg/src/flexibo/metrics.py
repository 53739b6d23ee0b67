"""Front quality metrics: contribution, diversity, volume reduction, cost totals.

Contribution compares a front against the surrogate of the true front (the
non-dominated union of all competing fronts); diversity counts how many cells
of a grid between the ideal and nadir points the front touches. Both live in
[0, 1]. All values are in internal maximization orientation, translated so the
reference point sits weakly below every front point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .costs import EvaluationRecord
from .pareto import ParetoFront, front_of_points, hypervolume


class MetricsError(ValueError):
    """Empty comparison set or degenerate grid bounds."""


# Fraction of the per-objective spread used to pad the reference point below
# the observed values, so single-point fronts never collapse to zero area.
REFERENCE_MARGIN = 0.01


def reference_point(fronts: list[ParetoFront]) -> tuple[float, float]:
    """Translated origin: componentwise minimum across fronts, padded by margin."""
    pts = [f.values for f in fronts if len(f) > 0]
    if not pts:
        raise MetricsError("no front points to derive a reference point from")
    allv = np.vstack(pts)
    lo = allv.min(axis=0)
    span = np.maximum(allv.max(axis=0) - lo, 1.0)
    r = lo - REFERENCE_MARGIN * span
    return float(r[0]), float(r[1])


@dataclass(frozen=True)
class ComparisonSet:
    """Competing fronts, their non-dominated union, and the shared reference."""

    fronts: dict[str, ParetoFront]
    reference: tuple[float, float]
    surrogate_true: ParetoFront = field(init=False)

    def __post_init__(self) -> None:
        if not self.fronts:
            raise MetricsError("a comparison needs at least one front")
        values = [f.values for f in self.fronts.values() if len(f) > 0]
        if not values:
            raise MetricsError("all competing fronts are empty")
        union = np.vstack(values)
        object.__setattr__(
            self, "surrogate_true", front_of_points(union, kind="actual")
        )
        for name, front in self.fronts.items():
            if len(front) and (
                np.any(front.values[:, 0] < self.reference[0])
                or np.any(front.values[:, 1] < self.reference[1])
            ):
                raise MetricsError(f"front {name!r} has points below the reference point")

    @classmethod
    def of(cls, fronts: dict[str, ParetoFront]) -> "ComparisonSet":
        return cls(fronts=dict(fronts), reference=reference_point(list(fronts.values())))


def _surviving_points(front: ParetoFront, surrogate_true: ParetoFront) -> np.ndarray:
    """Points of the front not dominated by any coordinate-distinct point of P_s."""
    if len(front) == 0:
        return np.empty((0, 2))
    ps = surrogate_true.values
    p = front.values
    dom = (ps[None, :, 0] >= p[:, None, 0]) & (ps[None, :, 1] >= p[:, None, 1])
    same = (ps[None, :, 0] == p[:, None, 0]) & (ps[None, :, 1] == p[:, None, 1])
    return p[~np.any(dom & ~same, axis=1)]


def contribution(front: ParetoFront, cmp: ComparisonSet) -> float:
    """Hypervolume share of the front's surviving points over the surrogate front.

    1 means the front is exactly the surrogate of the true front; 0 means all
    its points are dominated.
    """
    denom = hypervolume(cmp.surrogate_true, cmp.reference)
    if denom <= 0.0:
        raise MetricsError("surrogate true front has zero hypervolume")
    surviving = _surviving_points(front, cmp.surrogate_true)
    if len(surviving) == 0:
        return 0.0
    return hypervolume(front_of_points(surviving), cmp.reference) / denom


@dataclass(frozen=True)
class DiversityGrid:
    """Axis-aligned grid between the ideal and nadir points of a front set.

    Under maximization the ideal is the componentwise maximum and the nadir
    the componentwise minimum; the grid is oriented so the lower bound always
    sits below the upper bound, with the half-cell padding on the nadir side.
    """

    ideal: tuple[float, float]
    nadir: tuple[float, float]
    divisions: int = 10
    lower: tuple[float, float] = field(init=False)
    upper: tuple[float, float] = field(init=False)
    cell: tuple[float, float] = field(init=False)

    def __post_init__(self) -> None:
        if self.divisions < 1:
            raise MetricsError(f"divisions must be >= 1, got {self.divisions}")
        low, up = [], []
        for i in range(2):
            ip, npt = self.ideal[i], self.nadir[i]
            if ip == npt:
                raise MetricsError(f"degenerate grid bounds along objective {i + 1}")
            lo, hi = min(ip, npt), max(ip, npt)
            pad = (hi - lo) / (2 * self.divisions)
            # Half-cell padding beyond the nadir; the ideal side is the bound.
            if npt < ip:
                low.append(npt - pad)
                up.append(ip)
            else:
                low.append(ip)
                up.append(npt + pad)
        object.__setattr__(self, "lower", (low[0], low[1]))
        object.__setattr__(self, "upper", (up[0], up[1]))
        object.__setattr__(
            self,
            "cell",
            (
                (up[0] - low[0]) / self.divisions,
                (up[1] - low[1]) / self.divisions,
            ),
        )

    @classmethod
    def from_front(cls, front: ParetoFront, divisions: int = 10) -> "DiversityGrid":
        if len(front) == 0:
            raise MetricsError("cannot build a grid from an empty front")
        v = front.values
        return cls(
            ideal=(float(v[:, 0].max()), float(v[:, 1].max())),
            nadir=(float(v[:, 0].min()), float(v[:, 1].min())),
            divisions=divisions,
        )


def diversity(front: ParetoFront, grid: DiversityGrid) -> float:
    """Fraction of grid cells holding at least one front point."""
    if len(front) == 0:
        return 0.0
    div = grid.divisions
    cells = set()
    for o1, o2 in front.values:
        i = int(np.clip(np.floor((o1 - grid.lower[0]) / grid.cell[0]), 0, div - 1))
        j = int(np.clip(np.floor((o2 - grid.lower[1]) / grid.cell[1]), 0, div - 1))
        cells.add((i, j))
    return len(cells) / div**2


def volume_reduction(v_before: float, v_after: float) -> float:
    """Signed region-volume change across a query (negative if fronts loosened)."""
    return v_before - v_after


@dataclass(frozen=True)
class CostSummary:
    total: float
    count_objective_1: int
    count_objective_2: int

    @property
    def counts(self) -> tuple[int, int]:
        return (self.count_objective_1, self.count_objective_2)


def cost_summary(records: list[EvaluationRecord]) -> CostSummary:
    """Ledger totals: cumulative cost and per-objective measurement counts."""
    total = 0.0
    counts = [0, 0]
    for record in records:
        total += record.psi
        counts[record.objective - 1] += 1
    return CostSummary(total=total, count_objective_1=counts[0], count_objective_2=counts[1])
