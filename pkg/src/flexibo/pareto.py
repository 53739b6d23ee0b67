"""Bi-objective dominance, Pareto fronts over uncertainty regions, staircase areas.

Everything here works in internal maximization orientation. An uncertainty
region is an axis-aligned rectangle [pess, opt] per design point; the
pessimistic front is built from worst-case corners (with a retention rule that
keeps points whose best case still reaches past the front), the optimistic
front from best-case corners. The volume between the two fronts measures the
remaining uncertainty about the true front.

Equal-valued corners of distinct owners are mutually retained so duplicated
optima are never silently dropped; front non-dominance therefore means no
entry is dominated by an entry with different coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np


class ParetoError(ValueError):
    """Invalid input to a front or area computation."""


@dataclass(frozen=True)
class UncertaintyRegion:
    """Axis-aligned rectangle of plausible objective values for one point."""

    owner: int
    pess: tuple[float, float]
    opt: tuple[float, float]

    def __post_init__(self) -> None:
        if not (self.pess[0] <= self.opt[0] and self.pess[1] <= self.opt[1]):
            raise ParetoError(
                f"region of point {self.owner}: pess {self.pess} exceeds opt {self.opt}"
            )


class Regions:
    """A batch of uncertainty regions backed by arrays (one row per point)."""

    __slots__ = ("owners", "pess", "opt")

    def __init__(self, owners: np.ndarray, pess: np.ndarray, opt: np.ndarray) -> None:
        self.owners = np.asarray(owners, dtype=np.int64)
        self.pess = np.asarray(pess, dtype=float)
        self.opt = np.asarray(opt, dtype=float)
        if self.pess.shape != (len(self.owners), 2) or self.opt.shape != self.pess.shape:
            raise ParetoError("regions need owners (n,), pess (n,2) and opt (n,2)")
        if np.any(self.pess > self.opt):
            bad = int(self.owners[np.argmax(np.any(self.pess > self.opt, axis=1))])
            raise ParetoError(f"region of point {bad}: pess exceeds opt")

    @classmethod
    def from_items(cls, items: Iterable[UncertaintyRegion]) -> "Regions":
        items = list(items)
        return cls(
            owners=np.array([r.owner for r in items], dtype=np.int64),
            pess=np.array([r.pess for r in items], dtype=float).reshape(len(items), 2),
            opt=np.array([r.opt for r in items], dtype=float).reshape(len(items), 2),
        )

    def __len__(self) -> int:
        return len(self.owners)

    def __getitem__(self, i: int) -> UncertaintyRegion:
        return UncertaintyRegion(
            owner=int(self.owners[i]),
            pess=(float(self.pess[i, 0]), float(self.pess[i, 1])),
            opt=(float(self.opt[i, 0]), float(self.opt[i, 1])),
        )

    def __iter__(self) -> Iterator[UncertaintyRegion]:
        return (self[i] for i in range(len(self)))

    def subset(self, mask: np.ndarray) -> "Regions":
        return Regions(self.owners[mask], self.pess[mask], self.opt[mask])

    def with_collapsed(self, row: int, objective: int, value: float) -> "Regions":
        """Copy with point `row`'s interval along `objective` (1-based) pinned to value."""
        pess = self.pess.copy()
        opt = self.opt.copy()
        pess[row, objective - 1] = value
        opt[row, objective - 1] = value
        return Regions(self.owners.copy(), pess, opt)


def as_regions(candidates: Regions | Iterable[UncertaintyRegion]) -> Regions:
    if isinstance(candidates, Regions):
        return candidates
    return Regions.from_items(candidates)


@dataclass(frozen=True)
class ParetoFront:
    """An ordered front: values (k, 2) and owner flat ids (k,).

    Entries are sorted descending by objective 1, then descending by
    objective 2, then ascending by owner id.
    """

    values: np.ndarray
    owners: np.ndarray
    kind: str  # "pessimistic" | "optimistic" | "actual"

    def __len__(self) -> int:
        return len(self.owners)

    def as_rows(self) -> list[tuple[int, float, float]]:
        """Serialization order: (flat_id, o1, o2) triples."""
        return [
            (int(o), float(v[0]), float(v[1])) for o, v in zip(self.owners, self.values)
        ]


@dataclass(frozen=True)
class ParetoRegion:
    """Pessimistic and optimistic fronts plus the enclosed volume."""

    p_pess: ParetoFront
    p_opt: ParetoFront
    volume: float


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """Weak dominance: a is at least as good as b in every objective."""
    return bool(a[0] >= b[0] and a[1] >= b[1])


def _sort_order(values: np.ndarray, owners: np.ndarray) -> np.ndarray:
    # lexsort: last key is primary
    return np.lexsort((owners, -values[:, 1], -values[:, 0]))


def _staircase_keep(values: np.ndarray, owners: np.ndarray) -> np.ndarray:
    """Boolean mask of entries on the non-dominated staircase.

    Scans descending by objective 1 and keeps entries whose objective-2 value
    exceeds the running maximum; entries whose coordinates equal an already
    kept corner are kept too (mutual-tie retention).
    """
    n = len(owners)
    keep = np.zeros(n, dtype=bool)
    if n == 0:
        return keep
    order = _sort_order(values, owners)
    sv = values[order]
    new_group = np.ones(n, dtype=bool)
    new_group[1:] = np.any(sv[1:] != sv[:-1], axis=1)
    group_idx = np.cumsum(new_group) - 1
    firsts = sv[new_group]
    run_max = np.full(len(firsts), -np.inf)
    if len(firsts) > 1:
        run_max[1:] = np.maximum.accumulate(firsts[:-1, 1])
    keep_first = firsts[:, 1] > run_max
    keep[order] = keep_first[group_idx]
    return keep


def _running_incumbent_level(values: np.ndarray, owners: np.ndarray) -> np.ndarray:
    """Per entry: the maximum objective-2 value among strictly earlier corners.

    "Earlier" means higher objective 1, or equal objective 1 with higher
    objective 2 (coordinate-distinct). This is the worst-case level of the
    incumbent that dominates the entry during the staircase sweep; -inf for
    entries nothing precedes.
    """
    n = len(owners)
    out = np.empty(n, dtype=float)
    if n == 0:
        return out
    order = _sort_order(values, owners)
    sv = values[order]
    new_group = np.ones(n, dtype=bool)
    new_group[1:] = np.any(sv[1:] != sv[:-1], axis=1)
    group_idx = np.cumsum(new_group) - 1
    firsts = sv[new_group]
    run_max = np.full(len(firsts), -np.inf)
    if len(firsts) > 1:
        run_max[1:] = np.maximum.accumulate(firsts[:-1, 1])
    out[order] = run_max[group_idx]
    return out


def undominated_set(candidates: Regions | Iterable[UncertaintyRegion]) -> np.ndarray:
    """Owner ids of points not ruled out by any other point.

    A point is excluded only when some other point's worst case dominates its
    best case, i.e. pess(x*) >= opt(x) componentwise, unless the only such x*
    are identical degenerate twins (mutual domination retains both). Returns
    owner ids sorted ascending.
    """
    r = as_regions(candidates)
    n = len(r)
    if n == 0:
        return np.empty(0, dtype=np.int64)

    # Existence of a weak dominator among all pessimistic corners, self included.
    order = np.lexsort((-r.pess[:, 1], -r.pess[:, 0]))
    sp1 = r.pess[order, 0]
    sp2_cummax = np.maximum.accumulate(r.pess[order, 1])
    pos = np.searchsorted(-sp1, -r.opt[:, 0], side="right")
    has_dom = (pos > 0) & (sp2_cummax[np.maximum(pos - 1, 0)] >= r.opt[:, 1])

    degenerate = np.all(r.pess == r.opt, axis=1)
    excluded = has_dom & ~degenerate  # self-domination requires a degenerate region

    # Degenerate flagged points: excluded only if some dominator is not an
    # identical degenerate twin.
    flagged = has_dom & degenerate
    if np.any(flagged):
        for v in np.unique(r.pess[flagged], axis=0):
            dominators = int(np.sum(np.all(r.pess >= v, axis=1)))
            twins = int(np.sum(degenerate & np.all(r.pess == v, axis=1)))
            if dominators > twins:
                excluded |= flagged & np.all(r.pess == v, axis=1)
    return np.sort(r.owners[~excluded])


def build_fronts(
    candidates: Regions | Iterable[UncertaintyRegion],
) -> tuple[ParetoFront, ParetoFront]:
    """(pessimistic, optimistic) fronts of a candidate set.

    The optimistic front is the staircase of non-dominated best-case corners.
    The pessimistic front is the staircase of non-dominated worst-case corners
    augmented with dominated candidates that still have the potential to reach
    past it: a dominated candidate is retained, with the dominated coordinate
    lifted to the incumbent's level, whenever its best case exceeds the
    incumbent's worst case along either objective. Lifted entries sit on the
    staircase boundary and never change its area; they only keep their owners
    eligible for sampling.
    """
    r = as_regions(candidates)
    if len(r) == 0:
        raise ParetoError("cannot build fronts from an empty candidate set")

    keep_opt = _staircase_keep(r.opt, r.owners)
    p_opt = _make_front(r.opt[keep_opt], r.owners[keep_opt], "optimistic")

    keep_base = _staircase_keep(r.pess, r.owners)
    values = [r.pess[keep_base]]
    owners = [r.owners[keep_base]]

    dominated = ~keep_base
    if np.any(dominated):
        # Sweep descending objective 1, lifting objective 2 to the incumbent.
        level2 = _running_incumbent_level(r.pess, r.owners)
        retain_a = dominated & (r.opt[:, 1] > level2)
        if np.any(retain_a):
            lifted = np.column_stack([r.pess[retain_a, 0], level2[retain_a]])
            values.append(lifted)
            owners.append(r.owners[retain_a])
        # Mirrored sweep descending objective 2, lifting objective 1.
        rest = dominated & ~retain_a
        if np.any(rest):
            level1 = _running_incumbent_level(r.pess[:, ::-1], r.owners)
            retain_b = rest & (r.opt[:, 0] > level1)
            if np.any(retain_b):
                lifted = np.column_stack([level1[retain_b], r.pess[retain_b, 1]])
                values.append(lifted)
                owners.append(r.owners[retain_b])

    p_pess = _make_front(np.vstack(values), np.concatenate(owners), "pessimistic")
    return p_pess, p_opt


def _make_front(values: np.ndarray, owners: np.ndarray, kind: str) -> ParetoFront:
    order = _sort_order(values, owners)
    v = values[order].copy()
    o = owners[order].copy()
    v.setflags(write=False)
    o.setflags(write=False)
    return ParetoFront(values=v, owners=o, kind=kind)


def front_of_points(
    values: np.ndarray, owners: np.ndarray | None = None, kind: str = "actual"
) -> ParetoFront:
    """Non-dominated filter of measured/known objective vectors."""
    values = np.asarray(values, dtype=float).reshape(-1, 2)
    if owners is None:
        owners = np.arange(len(values), dtype=np.int64)
    owners = np.asarray(owners, dtype=np.int64)
    keep = _staircase_keep(values, owners)
    return _make_front(values[keep], owners[keep], kind)


def staircase_area(front: ParetoFront | np.ndarray, origin: Sequence[float]) -> float:
    """Exact area dominated by a front above an origin (union of rectangles).

    Computed by a single descending sweep over objective 1. Every front point
    must lie at or above the origin in both objectives; a point below it
    signals a mis-ingested direction or a bad translation.
    """
    values = front.values if isinstance(front, ParetoFront) else np.asarray(front, dtype=float)
    values = values.reshape(-1, 2)
    if len(values) == 0:
        return 0.0
    ox, oy = float(origin[0]), float(origin[1])
    if np.any(values[:, 0] < ox) or np.any(values[:, 1] < oy):
        raise ParetoError(f"front point below origin ({ox}, {oy})")
    order = np.lexsort((-values[:, 1], -values[:, 0]))
    sv = values[order]
    area = 0.0
    y = oy
    for x1, x2 in sv:
        if x2 > y:
            area += (x1 - ox) * (x2 - y)
            y = x2
    return float(area)


def hypervolume(front: ParetoFront | np.ndarray, reference: Sequence[float]) -> float:
    """Hypervolume indicator of a front with respect to a reference point."""
    return staircase_area(front, reference)


def clipped_staircase_area(
    front: ParetoFront | np.ndarray, origin: Sequence[float]
) -> float:
    """Dominated area intersected with the quadrant above the origin.

    Unlike ``staircase_area`` this never rejects points below the origin:
    the dominated region is defined only above it, so such points contribute
    the (possibly empty) part of their quadrant that clears the origin. Used
    for region volumes of uncertainty corners, which may dip below any
    origin anchored at observed values.
    """
    values = front.values if isinstance(front, ParetoFront) else np.asarray(front, dtype=float)
    return staircase_area(np.maximum(values.reshape(-1, 2), np.asarray(origin, dtype=float)), origin)


def region_volume(
    p_pess: ParetoFront, p_opt: ParetoFront, origin: Sequence[float] = (0.0, 0.0)
) -> float:
    """Volume between the fronts: area(optimistic) - area(pessimistic), >= 0."""
    return float(max(staircase_area(p_opt, origin) - staircase_area(p_pess, origin), 0.0))


def clipped_region_volume(
    p_pess: ParetoFront, p_opt: ParetoFront, origin: Sequence[float]
) -> float:
    """Region volume within the quadrant above an observed-value origin."""
    return float(
        max(clipped_staircase_area(p_opt, origin) - clipped_staircase_area(p_pess, origin), 0.0)
    )


def pareto_region(
    candidates: Regions | Iterable[UncertaintyRegion], origin: Sequence[float] = (0.0, 0.0)
) -> ParetoRegion:
    """Build both fronts from a candidate set and compute the enclosed volume."""
    p_pess, p_opt = build_fronts(candidates)
    return ParetoRegion(
        p_pess=p_pess, p_opt=p_opt, volume=region_volume(p_pess, p_opt, origin)
    )
