"""Built-in synthetic bi-objective problems with asymmetric evaluation costs.

Each problem is a finite grid with two objective functions defined over the
encoded coordinates, raw per-objective efforts, and an optional analytically
known front. Measurement noise is off by default; when enabled, the oracle
draws from a per-(point, objective) seeded stream and pre-aggregates the
median of 10 draws, so repeated calls are identical within a run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .pareto import ParetoFront, dominates, front_of_points
from .space import DesignSpace, ObjectiveSpec, OptionDef


class ProblemError(ValueError):
    """Unknown problem name or inconsistent problem definition."""


def _grid(n: int) -> tuple[float, ...]:
    return tuple(round(i / (n - 1), 10) for i in range(n))


# Objective functions take encoded coordinate rows (N, m) and return (N,) raw
# values in the objective's declared direction. Module-level so problems stay
# picklable for the parallel runner.


def _concave_quality(x: np.ndarray) -> np.ndarray:
    # Cheap objective: carries the trim knob on top of the level trade-off.
    return x[:, 0] - 0.1 * (x[:, 1] - 0.5) ** 2


def _concave_efficiency(x: np.ndarray) -> np.ndarray:
    # Expensive objective: depends on the level only.
    return np.sqrt(np.clip(1.0 - x[:, 0] ** 2, 0.0, None))


def _convex_quality(x: np.ndarray) -> np.ndarray:
    return x[:, 0] - 0.08 * (x[:, 1] - 0.4) ** 2


def _convex_efficiency(x: np.ndarray) -> np.ndarray:
    return (1.0 - x[:, 0]) ** 2


def _cliff_throughput(x: np.ndarray) -> np.ndarray:
    # Only one setting of the third option avoids a sharp degradation.
    gain = np.where(np.abs(x[:, 2] - 4.0 / 6.0) < 1.0 / 12.0, 1.0, 0.18 + 0.12 * x[:, 2])
    return x[:, 0] * gain - 0.15 * (x[:, 1] - 0.6) ** 2


def _cliff_yield(x: np.ndarray) -> np.ndarray:
    return 1.0 - x[:, 0] ** 2 - 0.1 * (x[:, 1] - 0.4) ** 2


def _decoupled_power(x: np.ndarray) -> np.ndarray:
    # The second coordinate tunes power draw only.
    ripple = 0.55 + 0.45 * np.sin(np.pi * x[:, 1]) ** 2
    return 0.6 + 1.4 * x[:, 0] ** 2 * ripple


def _decoupled_score(x: np.ndarray) -> np.ndarray:
    return x[:, 0] * (1.15 - 0.15 * x[:, 0])


@dataclass(frozen=True)
class SyntheticProblem:
    """A grid problem: objective functions, efforts, optional known front."""

    name: str
    space: DesignSpace
    objectives: tuple[ObjectiveSpec, ObjectiveSpec]
    fns: tuple[Callable[[np.ndarray], np.ndarray], Callable[[np.ndarray], np.ndarray]]
    theta: tuple[float, float]
    noise_std: tuple[float, float] = (0.0, 0.0)
    description: str = ""
    analytic_front_ids: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.analytic_front_ids is not None:
            vals = self.internal_values_all()[list(self.analytic_front_ids)]
            for i in range(len(vals)):
                for j in range(len(vals)):
                    if i != j and dominates(vals[j], vals[i]) and np.any(vals[j] != vals[i]):
                        raise ProblemError(
                            f"{self.name}: analytic front point {i} is dominated"
                        )

    def raw_values_all(self) -> np.ndarray:
        """(|E|, 2) noise-free raw values, row per flat id."""
        enc = self.space.encode_all()
        return np.column_stack([fn(enc) for fn in self.fns])

    def internal_values_all(self) -> np.ndarray:
        raw = self.raw_values_all()
        signs = np.array([o.sign for o in self.objectives])
        return raw * signs

    def true_front(self) -> ParetoFront:
        """Exhaustive non-dominated filter over the whole grid (internal values)."""
        return front_of_points(self.internal_values_all(), kind="actual")

    def reference_point(self) -> tuple[float, float]:
        """Fixed per-problem hypervolume reference below all internal values."""
        vals = self.internal_values_all()
        lo = vals.min(axis=0)
        span = np.maximum(vals.max(axis=0) - lo, 1e-9)
        r = lo - 0.05 * span - 6.0 * np.asarray(self.noise_std)
        return float(r[0]), float(r[1])

    def oracle(self, seed: int, noise_std: tuple[float, float] | None = None) -> "SyntheticOracle":
        return SyntheticOracle(
            problem=self,
            seed=seed,
            noise_std=self.noise_std if noise_std is None else noise_std,
        )

    def with_noise(self, noise_std: tuple[float, float]) -> "SyntheticProblem":
        return SyntheticProblem(
            name=self.name,
            space=self.space,
            objectives=self.objectives,
            fns=self.fns,
            theta=self.theta,
            noise_std=noise_std,
            description=self.description,
            analytic_front_ids=self.analytic_front_ids,
        )


@dataclass(frozen=True)
class SyntheticOracle:
    """Deterministic measurement source for one seeded run."""

    problem: SyntheticProblem
    seed: int
    noise_std: tuple[float, float]

    def evaluate(self, flat_id: int, objective: int) -> tuple[float, float]:
        j = objective - 1
        point = self.problem.space.point(flat_id)
        enc = self.problem.space.encode(point).reshape(1, -1)
        value = float(self.problem.fns[j](enc)[0])
        std = self.noise_std[j]
        if std > 0.0:
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=self.seed, spawn_key=(flat_id, objective))
            )
            # Median of 10 repeated draws, mirroring a repeated-measurement protocol.
            value += float(np.median(rng.normal(0.0, std, size=10)))
        return value, self.problem.theta[j]


def _space(options: Sequence[tuple[str, Sequence[float]]]) -> DesignSpace:
    return DesignSpace(options=tuple(OptionDef(name=n, values=tuple(v)) for n, v in options))


def _concave_problem() -> SyntheticProblem:
    space = _space([("level", _grid(21)), ("trim", _grid(21))])
    # Closed-form front: trim at its optimum 0.5, every level value.
    front_ids = tuple(space.flat_id((i, 10)) for i in range(21))
    return SyntheticProblem(
        name="concave",
        space=space,
        objectives=(
            ObjectiveSpec("quality", "maximize"),
            ObjectiveSpec("efficiency", "maximize"),
        ),
        fns=(_concave_quality, _concave_efficiency),
        theta=(1.0, 10.0),
        description="smooth landscape with a concave quarter-circle front",
        analytic_front_ids=front_ids,
    )


def _convex_problem() -> SyntheticProblem:
    space = _space([("level", _grid(21)), ("trim", _grid(21))])
    front_ids = tuple(space.flat_id((i, 8)) for i in range(21))  # trim optimum 0.4
    return SyntheticProblem(
        name="convex",
        space=space,
        objectives=(
            ObjectiveSpec("quality", "maximize"),
            ObjectiveSpec("efficiency", "maximize"),
        ),
        fns=(_convex_quality, _convex_efficiency),
        theta=(1.0, 10.0),
        description="smooth landscape with a convex front",
        analytic_front_ids=front_ids,
    )


def _cliff_problem() -> SyntheticProblem:
    space = _space(
        [("level", _grid(21)), ("trim", _grid(11)), ("mode", tuple(range(7)))]
    )
    return SyntheticProblem(
        name="cliff",
        space=space,
        objectives=(
            ObjectiveSpec("throughput", "maximize"),
            ObjectiveSpec("yield", "maximize"),
        ),
        fns=(_cliff_throughput, _cliff_yield),
        theta=(1.0, 10.0),
        description="isolated good settings of one option; the rest fall off a cliff",
    )


def _decoupled_problem() -> SyntheticProblem:
    space = _space([("level", _grid(26)), ("freq", _grid(21))])
    return SyntheticProblem(
        name="decoupled",
        space=space,
        objectives=(
            ObjectiveSpec("power_draw", "minimize", unit="W"),
            ObjectiveSpec("task_score", "maximize"),
        ),
        fns=(_decoupled_power, _decoupled_score),
        theta=(1.0, 10.0),
        description="one option tunes only the cheap objective (power draw)",
    )


def builtin_problems() -> list[SyntheticProblem]:
    """The shipped problem suite, analytically verified where a front is known."""
    return [_concave_problem(), _convex_problem(), _cliff_problem(), _decoupled_problem()]


def get_problem(name: str) -> SyntheticProblem:
    for problem in builtin_problems():
        if problem.name == name:
            return problem
    known = ", ".join(p.name for p in builtin_problems())
    raise ProblemError(f"unknown problem {name!r}; available: {known}")
