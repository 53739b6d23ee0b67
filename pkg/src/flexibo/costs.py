"""Per-objective evaluation costs and the evaluation ledger."""

from __future__ import annotations

from dataclasses import dataclass


class CostError(ValueError):
    """Invalid cost configuration."""


@dataclass(frozen=True)
class CostModel:
    """Normalized measurement costs derived from raw per-objective efforts.

    The cheapest objective (ties go to objective 1) costs exactly 1; any other
    objective i costs theta_i / (phi * theta_cheap). phi trades off how hard
    expensive measurements are penalized; configurations that would push a
    cost below 1 are rejected.
    """

    theta: tuple[float, float]
    phi: float = 1.0

    def __post_init__(self) -> None:
        if len(self.theta) != 2:
            raise CostError(f"exactly two efforts expected, got {self.theta}")
        if any(t <= 0 for t in self.theta):
            raise CostError(f"efforts must be positive, got {self.theta}")
        if self.phi <= 0:
            raise CostError(f"phi must be positive, got {self.phi}")
        for i in (1, 2):
            if self.psi(i) < 1.0:
                raise CostError(
                    f"derived cost for objective {i} is {self.psi(i)} < 1; phi too large"
                )

    @property
    def cheapest(self) -> int:
        """1-based index of the cheapest objective (ties -> objective 1)."""
        return 1 if self.theta[0] <= self.theta[1] else 2

    @property
    def most_expensive(self) -> int:
        """1-based index of the non-cheapest objective (ties -> objective 2)."""
        return 2 if self.cheapest == 1 else 1

    def psi(self, objective: int) -> float:
        if objective not in (1, 2):
            raise CostError(f"objective must be 1 or 2, got {objective}")
        if objective == self.cheapest:
            return 1.0
        return self.theta[objective - 1] / (self.phi * self.theta[self.cheapest - 1])

    @property
    def psis(self) -> tuple[float, float]:
        return (self.psi(1), self.psi(2))

    @property
    def joint(self) -> float:
        """Cost of measuring both objectives of one point."""
        return self.psi(1) + self.psi(2)


def psi(costs: CostModel, objective: int) -> float:
    """Normalized evaluation cost of one objective."""
    return costs.psi(objective)


@dataclass(frozen=True)
class EvaluationRecord:
    """One measurement: which point, which objective, what it cost.

    Values are stored in internal maximization orientation. There is at most
    one record per (flat_id, objective) pair in any run.
    """

    flat_id: int
    objective: int  # 1-based
    value: float
    psi: float
    t: int  # iteration; 0 for initialization measurements
    wall_ts: float
