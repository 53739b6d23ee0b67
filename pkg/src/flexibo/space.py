"""Finite discrete design spaces: options, enumeration, encoding, ingestion.

A design space is the cross product of a fixed list of options, each with a
finite ordered value list. Every point has a stable flat id obtained by
mixed-radix encoding of its per-option value indices (last option varies
fastest, matching ``numpy.unravel_index`` C order). Flat ids are the external
identifier of a point in all result files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from numbers import Real
from typing import Any

import numpy as np
import yaml

DEFAULT_MAX_POINTS = 100_000


class SpaceError(ValueError):
    """Malformed design-space definition, config document, or invalid point."""


@dataclass(frozen=True)
class OptionDef:
    """One configuration option with a finite, ordered list of values.

    Values are either all numeric (encoded by min-max scaling) or all
    categorical labels (encoded by normalized index).
    """

    name: str
    values: tuple[Any, ...]

    def __post_init__(self) -> None:
        if not self.name or not isinstance(self.name, str):
            raise SpaceError(f"option name must be a non-empty string, got {self.name!r}")
        if len(self.values) == 0:
            raise SpaceError(f"option {self.name!r} has an empty value list")
        if len(set(self.values)) != len(self.values):
            raise SpaceError(f"option {self.name!r} has duplicate values")
        kinds = {isinstance(v, Real) and not isinstance(v, bool) for v in self.values}
        if len(kinds) > 1:
            raise SpaceError(f"option {self.name!r} mixes numeric and categorical values")

    @property
    def cardinality(self) -> int:
        return len(self.values)

    @property
    def is_numeric(self) -> bool:
        v = self.values[0]
        return isinstance(v, Real) and not isinstance(v, bool)

    def encode_index(self, index: int) -> float:
        """Map a value index to [0, 1].

        Numeric options scale the value min-max over the declared values;
        categorical options use index/(cardinality-1). Single-value options
        map to 0.
        """
        if not 0 <= index < self.cardinality:
            raise SpaceError(f"index {index} out of range for option {self.name!r}")
        if self.cardinality == 1:
            return 0.0
        if self.is_numeric:
            lo = min(self.values)
            hi = max(self.values)
            return (float(self.values[index]) - lo) / (hi - lo)
        return index / (self.cardinality - 1)


@dataclass(frozen=True)
class DesignPoint:
    """A point of the space: per-option value indices plus its flat id."""

    indices: tuple[int, ...]
    flat_id: int


@dataclass(frozen=True)
class ObjectiveSpec:
    """Name, optimization direction, and unit of one objective.

    Internally every objective is maximized: values of a minimize objective
    are negated at ingestion and un-negated when reported back.
    """

    name: str
    direction: str = "maximize"
    unit: str = ""

    def __post_init__(self) -> None:
        if self.direction not in ("maximize", "minimize"):
            raise SpaceError(f"objective {self.name!r}: direction must be maximize or minimize")

    @property
    def sign(self) -> float:
        return -1.0 if self.direction == "minimize" else 1.0

    def to_internal(self, raw: float) -> float:
        return self.sign * raw

    def to_reported(self, internal: float) -> float:
        return self.sign * internal


@dataclass(frozen=True)
class DesignSpace:
    """Fully enumerable grid over a tuple of options.

    The whole space must fit in memory; construction fails loudly above
    ``max_points``.
    """

    options: tuple[OptionDef, ...]
    max_points: int = DEFAULT_MAX_POINTS

    def __post_init__(self) -> None:
        if len(self.options) == 0:
            raise SpaceError("design space needs at least one option")
        names = [o.name for o in self.options]
        if len(set(names)) != len(names):
            raise SpaceError(f"duplicate option names: {names}")
        if self.size > self.max_points:
            raise SpaceError(
                f"design space has {self.size} points, above the cap of {self.max_points}"
            )

    @property
    def m(self) -> int:
        return len(self.options)

    @property
    def size(self) -> int:
        n = 1
        for o in self.options:
            n *= o.cardinality
        return n

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(o.cardinality for o in self.options)

    def flat_id(self, indices: tuple[int, ...] | list[int]) -> int:
        if len(indices) != self.m:
            raise SpaceError(f"expected {self.m} indices, got {len(indices)}")
        fid = 0
        for idx, opt in zip(indices, self.options):
            if not 0 <= idx < opt.cardinality:
                raise SpaceError(f"index {idx} out of range for option {opt.name!r}")
            fid = fid * opt.cardinality + idx
        return fid

    def point(self, flat_id: int) -> DesignPoint:
        if not 0 <= flat_id < self.size:
            raise SpaceError(f"flat id {flat_id} out of range [0, {self.size})")
        rem = flat_id
        rev: list[int] = []
        for opt in reversed(self.options):
            rem, idx = divmod(rem, opt.cardinality)
            rev.append(idx)
        return DesignPoint(indices=tuple(reversed(rev)), flat_id=flat_id)

    def values_at(self, flat_id: int) -> dict[str, Any]:
        pt = self.point(flat_id)
        return {o.name: o.values[i] for o, i in zip(self.options, pt.indices)}

    def encode(self, point: DesignPoint) -> np.ndarray:
        """Feature vector in [0, 1]^m for one point."""
        if point.flat_id != self.flat_id(point.indices):
            raise SpaceError(f"point {point} is inconsistent with this space")
        return np.array(
            [o.encode_index(i) for o, i in zip(self.options, point.indices)], dtype=float
        )

    def encode_all(self) -> np.ndarray:
        """(size, m) matrix of feature vectors, row i for flat id i."""
        per_option = [
            np.array([o.encode_index(i) for i in range(o.cardinality)]) for o in self.options
        ]
        grids = np.meshgrid(*per_option, indexing="ij")
        return np.stack([g.reshape(-1) for g in grids], axis=1)


def sample_random(space: DesignSpace, k: int, seed: int) -> list[DesignPoint]:
    """k distinct points, deterministic for a given seed."""
    if k < 0:
        raise SpaceError(f"k must be >= 0, got {k}")
    if k > space.size:
        raise SpaceError(f"cannot sample {k} distinct points from a space of {space.size}")
    rng = np.random.default_rng(seed)
    ids = rng.choice(space.size, size=k, replace=False)
    return [space.point(int(i)) for i in ids]


_ALLOWED_TOP_KEYS = {"options", "objectives", "costs", "optimizer"}


@dataclass(frozen=True)
class SpaceConfig:
    """Parsed configuration document: space, objectives, raw cost/optimizer sections."""

    space: DesignSpace
    objectives: tuple[ObjectiveSpec, ObjectiveSpec]
    theta: tuple[float, float] | None = None
    phi: float | None = None
    optimizer: dict[str, Any] = field(default_factory=dict)


def _parse_objective(entry: Any, position: int) -> ObjectiveSpec:
    if isinstance(entry, str):
        return ObjectiveSpec(name=entry)
    if isinstance(entry, dict):
        unknown = set(entry) - {"name", "direction", "unit"}
        if unknown:
            raise SpaceError(f"objective #{position}: unknown keys {sorted(unknown)}")
        if "name" not in entry:
            raise SpaceError(f"objective #{position}: missing name")
        return ObjectiveSpec(
            name=str(entry["name"]),
            direction=str(entry.get("direction", "maximize")),
            unit=str(entry.get("unit", "")),
        )
    raise SpaceError(f"objective #{position}: expected a name or a mapping, got {entry!r}")


def parse_space(config_text: str, max_points: int = DEFAULT_MAX_POINTS) -> SpaceConfig:
    """Parse a YAML configuration document into a validated space and objectives.

    Top-level keys: ``options`` (mapping name -> value list, required),
    ``objectives`` (exactly two, required), ``costs`` and ``optimizer``
    (optional). Anything else is rejected.
    """
    try:
        doc = yaml.safe_load(config_text)
    except yaml.YAMLError as exc:
        raise SpaceError(f"malformed document: {exc}") from exc
    if not isinstance(doc, dict):
        raise SpaceError("malformed document: expected a top-level mapping")
    unknown = set(doc) - _ALLOWED_TOP_KEYS
    if unknown:
        raise SpaceError(f"unknown top-level keys: {sorted(unknown)}")

    raw_options = doc.get("options")
    if not isinstance(raw_options, dict) or not raw_options:
        raise SpaceError("config must declare at least one option under 'options'")
    options = []
    for name, values in raw_options.items():
        if not isinstance(values, (list, tuple)):
            raise SpaceError(f"option {name!r}: values must be a list")
        options.append(OptionDef(name=str(name), values=tuple(values)))
    space = DesignSpace(options=tuple(options), max_points=max_points)

    raw_objectives = doc.get("objectives")
    if not isinstance(raw_objectives, (list, tuple)):
        raise SpaceError("config must declare objectives as a list")
    if len(raw_objectives) != 2:
        raise SpaceError(
            f"exactly 2 objectives are supported, got {len(raw_objectives)}"
        )
    objectives = tuple(_parse_objective(e, i + 1) for i, e in enumerate(raw_objectives))
    if objectives[0].name == objectives[1].name:
        raise SpaceError(f"duplicate objective name {objectives[0].name!r}")

    theta: tuple[float, float] | None = None
    phi: float | None = None
    raw_costs = doc.get("costs")
    if raw_costs is not None:
        if not isinstance(raw_costs, dict):
            raise SpaceError("'costs' must be a mapping")
        unknown = set(raw_costs) - {"theta", "phi"}
        if unknown:
            raise SpaceError(f"'costs': unknown keys {sorted(unknown)}")
        raw_theta = raw_costs.get("theta")
        if raw_theta is not None:
            if isinstance(raw_theta, dict):
                try:
                    theta = tuple(float(raw_theta[o.name]) for o in objectives)
                except KeyError as exc:
                    raise SpaceError(f"'costs.theta' missing objective {exc}") from exc
            elif isinstance(raw_theta, (list, tuple)) and len(raw_theta) == 2:
                theta = (float(raw_theta[0]), float(raw_theta[1]))
            else:
                raise SpaceError("'costs.theta' must map objective names or list two values")
        if "phi" in raw_costs:
            phi = float(raw_costs["phi"])

    raw_optimizer = doc.get("optimizer") or {}
    if not isinstance(raw_optimizer, dict):
        raise SpaceError("'optimizer' must be a mapping")

    return SpaceConfig(
        space=space, objectives=objectives, theta=theta, phi=phi, optimizer=dict(raw_optimizer)
    )
