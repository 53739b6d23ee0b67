"""Per-objective predictive models: Gaussian process and random forest.

Both models map encoded feature vectors in [0, 1]^m to a mean and an
uncertainty per query point. The GP is a zero-mean process with a squared
exponential kernel and per-dimension length-scales, solved through a cached
Cholesky factor with escalating diagonal jitter. The random forest wraps
scikit-learn regression trees; the forest mean is the plain average of the
per-tree predictions and the uncertainty is the population standard deviation
across trees, both accumulated tree by tree in a fixed order so an explicit
loop reproduces them bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from sklearn.ensemble import RandomForestRegressor

JITTER_START = 1e-10
JITTER_MAX = 1e-4


class SurrogateError(RuntimeError):
    """Degenerate kernel/hyperparameters or invalid query."""


class PointEstimate(NamedTuple):
    """Mean and standard deviation of one model at one query point."""

    mean: float
    std: float


@dataclass(frozen=True)
class SurrogatePrediction:
    """Per-objective posterior mean and standard deviation for one design point."""

    mean: tuple[float, float]
    std: tuple[float, float]

    def __post_init__(self) -> None:
        if any(s < 0 for s in self.std):
            raise SurrogateError(f"negative predictive std {self.std}")


@dataclass(frozen=True)
class GPHyper:
    """Squared-exponential kernel hyperparameters."""

    length_scales: tuple[float, ...]
    signal_variance: float = 1.0
    noise_variance: float = 1e-6

    @classmethod
    def default(cls, dims: int) -> "GPHyper":
        return cls(length_scales=(0.2,) * dims)


@dataclass(frozen=True)
class GaussianProcessModel:
    hyper: GPHyper
    train_x: np.ndarray  # (n, d)
    train_y: np.ndarray  # (n,)
    chol: np.ndarray  # lower Cholesky factor of K + (noise + jitter) I
    alpha: np.ndarray  # (K + (noise + jitter) I)^-1 y
    jitter: float


def _se_kernel(hyper: GPHyper, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ell = np.asarray(hyper.length_scales, dtype=float)
    diff = a[:, None, :] / ell - b[None, :, :] / ell
    return hyper.signal_variance * np.exp(-0.5 * np.sum(diff * diff, axis=2))


def _average_duplicates(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    uniq, inverse = np.unique(x, axis=0, return_inverse=True)
    if len(uniq) == len(x):
        return x, y
    sums = np.zeros(len(uniq))
    counts = np.zeros(len(uniq))
    np.add.at(sums, inverse, y)
    np.add.at(counts, inverse, 1.0)
    return uniq, sums / counts


def gp_fit(x: np.ndarray, y: np.ndarray, hyper: GPHyper | None = None) -> GaussianProcessModel:
    """Fit the GP posterior; duplicate input rows are collapsed by target averaging."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(x) != len(y) or len(y) == 0:
        raise SurrogateError(f"need matching non-empty inputs, got {len(x)} x {len(y)}")
    if hyper is None:
        hyper = GPHyper.default(x.shape[1])
    if len(hyper.length_scales) != x.shape[1]:
        raise SurrogateError(
            f"{len(hyper.length_scales)} length-scales for {x.shape[1]}-dim inputs"
        )
    x, y = _average_duplicates(x, y)

    gram = _se_kernel(hyper, x, x)
    gram[np.diag_indices_from(gram)] += hyper.noise_variance
    jitter = 0.0
    while True:
        try:
            chol = cholesky(
                gram + jitter * np.eye(len(gram)), lower=True, check_finite=False
            )
            break
        except np.linalg.LinAlgError:
            jitter = JITTER_START if jitter == 0.0 else jitter * 10.0
            if jitter > JITTER_MAX:
                raise SurrogateError(
                    f"Cholesky failed up to jitter {JITTER_MAX}; kernel is degenerate"
                ) from None
    tmp = solve_triangular(chol, y, lower=True, check_finite=False)
    alpha = solve_triangular(chol.T, tmp, lower=False, check_finite=False)
    return GaussianProcessModel(
        hyper=hyper, train_x=x, train_y=y, chol=chol, alpha=alpha, jitter=jitter
    )


def gp_predict_batch(model: GaussianProcessModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means and standard deviations at query rows."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.train_x.shape[1]:
        raise SurrogateError(
            f"query dimension {x.shape[1]} != training dimension {model.train_x.shape[1]}"
        )
    k_star = _se_kernel(model.hyper, model.train_x, x)
    mean = k_star.T @ model.alpha
    v = solve_triangular(model.chol, k_star, lower=True, check_finite=False)
    var = model.hyper.signal_variance - np.sum(v * v, axis=0)
    return mean, np.sqrt(np.maximum(var, 0.0))


def gp_predict(model: GaussianProcessModel, x: np.ndarray) -> PointEstimate:
    mean, std = gp_predict_batch(model, np.asarray(x, dtype=float).reshape(1, -1))
    return PointEstimate(mean=float(mean[0]), std=float(std[0]))


def gp_log_marginal_likelihood(model: GaussianProcessModel) -> float:
    n = len(model.train_y)
    return float(
        -0.5 * model.train_y @ model.alpha
        - np.sum(np.log(np.diag(model.chol)))
        - 0.5 * n * np.log(2.0 * np.pi)
    )


DEFAULT_LENGTH_SCALE_GRID = (0.05, 0.1, 0.2, 0.4, 0.8)


def select_gp_hyper(
    x: np.ndarray,
    y: np.ndarray,
    length_scale_grid: Sequence[float] = DEFAULT_LENGTH_SCALE_GRID,
    signal_variance: float = 1.0,
    noise_variance: float = 1e-6,
) -> GPHyper:
    """Grid search over isotropic length-scales by log marginal likelihood.

    Deterministic: the earliest grid entry wins ties; candidates whose fit
    fails are skipped.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    best: tuple[float, GPHyper] | None = None
    for ell in length_scale_grid:
        hyper = GPHyper(
            length_scales=(float(ell),) * x.shape[1],
            signal_variance=signal_variance,
            noise_variance=noise_variance,
        )
        try:
            model = gp_fit(x, y, hyper)
        except SurrogateError:
            continue
        lml = gp_log_marginal_likelihood(model)
        if best is None or lml > best[0]:
            best = (lml, hyper)
    if best is None:
        raise SurrogateError("all length-scale candidates failed to fit")
    return best[1]


@dataclass(frozen=True)
class RandomForestModel:
    tree_count: int
    seed: int
    trees: tuple  # fitted sklearn regression trees, in training order


def rf_fit(x: np.ndarray, y: np.ndarray, tree_count: int = 25, seed: int = 0) -> RandomForestModel:
    """Train `tree_count` regression trees on bootstrap resamples."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(x) != len(y) or len(y) == 0:
        raise SurrogateError(f"need matching non-empty inputs, got {len(x)} x {len(y)}")
    if tree_count < 1:
        raise SurrogateError(f"tree count must be >= 1, got {tree_count}")
    forest = RandomForestRegressor(
        n_estimators=tree_count,
        criterion="squared_error",
        min_samples_leaf=2,
        bootstrap=True,
        max_features=1.0,
        random_state=seed,
    )
    forest.fit(x, y)
    return RandomForestModel(tree_count=tree_count, seed=seed, trees=tuple(forest.estimators_))


def rf_predict_batch(model: RandomForestModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forest mean and population standard deviation across trees.

    Accumulates tree by tree in training order so that an explicit per-tree
    loop reproduces the result exactly.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.trees[0].n_features_in_:
        raise SurrogateError(
            f"query dimension {x.shape[1]} != training dimension {model.trees[0].n_features_in_}"
        )
    per_tree = [tree.predict(x) for tree in model.trees]
    total = np.zeros(len(x))
    for pred in per_tree:
        total = total + pred
    mean = total / model.tree_count
    sq = np.zeros(len(x))
    for pred in per_tree:
        diff = mean - pred
        sq = sq + diff * diff
    return mean, np.sqrt(sq / model.tree_count)


def rf_predict(model: RandomForestModel, x: np.ndarray) -> PointEstimate:
    mean, std = rf_predict_batch(model, np.asarray(x, dtype=float).reshape(1, -1))
    return PointEstimate(mean=float(mean[0]), std=float(std[0]))


def posterior_override(
    means: np.ndarray,
    stds: np.ndarray,
    measured_mask: np.ndarray,
    measured_values: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Pin measured (point, objective) pairs to their observed values.

    For every measured pair the mean becomes the measured value and the
    standard deviation 0, so the point's uncertainty interval collapses along
    that objective; unmeasured objectives keep the model prediction. Idempotent.
    """
    means = np.array(means, dtype=float, copy=True)
    stds = np.array(stds, dtype=float, copy=True)
    mask = np.asarray(measured_mask, dtype=bool)
    if means.shape != stds.shape or means.shape != mask.shape:
        raise SurrogateError("means, stds and mask must share one shape")
    means[mask] = np.asarray(measured_values, dtype=float)[mask]
    stds[mask] = 0.0
    return means, stds
