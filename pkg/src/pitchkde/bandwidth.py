"""k-fold cross-validated bandwidth selection and geometric-mean pooling.

Folds come from one seeded shuffle followed by contiguous chunking, with the
remainder handed out one point per fold starting from the first.  The score
is the held-out log-likelihood averaged per point (not per fold).
Consecutive actions within a play are correlated; plain CV ignores that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, InsufficientDataError, InvalidArgumentError
from .kde import PointsLike, as_points


@dataclass(frozen=True)
class CvConfig:
    folds: int = 10
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if int(self.folds) != self.folds or self.folds < 2:
            raise InvalidArgumentError(f"folds must be an integer >= 2, got {self.folds}")


def default_candidate_grid() -> np.ndarray:
    """40 log-spaced bandwidths from 0.25 to 100 m^2."""
    return np.geomspace(0.25, 100.0, 40)


def candidate_grid(lo: float, hi: float, count: int) -> np.ndarray:
    return check_candidate_grid(np.geomspace(lo, hi, int(count)))


def check_candidate_grid(values) -> np.ndarray:
    grid = np.asarray(values, dtype=np.float64).ravel()
    if grid.size < 2:
        raise InvalidArgumentError("candidate grid needs at least two bandwidths")
    if not np.all(np.isfinite(grid)) or np.any(grid <= 0):
        raise InvalidArgumentError("candidate bandwidths must be positive and finite")
    if np.any(np.diff(grid) <= 0):
        raise InvalidArgumentError("candidate grid must be strictly increasing")
    return grid


def fold_indices(n: int, cfg: CvConfig) -> list[np.ndarray]:
    if n < cfg.folds:
        raise InsufficientDataError(f"{n} samples cannot fill {cfg.folds} folds")
    order = np.random.default_rng(cfg.seed).permutation(n) if cfg.shuffle else np.arange(n)
    # array_split puts the n % folds extra points in the leading folds
    return np.array_split(order, cfg.folds)


def cv_curve(samples: PointsLike, grid, cfg: CvConfig) -> np.ndarray:
    """Mean held-out log-likelihood per point (nats) for every bandwidth in ``grid``."""
    pts = as_points(samples)
    hs = np.asarray(grid, dtype=np.float64).ravel()
    if np.any(hs <= 0) or not np.all(np.isfinite(hs)):
        raise InvalidArgumentError("bandwidths must be positive and finite")
    n = len(pts)
    folds = fold_indices(n, cfg)
    total = np.zeros(len(hs))
    in_fold = np.zeros(n, dtype=bool)
    for held in folds:
        in_fold[:] = False
        in_fold[held] = True
        train = pts[~in_fold]
        test = pts[held]
        d2 = ((test[:, 0, None] - train[None, :, 0]) ** 2
              + (test[:, 1, None] - train[None, :, 1]) ** 2)
        d2_min = d2.min(axis=1)
        excess = d2 - d2_min[:, None]
        n_train = len(train)
        for k, h in enumerate(hs):
            s = np.exp(excess * (-0.5 / h)).sum(axis=1)
            logf = -d2_min / (2.0 * h) + np.log(s) - math.log(2.0 * math.pi * h * n_train)
            total[k] += logf.sum()
    return total / n


def cv_score(samples: PointsLike, h: float, cfg: CvConfig) -> float:
    return float(cv_curve(samples, [h], cfg)[0])


def argmax_prefer_larger(scores) -> int:
    scores = np.asarray(scores)
    best = np.max(scores)
    return int(np.flatnonzero(scores == best)[-1])


def select_bandwidth(samples: PointsLike, grid, cfg: CvConfig) -> float:
    grid = check_candidate_grid(grid)
    return float(grid[argmax_prefer_larger(cv_curve(samples, grid, cfg))])


def pool_geometric_mean(hs) -> float:
    vals = np.asarray(list(hs), dtype=np.float64)
    if vals.size == 0:
        raise EmptyInputError("no bandwidths to pool")
    if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        raise InvalidArgumentError("bandwidths must be positive and finite")
    out = math.exp(math.fsum(np.log(vals)) / vals.size)
    # keep exp(mean(log)) inside [min, max] despite rounding
    return float(min(max(out, vals.min()), vals.max()))
