from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DegenerateInputError, FloorTooAggressiveError, InvalidArgumentError
from ..kde import DensityGrid

DEFAULT_MASS_FLOOR = 1e-10
_MASS_TOL = 1e-12

NORMS = {"l1": 1.0, "l2": 2.0}


@dataclass(frozen=True)
class CostSpec:
    """Ground cost ||a - b||_norm_order ** p."""

    p: float = 1.0
    norm_order: float = 1.0

    def __post_init__(self):
        if not (self.p >= 1 and math.isfinite(self.p)):
            raise InvalidArgumentError(f"Wasserstein order p must be >= 1, got {self.p}")
        if not (self.norm_order >= 1 and math.isfinite(self.norm_order)):
            raise InvalidArgumentError(f"norm order must be >= 1, got {self.norm_order}")

    @classmethod
    def from_names(cls, p: float = 1.0, norm: str = "l1") -> "CostSpec":
        try:
            return cls(float(p), NORMS[norm.lower()])
        except KeyError:
            raise InvalidArgumentError(f"unknown norm {norm!r}; expected one of {sorted(NORMS)}") from None

    @property
    def norm_name(self) -> str:
        for name, q in NORMS.items():
            if q == self.norm_order:
                return name
        return f"l{self.norm_order:g}"

    def to_dict(self) -> dict:
        return {"p": self.p, "norm": self.norm_name}


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Probability mass on a finite set of points.

    ``cell_size`` is set when the support sits on a square lattice of that
    spacing (as produced by :func:`discretize`); solvers use it to pick
    lattice-specific fast paths.
    """

    support: np.ndarray
    mass: np.ndarray
    cell_size: Optional[float] = None

    def __post_init__(self):
        sup = np.ascontiguousarray(np.asarray(self.support, dtype=np.float64).reshape(-1, 2))
        mass = np.ascontiguousarray(np.asarray(self.mass, dtype=np.float64).ravel())
        if len(sup) != len(mass):
            raise InvalidArgumentError(f"support has {len(sup)} points but mass has {len(mass)} entries")
        if len(mass) == 0:
            raise DegenerateInputError("distribution has empty support")
        if not np.all(np.isfinite(sup)) or not np.all(np.isfinite(mass)):
            raise InvalidArgumentError("support and mass must be finite")
        if np.any(mass < 0):
            raise InvalidArgumentError("masses must be nonnegative")
        if abs(math.fsum(mass) - 1.0) > _MASS_TOL:
            raise InvalidArgumentError(f"masses sum to {math.fsum(mass)!r}, not 1")
        sup.setflags(write=False)
        mass.setflags(write=False)
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "mass", mass)

    def __len__(self) -> int:
        return len(self.mass)

    @classmethod
    def normalized(cls, support, weights, cell_size=None) -> "DiscreteDistribution":
        w = np.asarray(weights, dtype=np.float64).ravel()
        total = math.fsum(w)
        if not total > 0:
            raise DegenerateInputError("weights have no positive mass")
        return cls(support, w / total, cell_size)

    def shifted(self, t) -> "DiscreteDistribution":
        return DiscreteDistribution(self.support + np.asarray(t, dtype=float), self.mass, self.cell_size)


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Sparse coupling: ``mass[k]`` moves from ``source[k]`` to ``target[k]``."""

    source: np.ndarray
    target: np.ndarray
    mass: np.ndarray

    def __len__(self) -> int:
        return len(self.mass)

    def marginals(self, m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
        row = np.bincount(self.source, weights=self.mass, minlength=m)
        col = np.bincount(self.target, weights=self.mass, minlength=n)
        return row, col

    def total_cost(self, mu: DiscreteDistribution, nu: DiscreteDistribution, cost: CostSpec) -> float:
        c = pairwise_cost(mu.support[self.source], nu.support[self.target], cost, paired=True)
        return math.fsum(c * self.mass)

    def flows(self):
        return [(int(i), int(j), float(w)) for i, j, w in zip(self.source, self.target, self.mass)]


def ground_cost(a, b, cost: CostSpec = CostSpec()) -> float:
    dx = abs(float(a[0]) - float(b[0]))
    dy = abs(float(a[1]) - float(b[1]))
    q = cost.norm_order
    if q == 1.0:
        d = dx + dy
    elif q == 2.0:
        d = math.hypot(dx, dy)
    else:
        d = (dx**q + dy**q) ** (1.0 / q)
    return d**cost.p


def pairwise_cost(a: np.ndarray, b: np.ndarray, cost: CostSpec, paired: bool = False) -> np.ndarray:
    """Cost matrix between point sets, or row-wise costs when ``paired``."""
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    if paired:
        dx = np.abs(a[:, 0] - b[:, 0])
        dy = np.abs(a[:, 1] - b[:, 1])
    else:
        dx = np.abs(a[:, 0, None] - b[None, :, 0])
        dy = np.abs(a[:, 1, None] - b[None, :, 1])
    q = cost.norm_order
    if q == 1.0:
        d = dx + dy
    elif q == 2.0:
        d = np.hypot(dx, dy)
    else:
        d = (dx**q + dy**q) ** (1.0 / q)
    return d if cost.p == 1.0 else d**cost.p


def discretize(grid: DensityGrid, mass_floor: float = DEFAULT_MASS_FLOOR) -> DiscreteDistribution:
    """Cell masses (value x cell area) with negligible cells pruned.

    Cells whose normalised mass is below ``mass_floor`` are dropped and the
    rest renormalised.
    """
    vals = np.asarray(grid.values, dtype=np.float64)
    if np.any(vals < 0) or not np.all(np.isfinite(vals)):
        raise InvalidArgumentError("grid values must be finite and nonnegative")
    cell_mass = vals.ravel() * grid.spec.cell_area
    total = math.fsum(cell_mass)
    if not total > 0:
        raise DegenerateInputError("grid carries no mass")
    normed = cell_mass / total
    keep = normed >= mass_floor
    if not keep.any():
        raise FloorTooAggressiveError(
            f"mass_floor {mass_floor} removes every cell (largest cell mass {normed.max():.3g})"
        )
    centers = grid.spec.centers()[keep]
    return DiscreteDistribution.normalized(centers, cell_mass[keep], grid.spec.cell_size)


def median_cost(mu: DiscreteDistribution, nu: DiscreteDistribution, cost: CostSpec) -> float:
    return float(np.median(pairwise_cost(mu.support, nu.support, cost)))
