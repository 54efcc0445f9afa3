"""Fixed-bandwidth bivariate Gaussian KDE and lattice evaluation.

The bandwidth ``h`` is a variance-scale constant (m^2): the kernel is

    K_h(d) = exp(-|d|^2 / (2h)) / (2 pi h)

so ``sqrt(h)`` is the per-axis standard deviation.  No boundary correction is
applied; a fitted density leaks mass past the touchlines and that mass is
kept when integrating over a padded grid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .errors import EmptyInputError, InvalidArgumentError

PITCH_X = (0.0, 70.0)
PITCH_Y = (-10.0, 110.0)

# Chunk of samples folded into one matrix product in evaluate_grid.
_GRID_CHUNK = 16384


def _check_bandwidth(h: float) -> float:
    h = float(h)
    if not math.isfinite(h) or h <= 0:
        raise InvalidArgumentError(f"bandwidth must be a positive finite number, got {h!r}")
    return h


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Ordered event locations, shape (n, 2), columns (x, y) in meters.

    Pitch bounds are enforced unless ``enforce_pitch`` is False, which is
    useful for synthetic geometry that lives off the rugby pitch.
    """

    points: np.ndarray
    label: str = ""
    enforce_pitch: bool = field(default=True, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1 and pts.size == 0:
            pts = pts.reshape(0, 2)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InvalidArgumentError(f"points must have shape (n, 2), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidArgumentError("points must be finite")
        if self.enforce_pitch and len(pts):
            x, y = pts[:, 0], pts[:, 1]
            bad = (x < PITCH_X[0]) | (x > PITCH_X[1]) | (y < PITCH_Y[0]) | (y > PITCH_Y[1])
            if bad.any():
                i = int(np.flatnonzero(bad)[0])
                raise InvalidArgumentError(
                    f"point {i} at ({x[i]}, {y[i]}) lies outside x in {PITCH_X}, y in {PITCH_Y}"
                )
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]


PointsLike = Union[SampleSet, np.ndarray, Iterable]


def as_points(samples: PointsLike) -> np.ndarray:
    if isinstance(samples, SampleSet):
        return samples.points
    return SampleSet(samples, enforce_pitch=False).points


@dataclass(frozen=True, eq=False)
class DensityModel:
    samples: SampleSet
    bandwidth: float

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def points(self) -> np.ndarray:
        return self.samples.points


@dataclass(frozen=True)
class GridSpec:
    """Regular lattice of square cells; values live at the cell centers."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    cell_size: float

    def __post_init__(self):
        vals = (self.x_min, self.x_max, self.y_min, self.y_max, self.cell_size)
        if not all(math.isfinite(float(v)) for v in vals):
            raise InvalidArgumentError("grid bounds must be finite")
        if not self.x_max > self.x_min or not self.y_max > self.y_min:
            raise InvalidArgumentError(f"degenerate grid extent: {self}")
        if not self.cell_size > 0:
            raise InvalidArgumentError(f"cell_size must be positive, got {self.cell_size}")

    @property
    def cols(self) -> int:
        return max(1, math.ceil((self.x_max - self.x_min) / self.cell_size - 1e-9))

    @property
    def rows(self) -> int:
        return max(1, math.ceil((self.y_max - self.y_min) / self.cell_size - 1e-9))

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def cell_area(self) -> float:
        return self.cell_size * self.cell_size

    def x_centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.cols) + 0.5) * self.cell_size

    def y_centers(self) -> np.ndarray:
        return self.y_min + (np.arange(self.rows) + 0.5) * self.cell_size

    def centers(self) -> np.ndarray:
        """All cell centers, row-major (row index follows y), shape (rows*cols, 2)."""
        xx, yy = np.meshgrid(self.x_centers(), self.y_centers())
        return np.column_stack([xx.ravel(), yy.ravel()])

    @classmethod
    def around(cls, points: np.ndarray, pad: float, cell_size: float) -> "GridSpec":
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        lo = pts.min(axis=0) - pad
        hi = pts.max(axis=0) + pad
        return cls(float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]), cell_size)

    def to_dict(self) -> dict:
        return {
            "x_min": self.x_min,
            "x_max": self.x_max,
            "y_min": self.y_min,
            "y_max": self.y_max,
            "cell_size": self.cell_size,
        }


# Padded pitch used for analysis: 10 m either side of the touchlines and
# beyond each dead-ball line.
PADDED_PITCH = dict(x_min=-10.0, x_max=80.0, y_min=-20.0, y_max=120.0)
TRANSPORT_GRID = GridSpec(**PADDED_PITCH, cell_size=2.0)
RENDER_GRID = GridSpec(**PADDED_PITCH, cell_size=1.0)


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """Densities (per m^2) at cell centers; ``values[r, c]`` has y index r, x index c.

    ``signed`` grids (differences of densities) may hold negative values.
    """

    spec: GridSpec
    values: np.ndarray
    signed: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.spec.shape:
            raise InvalidArgumentError(f"values shape {vals.shape} does not match grid {self.spec.shape}")
        if not np.all(np.isfinite(vals)):
            raise InvalidArgumentError("grid values must be finite")
        if not self.signed and np.any(vals < 0):
            raise InvalidArgumentError("density values must be nonnegative")
        object.__setattr__(self, "values", vals)

    def integral(self) -> float:
        return float(self.values.sum() * self.spec.cell_area)

    def to_dict(self) -> dict:
        d = self.spec.to_dict()
        d["rows"], d["cols"] = self.spec.shape
        d["values"] = [float(v) for v in self.values.ravel()]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DensityGrid":
        spec = GridSpec(d["x_min"], d["x_max"], d["y_min"], d["y_max"], d["cell_size"])
        if (d["rows"], d["cols"]) != spec.shape:
            raise InvalidArgumentError(
                f"rows/cols {(d['rows'], d['cols'])} inconsistent with extent {spec.shape}"
            )
        vals = np.asarray(d["values"], dtype=np.float64).reshape(spec.shape)
        return cls(spec, vals)

    def save(self, path) -> None:
        # repr-based floats round-trip exactly (17 significant digits at most)
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "DensityGrid":
        return cls.from_dict(json.loads(Path(path).read_text()))


def kernel_value(delta, h: float) -> float:
    """Standard bivariate normal kernel with variance-scale bandwidth h."""
    h = _check_bandwidth(h)
    dx, dy = (float(v) for v in delta)
    if not (math.isfinite(dx) and math.isfinite(dy)):
        raise InvalidArgumentError(f"delta must be finite, got {delta!r}")
    return math.exp(-(dx * dx + dy * dy) / (2.0 * h)) / (2.0 * math.pi * h)


def fit(samples: PointsLike, h: float) -> DensityModel:
    h = _check_bandwidth(h)
    if not isinstance(samples, SampleSet):
        samples = SampleSet(samples, enforce_pitch=False)
    if len(samples) == 0:
        raise EmptyInputError("cannot fit a density to an empty sample set")
    return DensityModel(samples, h)


def density_at(model: DensityModel, q) -> float:
    qx, qy = (float(v) for v in q)
    h = model.bandwidth
    d2 = (model.points[:, 0] - qx) ** 2 + (model.points[:, 1] - qy) ** 2
    terms = np.exp(-d2 / (2.0 * h))
    # fsum is correctly rounded, hence independent of sample order
    return math.fsum(terms) / (2.0 * math.pi * h * model.n)


def log_density(model: DensityModel, queries) -> np.ndarray:
    """ln density at each query row; finite even where exp() underflows."""
    q = np.asarray(queries, dtype=np.float64).reshape(-1, 2)
    h = model.bandwidth
    pts = model.points
    out = np.empty(len(q))
    step = max(1, 4_000_000 // max(1, len(pts)))
    for s in range(0, len(q), step):
        qq = q[s:s + step]
        d2 = (qq[:, 0, None] - pts[None, :, 0]) ** 2 + (qq[:, 1, None] - pts[None, :, 1]) ** 2
        a = -d2 / (2.0 * h)
        amax = a.max(axis=1)
        out[s:s + step] = amax + np.log(np.exp(a - amax[:, None]).sum(axis=1))
    return out - math.log(2.0 * math.pi * h * model.n)


def log_likelihood(model: DensityModel, held_out: PointsLike) -> float:
    pts = as_points(held_out)
    if len(pts) == 0:
        raise EmptyInputError("held-out set is empty")
    return float(log_density(model, pts).sum())


def evaluate_grid(model: DensityModel, spec: GridSpec) -> DensityGrid:
    """Density at every cell center.

    The Gaussian factorises over axes, so the lattice is a product
    ``Ky @ Kx.T`` accumulated over fixed sample chunks.
    """
    if not isinstance(spec, GridSpec):
        raise InvalidArgumentError("spec must be a GridSpec")
    h = model.bandwidth
    xc = spec.x_centers()
    yc = spec.y_centers()
    pts = model.points
    acc = np.zeros(spec.shape)
    for s in range(0, len(pts), _GRID_CHUNK):
        chunk = pts[s:s + _GRID_CHUNK]
        kx = np.exp(-((xc[:, None] - chunk[None, :, 0]) ** 2) / (2.0 * h))
        ky = np.exp(-((yc[:, None] - chunk[None, :, 1]) ** 2) / (2.0 * h))
        acc += ky @ kx.T
    acc /= 2.0 * math.pi * h * model.n
    return DensityGrid(spec, acc)
