"""Heatmaps and signed difference maps as binary PPM (P6) images.

One pixel per grid cell.  Image row 0 is the top of the pitch (largest y),
so the attacking direction points up; pixel (0, 0) is the (x_min, y_max)
cell.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .errors import InvalidArgumentError
from .kde import DensityGrid

SEQUENTIAL = "sequential"
DIVERGING = "diverging"


@dataclass(frozen=True)
class ColorMap:
    kind: str
    anchors: tuple  # ((fraction, (r, g, b)), ...) with fractions ascending over [0, 1]

    def __post_init__(self):
        if self.kind not in (SEQUENTIAL, DIVERGING):
            raise InvalidArgumentError(f"colormap kind must be sequential or diverging, got {self.kind!r}")
        anchors = tuple((float(f), tuple(int(c) for c in rgb)) for f, rgb in self.anchors)
        fr = [f for f, _ in anchors]
        if len(anchors) < 2 or fr[0] != 0.0 or fr[-1] != 1.0 or any(b <= a for a, b in zip(fr, fr[1:])):
            raise InvalidArgumentError("anchors need strictly increasing fractions from 0 to 1")
        if any(not 0 <= c <= 255 for _, rgb in anchors for c in rgb) or any(len(rgb) != 3 for _, rgb in anchors):
            raise InvalidArgumentError("anchor colors must be RGB triples in 0..255")
        if self.kind == DIVERGING and 0.5 not in fr:
            raise InvalidArgumentError("a diverging map needs a neutral anchor at fraction 0.5")
        object.__setattr__(self, "anchors", anchors)

    def colors(self, frac: np.ndarray) -> np.ndarray:
        """uint8 RGB for fractions in [0, 1] (clipped), linear between anchors."""
        frac = np.clip(np.asarray(frac, dtype=np.float64), 0.0, 1.0)
        xs = np.array([f for f, _ in self.anchors])
        rgb = np.array([c for _, c in self.anchors], dtype=np.float64)
        chans = [np.interp(frac, xs, rgb[:, k]) for k in range(3)]
        # round half up so 127.5 -> 128 on every platform
        return np.floor(np.stack(chans, axis=-1) + 0.5).astype(np.uint8)

    @classmethod
    def from_dict(cls, d: dict) -> "ColorMap":
        return cls(d["kind"], tuple((a[0], tuple(a[1])) for a in d["anchors"]))

    @classmethod
    def load(cls, path) -> "ColorMap":
        return cls.from_dict(json.loads(Path(path).read_text()))


SEQUENTIAL_MAP = ColorMap(SEQUENTIAL, ((0.0, (255, 255, 255)), (1.0, (8, 48, 160))))
DIVERGING_MAP = ColorMap(
    DIVERGING, ((0.0, (200, 30, 30)), (0.5, (255, 255, 255)), (1.0, (20, 150, 40)))
)


def _ppm(rgb: np.ndarray) -> bytes:
    h, w, _ = rgb.shape
    return b"P6\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(rgb, dtype=np.uint8).tobytes()


def _values(grid) -> np.ndarray:
    vals = grid.values if isinstance(grid, DensityGrid) else np.asarray(grid, dtype=np.float64)
    if vals.ndim != 2:
        raise InvalidArgumentError("grid values must be 2-D")
    if not np.all(np.isfinite(vals)):
        raise InvalidArgumentError("grid values must be finite")
    return vals


def render_heatmap(grid, cmap: ColorMap = SEQUENTIAL_MAP, scale: Union[str, float] = "max") -> bytes:
    """Sequential heatmap; ``scale`` is ``"max"`` or a fixed positive value mapped to 1.0."""
    if cmap.kind != SEQUENTIAL:
        raise InvalidArgumentError("render_heatmap needs a sequential colormap")
    vals = _values(grid)
    if np.any(vals < 0):
        raise InvalidArgumentError("negative values cannot be shown on a sequential map")
    if scale == "max":
        top = float(vals.max())
    else:
        top = float(scale)
        if not (top > 0 and math.isfinite(top)):
            raise InvalidArgumentError(f"fixed scale must be positive, got {scale!r}")
    frac = vals / top if top > 0 else np.zeros_like(vals)
    return _ppm(cmap.colors(np.flipud(frac)))


def render_diff(grid, cmap: ColorMap = DIVERGING_MAP, symmetric_scale: bool = True) -> bytes:
    """Signed map: zero is the neutral midpoint, positive values run toward the 1.0 anchor.

    With ``symmetric_scale`` both signs share M = max |value|; otherwise each
    sign is scaled by its own extreme.
    """
    if cmap.kind != DIVERGING:
        raise InvalidArgumentError("render_diff needs a diverging colormap")
    vals = _values(grid)
    if symmetric_scale:
        m = float(np.abs(vals).max())
        pos = neg = m
    else:
        pos = float(max(vals.max(), 0.0))
        neg = float(max(-vals.min(), 0.0))
    frac = np.full(vals.shape, 0.5)
    if pos > 0:
        frac = np.where(vals > 0, 0.5 + 0.5 * vals / pos, frac)
    if neg > 0:
        frac = np.where(vals < 0, 0.5 + 0.5 * vals / neg, frac)
    return _ppm(cmap.colors(np.flipud(frac)))


def read_ppm(data: bytes) -> np.ndarray:
    """Decode a P6 image written by this module into an (h, w, 3) uint8 array."""
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6" or len(parts) < 4:
        raise InvalidArgumentError("not a binary PPM")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)
