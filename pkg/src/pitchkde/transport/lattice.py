"""Shared-lattice bookkeeping for two grid-backed distributions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DiscreteDistribution

# Refuse the lattice route when the bounding lattice is this much larger than
# the supports (e.g. two far-apart point clouds).
_MAX_FILL_RATIO = 64


@dataclass(frozen=True, eq=False)
class Lattice:
    x0: float
    y0: float
    cell: float
    rows: int
    cols: int
    mu_nodes: np.ndarray
    nu_nodes: np.ndarray

    @property
    def size(self) -> int:
        return self.rows * self.cols


def common_lattice(mu: DiscreteDistribution, nu: DiscreteDistribution) -> Optional[Lattice]:
    """Node indices of both supports on one lattice, or None if they do not share one."""
    if mu.cell_size is None or nu.cell_size is None or mu.cell_size != nu.cell_size:
        return None
    cell = float(mu.cell_size)
    pts = np.vstack([mu.support, nu.support])
    x0, y0 = pts.min(axis=0)
    fx = (pts[:, 0] - x0) / cell
    fy = (pts[:, 1] - y0) / cell
    ix = np.rint(fx)
    iy = np.rint(fy)
    if np.max(np.abs(fx - ix)) > 1e-6 or np.max(np.abs(fy - iy)) > 1e-6:
        return None
    cols = int(ix.max()) + 1
    rows = int(iy.max()) + 1
    if rows * cols > _MAX_FILL_RATIO * len(pts):
        return None
    nodes = (iy * cols + ix).astype(np.int64)
    m = len(mu)
    mu_nodes, nu_nodes = nodes[:m], nodes[m:]
    if len(np.unique(mu_nodes)) != len(mu_nodes) or len(np.unique(nu_nodes)) != len(nu_nodes):
        return None
    return Lattice(float(x0), float(y0), cell, rows, cols, mu_nodes, nu_nodes)


def neighbour_arcs(rows: int, cols: int) -> tuple[np.ndarray, np.ndarray]:
    """Directed 4-neighbour arcs (both directions) of a rows x cols lattice."""
    idx = np.arange(rows * cols, dtype=np.int64).reshape(rows, cols)
    right = (idx[:, :-1].ravel(), idx[:, 1:].ravel())
    up = (idx[:-1, :].ravel(), idx[1:, :].ravel())
    src = np.concatenate([right[0], right[1], up[0], up[1]])
    tgt = np.concatenate([right[1], right[0], up[1], up[0]])
    return src, tgt
