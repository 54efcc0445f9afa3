"""Entropic optimal transport by log-domain Sinkhorn iterations.

The reported distance is the transport cost of the regularised plan,
``(sum P_eps * C) ** (1/p)``, not the regularised objective.  When both
supports share a lattice and the cost is separable across axes
(``p == norm_order``), the log-sum-exp over the other support is done one
axis at a time and the dense cost matrix is never built during iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgumentError
from .core import CostSpec, DiscreteDistribution, pairwise_cost
from .lattice import common_lattice

_CHECK_EVERY = 10
_PLAN_BLOCK = 512


@dataclass(frozen=True)
class SinkhornResult:
    distance: float
    converged: bool
    iterations: int
    marginal_error: float
    epsilon: float


def _lse(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis)


class _Dense:
    def __init__(self, mu, nu, cost):
        self.c = pairwise_cost(mu.support, nu.support, cost)

    def lse_rows(self, g, eps):
        # L_i = LSE_j (g_j - C_ij) / eps
        return _lse((g[None, :] - self.c) / eps, axis=1)

    def lse_cols(self, f, eps):
        return _lse((f[:, None] - self.c) / eps, axis=0)


class _Separable:
    """Axis-wise log-sum-exp on a shared lattice; cost = |dx|^q + |dy|^q."""

    def __init__(self, mu, nu, lat, q):
        self.lat = lat
        ix = np.arange(lat.cols) * lat.cell
        iy = np.arange(lat.rows) * lat.cell
        self.cx = np.abs(ix[:, None] - ix[None, :]) ** q
        self.cy = np.abs(iy[:, None] - iy[None, :]) ** q

    def _contract(self, vals, nodes, out_nodes, eps):
        lat = self.lat
        field = np.full(lat.size, -np.inf)
        field[nodes] = vals / eps
        field = field.reshape(lat.rows, lat.cols)
        # stage 1: over target columns -> t[row_j, col_i]
        t = _lse(field[:, None, :] - self.cx[None, :, :] / eps, axis=2)
        # stage 2: over target rows -> u[row_i, col_i]
        u = _lse(t[None, :, :] - self.cy[:, :, None] / eps, axis=1)
        return u.ravel()[out_nodes]

    def lse_rows(self, g, eps):
        return self._contract(g, self.lat.nu_nodes, self.lat.mu_nodes, eps)

    def lse_cols(self, f, eps):
        return self._contract(f, self.lat.mu_nodes, self.lat.nu_nodes, eps)


def _plan_cost(mu, nu, cost, f, g, eps) -> float:
    parts = []
    for s in range(0, len(mu), _PLAN_BLOCK):
        c = pairwise_cost(mu.support[s:s + _PLAN_BLOCK], nu.support, cost)
        p = np.exp((f[s:s + _PLAN_BLOCK, None] + g[None, :] - c) / eps)
        parts.append(float(np.sum(p * c)))
    return math.fsum(parts)


def wasserstein_sinkhorn(
    mu: DiscreteDistribution,
    nu: DiscreteDistribution,
    cost: CostSpec = CostSpec(),
    epsilon: float = 1.0,
    max_iters: int = 10_000,
    tol: float = 1e-9,
) -> SinkhornResult:
    """Entropic OT with regularisation ``epsilon`` (cost units).

    Stops once the L1 violation of the source marginal drops below ``tol``;
    hitting ``max_iters`` first is reported via ``converged=False``.
    """
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise InvalidArgumentError(f"epsilon must be positive, got {epsilon}")
    if max_iters < 1:
        raise InvalidArgumentError("max_iters must be at least 1")

    lat = common_lattice(mu, nu) if cost.p == cost.norm_order else None
    kern = _Separable(mu, nu, lat, cost.norm_order) if lat is not None else _Dense(mu, nu, cost)

    with np.errstate(divide="ignore"):
        log_a = np.log(mu.mass)
        log_b = np.log(nu.mass)
    f = np.zeros(len(mu))
    g = np.zeros(len(nu))
    err = math.inf
    converged = False
    it = 0
    while it < max_iters:
        it += 1
        lr = kern.lse_rows(g, epsilon)
        if it % _CHECK_EVERY == 0 or it == 1:
            with np.errstate(invalid="ignore"):
                row = np.exp(f / epsilon + lr)
            err = float(np.sum(np.abs(np.nan_to_num(row) - mu.mass)))
            if err < tol:
                converged = True
                break
        f = epsilon * (log_a - lr)
        g = epsilon * (log_b - kern.lse_cols(f, epsilon))
    if not converged:
        row = np.exp(f / epsilon + kern.lse_rows(g, epsilon))
        err = float(np.sum(np.abs(row - mu.mass)))
        converged = err < tol

    f = np.where(np.isfinite(f), f, -np.inf)
    total = max(_plan_cost(mu, nu, cost, f, g, epsilon), 0.0)
    distance = total if cost.p == 1.0 else total ** (1.0 / cost.p)
    return SinkhornResult(distance, converged, it, err, float(epsilon))
