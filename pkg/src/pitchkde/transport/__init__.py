"""Wasserstein distances between discretised densities."""

from .core import (
    DEFAULT_MASS_FLOOR,
    CostSpec,
    DiscreteDistribution,
    TransportPlan,
    discretize,
    ground_cost,
    median_cost,
    pairwise_cost,
)
from .exact import ExactTransport, wasserstein_exact
from .sinkhorn import SinkhornResult, wasserstein_sinkhorn

__all__ = [
    "DEFAULT_MASS_FLOOR",
    "CostSpec",
    "DiscreteDistribution",
    "ExactTransport",
    "SinkhornResult",
    "TransportPlan",
    "discretize",
    "ground_cost",
    "median_cost",
    "pairwise_cost",
    "wasserstein_exact",
    "wasserstein_sinkhorn",
]
