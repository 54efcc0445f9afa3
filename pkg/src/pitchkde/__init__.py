"""Shared-bandwidth KDE comparison of event locations on a playing field."""

from .bandwidth import CvConfig, cv_score, pool_geometric_mean, select_bandwidth
from .kde import DensityGrid, DensityModel, GridSpec, SampleSet, density_at, evaluate_grid, fit, kernel_value
from .transport import CostSpec, DiscreteDistribution, discretize, wasserstein_exact, wasserstein_sinkhorn

__version__ = "0.1.0"
