"""Hilbert mass-aligned quantile maps for multivariate point clouds.

A cloud is summarized by a binary tree of equiprobable median cuts ordered
along a Hilbert curve. The tree defines a map from [0, 1] into the cloud's
space. Maps from different clouds share their quantile levels, so distances,
barycenters and regression estimates reduce to arithmetic on them.
"""

from .barycenter import AffineWeights, barycenter_cloud, barycenter_map
from .cloud import PointCloud
from .errors import (
    BandwidthError,
    ConfigError,
    ConvergenceWarning,
    DataError,
    DomainError,
    HimapError,
    ResourceError,
    SingularCovarianceError,
    WeightError,
)
from .frechet import (
    GlobalWeightModel,
    LocalWeightModel,
    RegressionDataset,
    evaluate_mise,
    global_weights,
    leave_one_out,
    local_weights,
    predict,
    select_bandwidth,
)
from .hilbert_address import CellAddress, HilbertState, address_of, child_state, geometric_axis
from .mass_tree import HimapTree, TreeNode, build_tree, default_depth, node_at
from .ot_oracle import sinkhorn, sinkhorn_cost, w2_exact_1d, w2_exact_assignment
from .quantile_map import QuantileGrid, QuantileMap, himap_distance

__version__ = "0.1.0"

__all__ = [
    "AffineWeights",
    "BandwidthError",
    "CellAddress",
    "ConfigError",
    "ConvergenceWarning",
    "DataError",
    "DomainError",
    "GlobalWeightModel",
    "HilbertState",
    "HimapError",
    "HimapTree",
    "LocalWeightModel",
    "PointCloud",
    "QuantileGrid",
    "QuantileMap",
    "RegressionDataset",
    "ResourceError",
    "SingularCovarianceError",
    "TreeNode",
    "WeightError",
    "address_of",
    "barycenter_cloud",
    "barycenter_map",
    "build_tree",
    "child_state",
    "default_depth",
    "evaluate_mise",
    "geometric_axis",
    "global_weights",
    "himap_distance",
    "leave_one_out",
    "local_weights",
    "node_at",
    "predict",
    "select_bandwidth",
    "sinkhorn",
    "sinkhorn_cost",
    "w2_exact_1d",
    "w2_exact_assignment",
]
