"""Closed-form barycenters of quantile maps under affine weights.

The barycenter's quantile map is the weighted average of the inputs,
normalized by the weight total, evaluated level by level on a common grid.
Weights may be negative as long as their total is positive. There is no
iteration and hence no tolerance or iteration-count parameter.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, WeightError
from .quantile_map import QuantileGrid, QuantileMap, grid_levels

__all__ = ["AffineWeights", "barycenter_map", "barycenter_cloud"]


@dataclass(frozen=True)
class AffineWeights:
    """Real weights ``lambda_1..lambda_q`` with a strictly positive total."""

    lambdas: np.ndarray

    def __post_init__(self):
        lam = np.array(self.lambdas, dtype=np.float64).ravel()
        if lam.size < 1:
            raise WeightError("need at least one weight")
        if not np.all(np.isfinite(lam)):
            raise WeightError("weights must be finite")
        total = lam.sum()
        if not total > 0:
            raise WeightError(
                f"weights sum to {total:.6g}; the barycenter needs a strictly positive total"
            )
        lam.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)

    @property
    def total(self):
        """The normalizer ``Lambda = sum(lambda_i)``."""
        return float(self.lambdas.sum())

    def __len__(self):
        return self.lambdas.size


def _as_weights(w):
    return w if isinstance(w, AffineWeights) else AffineWeights(w)


def barycenter_map(maps, weights, resolution=None):
    """Barycenter quantile function sampled on ``G`` midpoints.

    Parameters
    ----------
    maps : sequence of QuantileMap or QuantileGrid
        Inputs sharing one dimension. Grids must already have resolution
        ``G``.
    weights : AffineWeights or array_like
    resolution : int, optional
        Defaults to ``2**max(L_i)``, which is exact for the inputs.

    Returns
    -------
    QuantileGrid
    """
    maps = list(maps)
    w = _as_weights(weights)
    if len(maps) != len(w):
        raise DomainError(f"{len(maps)} maps but {len(w)} weights")
    dims = {m.dim for m in maps}
    if len(dims) != 1:
        raise DomainError(f"maps have different dimensions: {sorted(dims)}")
    if resolution is None:
        grids = [m.resolution for m in maps if isinstance(m, QuantileGrid)]
        resolution = grids[0] if grids else 1 << max(m.depth for m in maps)

    acc = None
    for lam, m in zip(w.lambdas, maps):
        if isinstance(m, QuantileMap):
            values = m.sample_grid(resolution).values
        else:
            if m.resolution != resolution:
                raise DomainError(f"grid resolution {m.resolution} does not match {resolution}")
            values = m.values
        acc = lam * values if acc is None else acc + lam * values
    return QuantileGrid(grid_levels(resolution), acc / w.total)


def barycenter_cloud(maps, weights, resolution=None):
    """Barycenter materialized as the ``G``-point pushforward cloud."""
    return barycenter_map(maps, weights, resolution).to_cloud()
