"""Evaluation of the empirical quantile map and the distance it induces.

``QuantileMap.evaluate(t)`` walks the tree from the root along the address
of ``t`` and records, for every coordinate, the last cut made on it. A
coordinate that is never cut on the path keeps the midpoint of the root
box; a leaf that stopped early with a single point reports that point.
"""

from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud
from .errors import ConfigError, DomainError
from .mass_tree import HimapTree, build_tree

__all__ = ["QuantileMap", "QuantileGrid", "grid_levels", "himap_distance"]

# Largest depth for which the dense table of cell values is materialized.
TABLE_DEPTH_LIMIT = 24


def grid_levels(resolution):
    """Cell midpoints ``(g + 1/2) / G`` for ``g = 0..G-1``."""
    G = _check_resolution(resolution)
    return (np.arange(G, dtype=np.float64) + 0.5) / G


def _check_resolution(resolution):
    if isinstance(resolution, bool) or not isinstance(resolution, (int, np.integer)):
        raise ConfigError(f"grid resolution must be an integer, got {resolution!r}")
    if resolution < 1:
        raise ConfigError(f"grid resolution must be >= 1, got {resolution}")
    return int(resolution)


@dataclass(frozen=True)
class QuantileGrid:
    """Quantile map sampled at the midpoints of ``G`` equal t-intervals."""

    levels: np.ndarray
    values: np.ndarray

    @property
    def resolution(self):
        return self.levels.size

    @property
    def dim(self):
        return self.values.shape[1]

    def to_cloud(self):
        return PointCloud(self.values)


class QuantileMap:
    """Piecewise-constant map t -> R^d defined by a fitted :class:`HimapTree`."""

    def __init__(self, tree):
        if not isinstance(tree, HimapTree):
            raise TypeError("QuantileMap needs a HimapTree")
        self.tree = tree
        self._table = None
        self._midpoint = tree.root_box.mean(axis=1)

    @classmethod
    def fit(cls, cloud, depth=None):
        return cls(build_tree(cloud, depth))

    @property
    def depth(self):
        return self.tree.depth

    @property
    def dim(self):
        return self.tree.dim

    def __repr__(self):
        return f"QuantileMap(depth={self.depth}, dim={self.dim})"

    def _cell_index(self, t):
        t = np.asarray(t, dtype=np.float64)
        if not np.all(np.isfinite(t)) or np.any((t < 0.0) | (t > 1.0)):
            raise DomainError("curve parameters must lie in [0, 1]")
        last = (1 << self.depth) - 1
        idx = np.floor(np.ldexp(t, self.depth)).astype(np.int64)
        return np.minimum(idx, last)

    def _traverse(self, idx):
        tree = self.tree
        L = tree.depth
        k = idx.size
        node = np.zeros(k, dtype=np.int64)
        rep = np.tile(self._midpoint, (k, 1))
        rows = np.arange(k)
        for level in range(L):
            lower = tree.lower[node]
            inner = lower >= 0
            if inner.all():
                sel, nd, lo = rows, node, lower
            else:
                sel = np.flatnonzero(inner)
                if sel.size == 0:
                    break
                nd, lo = node[sel], lower[sel]
            rep[sel, tree.axis[nd]] = tree.cut[nd]
            bit = (idx[sel] >> (L - 1 - level)) & 1
            node[sel] = lo + (bit ^ tree.reversed[nd])
        early = tree.leaf_row[node]
        hit = early >= 0
        if hit.any():
            rep[hit] = tree.leaf_points[early[hit]]
        return rep

    def cell_values(self):
        """Dense ``(2**L, d)`` table of the value on every depth-``L`` cell."""
        if self._table is None:
            if self.depth > TABLE_DEPTH_LIMIT:
                raise ConfigError(f"depth {self.depth} too large for a dense table")
            table = self._traverse(np.arange(1 << self.depth, dtype=np.int64))
            table.setflags(write=False)
            self._table = table
        return self._table

    def evaluate(self, t, use_table=None):
        """Value of the map at ``t`` (scalar or array) in [0, 1].

        A scalar ``t`` gives a ``(d,)`` vector; an array gives ``(k, d)``.
        With ``use_table`` left unset the dense table is used when it has
        already been built.
        """
        scalar = np.ndim(t) == 0
        idx = self._cell_index(np.atleast_1d(t))
        if use_table is None:
            use_table = self._table is not None
        out = self.cell_values()[idx] if use_table else self._traverse(idx)
        return out[0] if scalar else out

    def sample_grid(self, resolution=None):
        """Sample at the ``G`` cell midpoints; ``G`` defaults to ``2**L``."""
        G = (1 << self.depth) if resolution is None else _check_resolution(resolution)
        levels = grid_levels(G)
        if G == (1 << self.depth) and self.depth <= TABLE_DEPTH_LIMIT:
            values = np.array(self.cell_values())
        else:
            values = self.evaluate(levels)
        return QuantileGrid(levels, values)

    def average_grid(self, resolution):
        """Mean of the map over each of ``G`` equal t-intervals.

        This is the L^2 projection onto maps constant on those intervals;
        each value is the mean of the points pushed into that interval.
        ``G`` must be a power of two no larger than ``2**L``.
        """
        G = _check_resolution(resolution)
        if G & (G - 1) or G > (1 << self.depth):
            raise ConfigError(f"averaging needs a power of two <= {1 << self.depth}, got {G}")
        table = self.cell_values()
        values = table.reshape(G, -1, self.dim).mean(axis=1)
        return QuantileGrid(grid_levels(G), values)

    def pushforward(self, resolution=None):
        """Point cloud ``{Q(t_g)}``: the image of the uniform grid."""
        return self.sample_grid(resolution).to_cloud()


def _values_on(obj, G):
    if isinstance(obj, QuantileGrid):
        if obj.resolution != G:
            raise DomainError(f"grid resolution {obj.resolution} does not match {G}")
        return obj.values
    return obj.sample_grid(G).values


def himap_distance(a, b, r=2, resolution=None):
    """L^r distance between two quantile maps on a shared midpoint grid.

    ``a`` and ``b`` may be :class:`QuantileMap` or :class:`QuantileGrid`.
    For maps the default grid is ``2**max(L_a, L_b)``, on which
    piecewise-constant maps are integrated exactly.
    """
    if a.dim != b.dim:
        raise DomainError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if not r >= 1:
        raise DomainError(f"order r must be >= 1, got {r}")
    if resolution is None:
        grids = [x.resolution for x in (a, b) if isinstance(x, QuantileGrid)]
        if grids:
            resolution = grids[0]
        else:
            resolution = 1 << max(a.depth, b.depth)
    G = _check_resolution(resolution)
    diff = _values_on(a, G) - _values_on(b, G)
    norms = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    if r == 2:
        return float(np.sqrt(np.mean(norms * norms)))
    return float(np.mean(norms ** r) ** (1.0 / r))
