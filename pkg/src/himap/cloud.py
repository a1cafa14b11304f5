"""Uniformly weighted point clouds."""

import numpy as np

from .errors import DataError


class PointCloud:
    """Empirical measure with equal mass on each of ``n`` points in R^d.

    The coordinate array is copied on construction and made read-only.
    One-dimensional input is treated as ``n`` points on the line.
    """

    __slots__ = ("_points",)

    def __init__(self, points):
        arr = np.array(points, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise DataError(f"points must be an (n, d) array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DataError(f"point cloud needs n >= 1 and d >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DataError("point coordinates must be finite")
        arr.setflags(write=False)
        self._points = arr

    @property
    def points(self):
        return self._points

    @property
    def n(self):
        return self._points.shape[0]

    @property
    def dim(self):
        return self._points.shape[1]

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"PointCloud(n={self.n}, dim={self.dim})"

    def __eq__(self, other):
        if not isinstance(other, PointCloud):
            return NotImplemented
        return self._points.shape == other._points.shape and np.array_equal(self._points, other._points)

    __hash__ = None

    def bounding_box(self):
        """Tight axis-aligned box as a ``(d, 2)`` array of (lower, upper)."""
        return np.stack([self._points.min(axis=0), self._points.max(axis=0)], axis=1)

    def affine(self, scale, shift):
        """Image under ``x -> scale * x + shift`` applied coordinate-wise."""
        return PointCloud(self._points * np.asarray(scale, dtype=float) + np.asarray(shift, dtype=float))
