"""Seeded synthetic measures and a loader for grouped indicator tables.

Every generator is a pure function of its parameters and seed. Random
streams come from the counter-based Philox generator keyed by
``SeedSequence([seed, *tags])``, so independent draws (for example the
response parameters and the internal samples of a regression setting) use
separate streams and stay fixed when a sample size changes.
"""

import csv
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.stats import norm, ortho_group, qmc

from .cloud import PointCloud
from .errors import ConfigError, DataError

__all__ = [
    "IndicatorTable",
    "REGRESSION_SETTINGS",
    "RegressionSimulation",
    "gen_nested_ellipses",
    "gen_regression",
    "gen_ring_clusters",
    "gaussian_quantized",
    "load_indicator_csv",
    "make_rng",
]

# Ring-cluster geometry.
RING_CLUSTERS = 10
RING_RADIUS = 1.0
CLUSTER_SD = 0.08

# Nested-ellipse parameter ranges.
ELLIPSE_CENTER = 0.5
OUTER_AXES = ((1.5, 2.5), (0.8, 1.4))
INNER_RATIO = (0.35, 0.6)

# Smallest admissible covariance eigenvalue, as a fraction of its mean.
EIGEN_FLOOR = 1e-3

_ROTATION_45 = math.sqrt(0.5) * np.array([[1.0, 1.0], [-1.0, 1.0]])


def make_rng(seed, *tags):
    """Philox generator for the stream ``(seed, *tags)``."""
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *tags])))


def gen_ring_clusters(variant, seed, radius=RING_RADIUS, sd=CLUSTER_SD):
    """Gaussian clusters on a ring, 1100 points in total.

    ``left`` has 10 ring clusters of 110 points; ``right`` has the same 10
    ring centers of 100 points each plus a central cluster of 100.
    """
    if variant == "left":
        sizes = [110] * RING_CLUSTERS
    elif variant == "right":
        sizes = [100] * (RING_CLUSTERS + 1)
    else:
        raise ConfigError(f"variant must be 'left' or 'right', got {variant!r}")
    angles = 2.0 * np.pi * np.arange(RING_CLUSTERS) / RING_CLUSTERS
    centers = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    if variant == "right":
        centers = np.vstack([centers, np.zeros((1, 2))])
    rng = make_rng(seed, 1, 0 if variant == "left" else 1)
    pts = np.repeat(centers, sizes, axis=0) + sd * rng.standard_normal((sum(sizes), 2))
    return PointCloud(pts)


def _ellipse(rng, center, axes, count):
    theta = rng.uniform(0.0, 2.0 * np.pi, count)
    rot = rng.uniform(0.0, np.pi)
    c, s = math.cos(rot), math.sin(rot)
    local = np.stack([axes[0] * np.cos(theta), axes[1] * np.sin(theta)], axis=1)
    return center + local @ np.array([[c, s], [-s, c]])


def gen_nested_ellipses(count=30, n=1000, seed=0):
    """``count`` clouds of ``n`` points, half on an outer and half on an inner ellipse.

    Each cloud has its own random center and semi-axes; the two ellipses of
    a cloud are rotated independently.
    """
    if count < 1 or n < 2:
        raise ConfigError(f"need count >= 1 and n >= 2, got count={count}, n={n}")
    clouds = []
    for k in range(count):
        rng = make_rng(seed, 2, k)
        center = rng.uniform(-ELLIPSE_CENTER, ELLIPSE_CENTER, 2)
        outer = np.array([rng.uniform(*OUTER_AXES[0]), rng.uniform(*OUTER_AXES[1])])
        inner = outer * rng.uniform(*INNER_RATIO)
        n_out = n - n // 2
        pts = np.vstack([_ellipse(rng, center, outer, n_out), _ellipse(rng, center, inner, n - n_out)])
        clouds.append(PointCloud(pts))
    return clouds


def gaussian_quantized(mean, cov, size, seed=0):
    """Deterministic ``size``-point stand-in for ``N(mean, cov)``.

    A scrambled Sobol set is mapped through the normal quantile function,
    which approximates the law far more evenly than i.i.d. draws.
    """
    mean = np.asarray(mean, dtype=np.float64)
    d = mean.size
    sampler = qmc.Sobol(d, scramble=True, rng=make_rng(seed, 9))
    u = sampler.random(size)
    u = np.clip(u, 0.5 / size, 1.0 - 0.5 / size)
    root = np.linalg.cholesky(np.asarray(cov, dtype=np.float64))
    return PointCloud(mean + norm.ppf(u) @ root.T)


@dataclass(frozen=True)
class _Setting:
    p: int
    scheme: str
    design: tuple
    alpha: object
    beta: object
    mean_sd: float
    eig_sd: float
    eig_scale: float = 1.0


def _alpha_linear(x, p):
    return np.full(p, x)


def _beta_linear(x, p):
    return np.full(p, x + 1.0)


def _alpha_sine(x, p):
    return np.full(p, 0.5 * math.sin(2.0 * math.pi * x))


def _beta_cosine(x, p):
    return np.full(p, math.cos(0.9 * math.pi * x))


def _alpha_bivariate(x, p):
    return np.full(p, 0.4 * x + 0.3)


def _beta_bivariate(x, p):
    return np.array([1.0 + 0.5 * x, 1.0 - 0.5 * x])


REGRESSION_SETTINGS = {
    "bivariate": _Setting(2, "global", (0.0, 1.0), _alpha_bivariate, _beta_bivariate, 0.0, 0.1, 0.01),
    "p2-global": _Setting(2, "global", (-0.5, 0.5), _alpha_linear, _beta_linear, 0.1, 0.1),
    "p2-local": _Setting(2, "local", (-0.5, 0.5), _alpha_sine, _beta_cosine, 0.1, 0.1),
    "p5-global": _Setting(5, "global", (-0.5, 0.5), _alpha_linear, _beta_linear, 0.1, 0.1),
    "p5-local": _Setting(5, "local", (-0.5, 0.5), _alpha_sine, _beta_cosine, 0.1, 0.1),
}


@dataclass
class RegressionSimulation:
    """Observed covariates with sampled response clouds and the true model.

    ``x_eval`` holds the covariates at which predictions are scored.
    ``truth`` produces the true conditional law at a covariate, using the
    mean eigenvalues ``beta(x)`` and mean location ``alpha(x)``.
    """

    setting: str
    X: np.ndarray
    clouds: list
    x_eval: np.ndarray
    rotation: np.ndarray
    means: np.ndarray
    eigenvalues: np.ndarray
    seed: int
    params: dict = field(default_factory=dict)

    @property
    def spec(self):
        return REGRESSION_SETTINGS[self.setting]

    def true_mean(self, x):
        return self.spec.alpha(float(x), self.spec.p)

    def true_cov(self, x):
        s = self.spec
        lam = _floor_eigen(s.eig_scale * s.beta(float(x), s.p))
        return (self.rotation * lam) @ self.rotation.T

    def truth(self, x, size=256):
        return gaussian_quantized(self.true_mean(x), self.true_cov(x), size, self.seed)

    def dataset(self, depth=None):
        from .frechet import RegressionDataset

        return RegressionDataset.from_clouds(self.X, self.clouds, depth)


def _floor_eigen(lam):
    return np.maximum(lam, EIGEN_FLOOR * np.abs(lam).mean())


def gen_regression(setting, m=None, n=10_000, seed=0):
    """Simulated distribution-valued responses for a named setting.

    ``bivariate`` uses ``m`` (default 101) equispaced covariates on [0, 1]
    and observes every other one starting from the first, so 51 of 101 are
    observed and the remaining 50 are ``x_eval``. The other settings draw
    ``m`` (default 50) covariates uniformly on [-0.5, 0.5] and evaluate on
    50 equispaced points. Each response is ``N(mu_i, V diag(lambda_i) V^T)``
    with ``mu_i ~ N(alpha(x), sd^2 I)`` and ``lambda_i ~ N(beta(x), sd^2 I)``
    scaled as the setting requires; eigenvalues are floored to stay positive.
    """
    if setting not in REGRESSION_SETTINGS:
        raise ConfigError(f"unknown setting {setting!r}; choose from {sorted(REGRESSION_SETTINGS)}")
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    s = REGRESSION_SETTINGS[setting]
    lo, hi = s.design
    if setting == "bivariate":
        m = 101 if m is None else m
        if m < 3:
            raise ConfigError(f"bivariate design needs m >= 3, got {m}")
        grid = np.linspace(lo, hi, m)
        X, x_eval = grid[0::2], grid[1::2]
        rotation = _ROTATION_45
    else:
        m = 50 if m is None else m
        if m < 3:
            raise ConfigError(f"m must be >= 3, got {m}")
        X = make_rng(seed, 3, 0).uniform(lo, hi, m)
        x_eval = np.linspace(lo, hi, 50)
        rotation = _ROTATION_45 if s.p == 2 else ortho_group.rvs(s.p, random_state=make_rng(seed, 3, 1))

    prng = make_rng(seed, 4)
    means = np.array([s.alpha(x, s.p) for x in X]) + s.mean_sd * prng.standard_normal((X.size, s.p))
    eig = s.eig_scale * (np.array([s.beta(x, s.p) for x in X]) + s.eig_sd * prng.standard_normal((X.size, s.p)))
    eig = np.array([_floor_eigen(row) for row in eig])

    clouds = []
    for i in range(X.size):
        z = make_rng(seed, 5, i).standard_normal((n, s.p))
        root = rotation * np.sqrt(eig[i])
        clouds.append(PointCloud(means[i] + z @ root.T))
    params = {"setting": setting, "m": int(m), "n": int(n), "seed": int(seed), "p": s.p, "scheme": s.scheme}
    return RegressionSimulation(setting, X, clouds, x_eval, rotation, means, eig, int(seed), params)


@dataclass(frozen=True)
class IndicatorTable:
    """One cloud per group key plus how the columns were transformed."""

    groups: dict
    columns: tuple
    standardized: bool
    center: np.ndarray
    scale: np.ndarray

    def metadata(self):
        return {
            "columns": list(self.columns),
            "standardized": self.standardized,
            "center": self.center.tolist(),
            "scale": self.scale.tolist(),
            "groups": {str(k): v.n for k, v in self.groups.items()},
        }


def load_indicator_csv(path, columns, key, standardize=False):
    """Group rows of a CSV by ``key`` and return one cloud per group.

    Only the listed indicator ``columns`` are kept, in that order. Missing
    or non-numeric cells are rejected. With ``standardize`` every column is
    centered and scaled by its pooled mean and standard deviation.
    """
    columns = tuple(columns)
    if not columns:
        raise DataError("no indicator columns requested")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in (key, *columns) if c not in header]
        if missing:
            raise DataError(f"{path}: missing column(s) {missing}")
        rows = {}
        for line, rec in enumerate(reader, start=2):
            values = []
            for c in columns:
                cell = (rec[c] or "").strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"{path}:{line}: column {c!r} has non-numeric value {cell!r}") from None
                if not math.isfinite(v):
                    raise DataError(f"{path}:{line}: column {c!r} has missing value {cell!r}")
                values.append(v)
            group = (rec[key] or "").strip()
            if not group:
                raise DataError(f"{path}:{line}: empty group key")
            rows.setdefault(group, []).append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    pooled = np.array([v for vals in rows.values() for v in vals])
    d = len(columns)
    center, scale = np.zeros(d), np.ones(d)
    if standardize:
        center = pooled.mean(axis=0)
        scale = pooled.std(axis=0)
        if np.any(scale == 0):
            raise DataError("cannot standardize a constant column")
    groups = {g: PointCloud((np.array(v) - center) / scale) for g, v in rows.items()}
    return IndicatorTable(groups, columns, bool(standardize), center, scale)
