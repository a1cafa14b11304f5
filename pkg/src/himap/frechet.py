"""Global and local Fréchet regression with distribution-valued responses.

Both schemes produce affine weights over the training pairs that sum to one.
The prediction at a query is the barycenter of the response quantile maps
under those weights, which stays well defined when some weights are
negative.
"""

from dataclasses import dataclass
import warnings

import numpy as np

from .barycenter import AffineWeights, barycenter_map
from .errors import (
    BandwidthError,
    ConfigError,
    ConvergenceWarning,
    DataError,
    DomainError,
    SingularCovarianceError,
    WeightError,
)
from .ot_oracle import sinkhorn
from .quantile_map import QuantileGrid, QuantileMap, himap_distance

__all__ = [
    "GlobalWeightModel",
    "LocalWeightModel",
    "LooResult",
    "RegressionDataset",
    "epanechnikov",
    "evaluate_mise",
    "global_weights",
    "covariate_average",
    "default_bandwidths",
    "leave_one_out",
    "local_weights",
    "predict",
    "regression_weights",
    "select_bandwidth",
    "sinkhorn_costs",
]

# Largest acceptable condition number of the predictor covariance.
COND_LIMIT = 1e12
# Prediction requires weights summing to one within this tolerance.
SUM_TOL = 1e-9


def _predictors(X):
    X = np.array(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise DataError(f"predictors must be an (m, p) array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DataError("predictors must be finite")
    return X


class RegressionDataset:
    """Pairs ``(X_i, Y_i)`` with each response held as a fitted quantile map."""

    def __init__(self, X, responses):
        X = _predictors(X)
        responses = list(responses)
        if X.shape[0] < 2:
            raise DataError(f"need at least two pairs, got {X.shape[0]}")
        if len(responses) != X.shape[0]:
            raise DataError(f"{X.shape[0]} predictors but {len(responses)} responses")
        if not all(isinstance(r, QuantileMap) for r in responses):
            raise DataError("responses must be QuantileMap instances")
        dims = {r.dim for r in responses}
        if len(dims) != 1:
            raise DataError(f"responses have different dimensions: {sorted(dims)}")
        X.setflags(write=False)
        self.X = X
        self.responses = tuple(responses)
        self._grids = {}

    @classmethod
    def from_clouds(cls, X, clouds, depth=None):
        return cls(X, [QuantileMap.fit(c, depth) for c in clouds])

    @property
    def m(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def dim(self):
        return self.responses[0].dim

    def __len__(self):
        return self.m

    def grids(self, resolution=None, average=False):
        """Response grids on a shared resolution, cached per setting.

        ``resolution`` defaults to ``2**max(L_i)``. With ``average`` each
        grid holds interval means (see :meth:`QuantileMap.average_grid`).
        """
        if resolution is None:
            resolution = 1 << max(r.depth for r in self.responses)
        key = (int(resolution), bool(average))
        if key not in self._grids:
            if average:
                self._grids[key] = [r.average_grid(resolution) for r in self.responses]
            else:
                self._grids[key] = [r.sample_grid(resolution) for r in self.responses]
        return self._grids[key]

    def subset(self, rows):
        rows = np.asarray(rows)
        return RegressionDataset(self.X[rows], [self.responses[i] for i in rows])


@dataclass(frozen=True)
class GlobalWeightModel:
    """Sample mean and population covariance of the predictors."""

    mu_hat: np.ndarray
    sigma_hat: np.ndarray
    sigma_inv: np.ndarray

    @classmethod
    def fit(cls, X, cond_limit=COND_LIMIT):
        X = _predictors(X)
        mu = X.mean(axis=0)
        Z = X - mu
        # Divide by m, not m - 1: the weights then sum to one exactly.
        sigma = Z.T @ Z / X.shape[0]
        cond = np.linalg.cond(sigma)
        if not np.isfinite(cond) or cond > cond_limit:
            raise SingularCovarianceError("predictor covariance is singular", float(cond))
        return cls(mu, sigma, np.linalg.inv(sigma))


def global_weights(model, X, x):
    """``lambda_i = (1 + (X_i - mu)^T Sigma^{-1} (x - mu)) / m``."""
    X = _predictors(X)
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size != X.shape[1] or model.mu_hat.size != X.shape[1]:
        raise DomainError(f"query has {x.size} coordinates, predictors have {X.shape[1]}")
    lam = (1.0 + (X - model.mu_hat) @ (model.sigma_inv @ (x - model.mu_hat))) / X.shape[0]
    return AffineWeights(lam)


def epanechnikov(u):
    """``0.75 (1 - u^2)`` on ``[-1, 1]``, zero outside."""
    u = np.asarray(u, dtype=np.float64)
    return np.where(np.abs(u) < 1.0, 0.75 * (1.0 - u * u), 0.0)


@dataclass(frozen=True)
class LocalWeightModel:
    """Kernel and bandwidth for local linear weights with a scalar predictor."""

    bandwidth: float
    kernel: object = epanechnikov

    def __post_init__(self):
        if not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise BandwidthError(f"bandwidth must be positive, got {self.bandwidth}")

    def scaled(self, u):
        """``K_h(u) = K(u / h) / h``."""
        h = self.bandwidth
        return self.kernel(np.asarray(u, dtype=np.float64) / h) / h


def local_weights(model, X, x, rtol=1e-10):
    """Local linear weights at the scalar query ``x``.

    With ``u_i = X_i - x`` and moments ``mu_j = mean(K_h(u) u^j)`` the raw
    weight is ``K_h(u_i) (mu_2 - mu_1 u_i) / sigma0^2`` where
    ``sigma0^2 = mu_0 mu_2 - mu_1^2``. The weights are renormalized to sum to
    one, which removes rounding drift only.
    """
    X = _predictors(X)
    if X.shape[1] != 1:
        raise DomainError(f"local weights need a scalar predictor, got p = {X.shape[1]}")
    x = float(np.asarray(x, dtype=np.float64).reshape(-1)[0])
    u = X[:, 0] - x
    k = model.scaled(u)
    inside = k > 0
    if np.unique(X[inside, 0]).size < 2:
        raise BandwidthError(
            f"fewer than two distinct predictors within bandwidth {model.bandwidth} of x = {x}"
        )
    mu0, mu1, mu2 = (np.mean(k * u**j) for j in range(3))
    s0 = mu0 * mu2 - mu1 * mu1
    if not s0 > rtol * mu0 * mu2:
        raise BandwidthError(f"local design is degenerate at x = {x} (sigma0^2 = {s0:.3e})")
    lam = k * (mu2 - mu1 * u) / (s0 * X.shape[0])
    return AffineWeights(lam / lam.sum())


def _check_unit_sum(w):
    total = w.total
    if abs(total - 1.0) > SUM_TOL:
        raise WeightError(f"regression weights must sum to 1, got {total!r}")


def predict(data, weights, resolution=None, average=False):
    """Weighted barycenter of the response maps; weights must sum to 1.

    With ``average`` the responses enter as interval means on ``G`` cells,
    which commutes with the weighted sum.
    """
    w = weights if isinstance(weights, AffineWeights) else AffineWeights(weights)
    _check_unit_sum(w)
    if average:
        return barycenter_map(data.grids(resolution, True), w, resolution)
    return barycenter_map(data.responses, w, resolution)


def regression_weights(scheme, X, x, bandwidth=None):
    """Weights of ``scheme`` ('global' or 'local') fitted on ``X`` at query ``x``."""
    if scheme == "global":
        return global_weights(GlobalWeightModel.fit(X), X, x)
    if scheme == "local":
        if bandwidth is None:
            raise ConfigError("local weights need a bandwidth")
        return local_weights(LocalWeightModel(bandwidth), X, x)
    raise ConfigError(f"unknown scheme {scheme!r}; expected 'global' or 'local'")


def sinkhorn_costs(predicted, truth, epsilon=None, **kwargs):
    """Sinkhorn cost between each predicted grid and its truth cloud.

    Returns the costs and the largest final marginal violation. Iteration
    caps are reported once for the whole batch instead of once per pair.
    """
    predicted, truth = list(predicted), list(truth)
    if len(predicted) != len(truth):
        raise DomainError(f"{len(predicted)} predictions but {len(truth)} truth clouds")
    if not predicted:
        raise DomainError("need at least one evaluation point")
    costs = np.empty(len(predicted))
    worst, capped = 0.0, 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        for i, (p, t) in enumerate(zip(predicted, truth)):
            cloud = p.to_cloud() if isinstance(p, QuantileGrid) else p
            res = sinkhorn(cloud, t, epsilon, **kwargs)
            costs[i] = res.cost
            worst = max(worst, res.violation)
            capped += not res.converged
    if capped:
        warnings.warn(
            f"Sinkhorn hit its iteration cap on {capped} of {len(costs)} pairs "
            f"(worst marginal violation {worst:.3e})",
            ConvergenceWarning,
            stacklevel=2,
        )
    return costs, worst


def covariate_average(values, xs=None):
    """Trapezoidal mean of ``values`` over the covariate range spanned by ``xs``."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 1:
        return float(values[0])
    xs = np.arange(values.size, dtype=np.float64) if xs is None else np.asarray(xs, dtype=np.float64)
    if xs.shape != values.shape:
        raise DomainError(f"{xs.size} covariates for {values.size} costs")
    order = np.argsort(xs, kind="stable")
    xs, values = xs[order], values[order]
    span = xs[-1] - xs[0]
    if not span > 0:
        return float(values.mean())
    return float(np.trapezoid(values, xs) / span)


def evaluate_mise(predicted, truth, epsilon=None, xs=None, **kwargs):
    """Trapezoidal average over covariates of the Sinkhorn cost.

    ``xs`` gives the covariate of each pair; by default the pairs are taken
    as equispaced. ``epsilon=None`` uses the per-pair default of
    :func:`himap.ot_oracle.sinkhorn`.
    """
    predicted = list(predicted)
    if xs is not None and np.size(xs) != len(predicted):
        raise DomainError(f"{np.size(xs)} covariates for {len(predicted)} predictions")
    costs, _ = sinkhorn_costs(predicted, truth, epsilon, **kwargs)
    return covariate_average(costs, xs)


@dataclass(frozen=True)
class LooResult:
    errors: np.ndarray
    mise: float


def leave_one_out(data, scheme="global", *, bandwidth=None, resolution=256, metric="himap",
                  epsilon=None):
    """Refit without each pair in turn and score the prediction at its ``X_i``.

    ``metric="himap"`` scores with the squared quantile-map distance on a
    ``resolution``-point grid; ``metric="sinkhorn"`` uses the entropic cost
    between the predicted grid and the held-out grid. ``mise`` is the plain
    mean of the per-pair errors since the predictors need not be
    equispaced.
    """
    if data.m < 3:
        raise DataError(f"leave-one-out needs m >= 3, got {data.m}")
    if metric not in ("himap", "sinkhorn"):
        raise ConfigError(f"unknown metric {metric!r}")
    grids = data.grids(resolution)
    errors = np.empty(data.m)
    everyone = np.arange(data.m)
    for i in everyone:
        rest = everyone != i
        w = regression_weights(scheme, data.X[rest], data.X[i], bandwidth)
        _check_unit_sum(w)
        pred = barycenter_map([grids[j] for j in everyone[rest]], w, resolution)
        if metric == "himap":
            errors[i] = himap_distance(pred, grids[i], 2) ** 2
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ConvergenceWarning)
                errors[i] = sinkhorn(pred.to_cloud(), grids[i].to_cloud(), epsilon).cost
    return LooResult(errors, float(errors.mean()))


def default_bandwidths(X, count=12):
    """Log-spaced grid from 2.5 times the widest predictor gap up to the range."""
    x = np.sort(_predictors(X)[:, 0])
    span = x[-1] - x[0]
    if not span > 0:
        raise BandwidthError("predictors are all equal")
    lo = 2.5 * np.diff(x).max()
    return np.geomspace(min(lo, span), span, count)


def select_bandwidth(data, bandwidths=None, resolution=256):
    """Bandwidth minimizing the leave-one-out error of local regression.

    Bandwidths for which some refit has an empty window are skipped.
    Returns ``(best, table)`` where ``table`` maps each candidate to its
    leave-one-out error (``inf`` when skipped).
    """
    if data.p != 1:
        raise DomainError(f"local regression needs p = 1, got p = {data.p}")
    hs = default_bandwidths(data.X) if bandwidths is None else np.asarray(bandwidths, dtype=float)
    if hs.size == 0:
        raise ConfigError("bandwidth grid is empty")
    table = {}
    for h in hs:
        try:
            table[float(h)] = leave_one_out(data, "local", bandwidth=float(h),
                                            resolution=resolution).mise
        except BandwidthError:
            table[float(h)] = np.inf
    best = min(table, key=table.get)
    if not np.isfinite(table[best]):
        raise BandwidthError("no candidate bandwidth admits every leave-one-out refit")
    return best, table
