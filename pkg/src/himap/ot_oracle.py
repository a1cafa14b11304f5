"""Small-scale optimal transport references.

These are independent of the quantile-map machinery and serve to check it:

* :func:`w2_exact_assignment` solves the equal-size uniform problem as a
  linear assignment (optimal couplings are permutations by Birkhoff).
* :func:`w2_exact_1d` pairs sorted samples.
* :func:`sinkhorn` computes the entropic transport cost with log-stabilized
  scaling iterations.
"""

from dataclasses import dataclass
import warnings

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .cloud import PointCloud
from .errors import ConvergenceWarning, DomainError, ResourceError

__all__ = [
    "ASSIGNMENT_CAP",
    "SinkhornResult",
    "cost_matrix",
    "default_epsilon",
    "sinkhorn",
    "sinkhorn_cost",
    "w2_exact_1d",
    "w2_exact_assignment",
]

ASSIGNMENT_CAP = 4096


def _points(x):
    return x.points if isinstance(x, PointCloud) else PointCloud(x).points


def cost_matrix(a, b):
    """Squared Euclidean distances between the points of ``a`` and ``b``."""
    pa, pb = _points(a), _points(b)
    if pa.shape[1] != pb.shape[1]:
        raise DomainError(f"dimension mismatch: {pa.shape[1]} vs {pb.shape[1]}")
    return cdist(pa, pb, "sqeuclidean")


def w2_exact_assignment(a, b):
    """Exact W2 between two uniform clouds of equal size ``n <= 4096``."""
    pa, pb = _points(a), _points(b)
    if pa.shape[0] != pb.shape[0]:
        raise DomainError(f"clouds differ in size: {pa.shape[0]} vs {pb.shape[0]}")
    if pa.shape[0] > ASSIGNMENT_CAP:
        raise ResourceError(f"n = {pa.shape[0]} exceeds the assignment cap {ASSIGNMENT_CAP}")
    C = cost_matrix(pa, pb)
    rows, cols = linear_sum_assignment(C)
    return float(np.sqrt(C[rows, cols].mean()))


def w2_exact_1d(a, b):
    """Exact W2 between equal-size clouds on the line via order statistics."""
    pa, pb = _points(a), _points(b)
    if pa.shape[1] != 1 or pb.shape[1] != 1:
        raise DomainError("w2_exact_1d needs one-dimensional clouds")
    if pa.shape[0] != pb.shape[0]:
        raise DomainError(f"clouds differ in size: {pa.shape[0]} vs {pb.shape[0]}")
    diff = np.sort(pa[:, 0]) - np.sort(pb[:, 0])
    return float(np.sqrt(np.mean(diff * diff)))


def default_epsilon(a, b, scale=0.01):
    """``scale`` times the mean squared distance between the two clouds."""
    return scale * float(cost_matrix(a, b).mean())


@dataclass(frozen=True)
class SinkhornResult:
    cost: float
    epsilon: float
    n_iter: int
    violation: float
    converged: bool


# Scalings beyond this magnitude are folded back into the log potentials.
_ABSORB = 1e30


def sinkhorn(a, b, epsilon=None, *, max_iter=500, tol=1e-7, anneal=True):
    """Entropic optimal transport between two uniform clouds.

    Iterations run on scalings ``u, v`` against the kernel
    ``exp((f + g - C) / eps)``; whenever a scaling grows past ``1e30`` or a
    kernel row underflows, it is absorbed into the log potentials ``f, g``
    with an exact log-domain update. With ``anneal`` the regularization
    starts at the largest cost and halves down to ``epsilon``, warm-starting
    the potentials; ``max_iter`` and ``tol`` apply to the final stage.
    ``violation`` is the L1 error of the row marginal.

    Returns
    -------
    SinkhornResult
        ``cost`` is the transport cost ``<P, C>`` of the entropic plan.
    """
    C = cost_matrix(a, b)
    n, m = C.shape
    if epsilon is None:
        # Coincident clouds have zero cost for any regularization.
        epsilon = 0.01 * float(C.mean()) or 1.0
    elif not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    mu = np.full(n, 1.0 / n)
    nu = np.full(m, 1.0 / m)
    f = np.zeros(n)
    g = np.zeros(m)

    def kernel(eps):
        return np.exp((f[:, None] + g[None, :] - C) / eps)

    def log_sweep(eps):
        nonlocal f, g
        f = -eps * logsumexp((g[None, :] - C) / eps - np.log(m), axis=1)
        g = -eps * logsumexp((f[:, None] - C) / eps - np.log(n), axis=0)

    def stage(eps, iters, check):
        nonlocal f, g
        log_sweep(eps)
        K = kernel(eps)
        u, v = np.ones(n), np.ones(m)
        violation, it = np.inf, 0
        while it < iters:
            it += 1
            Kv = K @ v
            u = mu / Kv if Kv.all() else None
            if u is not None:
                KTu = K.T @ u
                v = nu / KTu if KTu.all() else None
            if u is None or v is None or max(u.max(), v.max()) > _ABSORB:
                if u is not None and v is not None:
                    f, g = f + eps * np.log(u), g + eps * np.log(v)
                log_sweep(eps)
                K = kernel(eps)
                u, v = np.ones(n), np.ones(m)
            if check and (it % 10 == 0 or it == iters):
                violation = float(np.abs(u * (K @ v) - mu).sum())
                if violation < tol:
                    break
        f, g = f + eps * np.log(u), g + eps * np.log(v)
        return it, violation

    if anneal:
        eps = max(float(C.max()), epsilon)
        while eps > epsilon:
            stage(eps, 10, False)
            eps = max(eps / 2.0, epsilon)

    it, violation = stage(epsilon, max_iter, True)
    P = kernel(epsilon)
    if not np.isfinite(violation):
        violation = float(np.abs(P.sum(axis=1) - mu).sum())
    converged = violation < tol
    if not converged:
        warnings.warn(
            f"Sinkhorn stopped after {it} iterations with marginal violation {violation:.3e}",
            ConvergenceWarning,
            stacklevel=2,
        )
    return SinkhornResult(float((P * C).sum()), float(epsilon), it, violation, converged)


def sinkhorn_cost(a, b, epsilon=None, **kwargs):
    """Transport cost of the entropic plan; see :func:`sinkhorn`."""
    return sinkhorn(a, b, epsilon, **kwargs).cost
