"""Local penalizers and the penalized acquisition.

The penalizer around an already chosen batch point ``x_j`` is the probability
that ``x`` lies outside the ball of radius ``(M - f(x_j)) / L`` around
``x_j`` when ``f(x_j) ~ N(mu_c, sigma_c^2)``::

    phi(x; x_j) = Phi((L |x - x_j| - M + mu_c) / sigma_c) = 0.5 erfc(-z)

The penalized acquisition ``g(alpha(x)) * prod_j phi(x; x_j)`` is maximized in
log space, where the penalizers contribute additive terms.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc
from scipy.stats import qmc

from lipbatch import kernels
from lipbatch.acquisition import (
    acquisition_value,
    log_transformed_acquisition,
    transform,
)
from lipbatch.errors import NonPositiveValue

SIGMA_FLOOR = 1e-6
L_FLOOR = 1e-7


@dataclass(frozen=True)
class PenalizerParams:
    """Parameters of one local penalizer.

    ``sigma_c`` and ``lipschitz`` are raised to their floors on construction.
    """

    center: np.ndarray
    mu_c: float
    sigma_c: float
    lipschitz: float
    incumbent: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(-1))
        object.__setattr__(self, "sigma_c", max(float(self.sigma_c), SIGMA_FLOOR))
        object.__setattr__(self, "lipschitz", max(float(self.lipschitz), L_FLOOR))

    def z(self, x):
        r = np.linalg.norm(np.asarray(x, dtype=float) - self.center)
        return (self.lipschitz * r - self.incumbent + self.mu_c) / np.sqrt(2.0 * self.sigma_c**2)


def penalizer_value(p, x):
    return float(0.5 * erfc(-p.z(x)))


def penalizer_grad(p, x):
    """Analytic gradient of :func:`penalizer_value`; zero at the center."""
    x = np.asarray(x, dtype=float)
    diff = x - p.center
    r = np.linalg.norm(diff)
    if r == 0.0:
        return np.zeros_like(diff)
    z = p.z(x)
    dz = p.lipschitz * diff / (np.sqrt(2.0) * p.sigma_c * r)
    return np.exp(-z * z) / np.sqrt(np.pi) * dz


def _stack(penalizers, d):
    if not penalizers:
        return None
    return (
        np.ascontiguousarray([p.center for p in penalizers], dtype=float).reshape(-1, d),
        np.array([p.mu_c for p in penalizers]),
        np.array([p.sigma_c for p in penalizers]),
        np.array([p.lipschitz for p in penalizers]),
    )


@dataclass(frozen=True)
class PenalizedAcquisition:
    """``g(alpha(x)) * prod_j phi(x; x_j)`` for a fitted GP.

    All penalizers share one incumbent ``M``; it is taken from the first
    penalizer in the list.
    """

    gp: object
    spec: object
    penalizers: tuple = ()
    y_best: float = None
    _packed: tuple = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "penalizers", tuple(self.penalizers))
        object.__setattr__(self, "_packed", _stack(self.penalizers, self.gp.dim))

    def with_penalizer(self, p):
        return PenalizedAcquisition(self.gp, self.spec, self.penalizers + (p,), self.y_best)

    def log_value_grad(self, X):
        """Batched ``log`` of the penalized acquisition and its gradient."""
        X = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
        logv, grad = log_transformed_acquisition(self.gp, self.spec, X, self.y_best)
        if self._packed is not None:
            centers, mu_c, sigma_c, lips = self._packed
            lp, glp = kernels.log_penalizers(
                X, centers, mu_c, sigma_c, lips, self.penalizers[0].incumbent
            )
            logv = logv + lp
            grad = grad + glp
        return logv, grad


def penalized_value(pa, x):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    val = float(transform(pa.spec.transform, acquisition_value(pa.gp, pa.spec, x, pa.y_best))[0])
    for p in pa.penalizers:
        val *= penalizer_value(p, x[0])
    return val


def log_penalized_grad(pa, x):
    """Gradient of ``log penalized_value(pa, x)`` at a single point."""
    logv, grad = pa.log_value_grad(np.atleast_2d(x))
    if not np.isfinite(logv[0]):
        raise NonPositiveValue("penalized acquisition is not positive at x")
    return grad[0]


def projected_ascent(fun, U0, max_iter=200, tol=1e-6):
    """Batched projected gradient ascent on the unit cube.

    Parameters
    ----------
    fun : callable
        Maps an (m, d) array of points in [0, 1]^d to ``(values, gradients)``.
    U0 : (m, d) array
        Starting points, one ascent per row.
    max_iter : int
    tol : float
        A start stops once its projected-gradient norm drops below ``tol``.

    Returns
    -------
    U, values : arrays
        Final points and their values. Each row never decreases in value.
    """
    U = np.clip(np.array(U0, dtype=float), 0.0, 1.0)
    val, grad = fun(U)
    gnorm = np.linalg.norm(grad, axis=1)
    step = 0.1 / np.maximum(gnorm, 1e-12)
    active = np.isfinite(val)
    for _ in range(max_iter):
        pg = np.clip(U + grad, 0.0, 1.0) - U
        active &= (np.linalg.norm(pg, axis=1) > tol) & (step > 1e-14)
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        cand = np.clip(U[idx] + step[idx, None] * grad[idx], 0.0, 1.0)
        move = cand - U[idx]
        cval, cgrad = fun(cand)
        gain = np.sum(grad[idx] * move, axis=1)
        ok = np.isfinite(cval) & (cval >= val[idx] + 1e-4 * gain) & (cval >= val[idx])
        acc = idx[ok]
        U[acc] = cand[ok]
        val[acc] = cval[ok]
        grad[acc] = cgrad[ok]
        step[acc] *= 2.0
        step[idx[~ok]] *= 0.5
    return U, val


def maximize_penalized(pa, domain, seeds=10, rng=None, screen=1000, max_iter=200, tol=1e-6):
    """Maximize the penalized acquisition over a box.

    Starts are the ``seeds`` best points of a Latin-hypercube screening
    sample plus every penalizer center nudged by a small random offset. Each
    start runs a projected gradient ascent on the log penalized acquisition
    in unit-cube coordinates; the best end point wins, ties going to the
    earliest start.
    """
    rng = np.random.default_rng(rng)
    d = domain.dim
    width = domain.width

    def fun(U):
        logv, grad = pa.log_value_grad(domain.from_unit(U))
        return logv, grad * width

    pool = qmc.LatinHypercube(d, rng=rng).random(max(screen, seeds))
    pool_val, _ = fun(pool)
    order = np.argsort(-np.where(np.isfinite(pool_val), pool_val, -np.inf), kind="stable")
    starts = [pool[order[:seeds]]]
    if pa.penalizers:
        centers = domain.to_unit(np.array([p.center for p in pa.penalizers]))
        starts.append(np.clip(centers + 0.01 * rng.standard_normal(centers.shape), 0.0, 1.0))
    U0 = np.vstack(starts)
    U, val = projected_ascent(fun, U0, max_iter=max_iter, tol=tol)
    safe = np.where(np.isfinite(val), val, -np.inf)
    best = int(np.argmax(safe))
    return domain.clip(domain.from_unit(U[best]))
