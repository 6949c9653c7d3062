"""Estimates of the objective's maximum ``M`` and Lipschitz constant ``L``.

``L`` is approximated by the largest norm of the GP posterior-mean gradient
over the domain. The gradient covariance is ignored, so the estimate is an
approximation and can undershoot the true constant.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from lipbatch.penalization import L_FLOOR, projected_ascent


@dataclass(frozen=True)
class LipschitzEstimate:
    value: float
    argmax_point: np.ndarray
    mode: str = "global"


def argmax_mean(gp, max_iter=200):
    """Maximizer of the posterior mean and the mean there.

    Projected ascent is started from every training input.
    """
    dom = gp.domain

    def fun(U):
        mu, _, dmu, _ = gp.predict(dom.from_unit(U), with_grad=True)
        return mu, dmu * dom.width

    U, val = projected_ascent(fun, dom.to_unit(gp.X), max_iter=max_iter, tol=1e-9)
    best = int(np.argmax(val))
    return dom.clip(dom.from_unit(U[best])), float(val[best])


def estimate_M(gp, mode="max_y"):
    """Estimate the maximum of f.

    ``max_y`` returns the largest observation; ``max_mu`` the maximum of the
    posterior mean found by :func:`argmax_mean`.
    """
    if mode == "max_y":
        return float(np.max(gp.data.y))
    if mode != "max_mu":
        raise ValueError(f"unknown M mode {mode!r}")
    return argmax_mean(gp)[1]


def estimate_L_global(gp, rng=None, samples_per_dim=500, refine=5):
    """Largest posterior-mean gradient norm over the domain.

    A Latin-hypercube sample of ``samples_per_dim * d`` points is scored
    first; the ``refine`` best are then polished with L-BFGS-B on the squared
    gradient norm using the analytic posterior-mean Hessian.
    """
    rng = np.random.default_rng(rng)
    dom = gp.domain
    d = dom.dim
    X = dom.from_unit(qmc.LatinHypercube(d, rng=rng).random(samples_per_dim * d))
    norms = np.linalg.norm(gp.mean_grad(X), axis=1)
    top = np.argsort(-norms, kind="stable")[:refine]
    best_val, best_x = float(norms[top[0]]), X[top[0]]

    def neg_sq(x):
        g, H = gp.mean_grad_hess(x[None, :])
        return -float(g[0] @ g[0]), -2.0 * H[0] @ g[0]

    bounds = list(zip(dom.lower, dom.upper))
    for i in top:
        res = minimize(neg_sq, X[i], jac=True, method="L-BFGS-B", bounds=bounds)
        if np.isfinite(res.fun) and -res.fun > best_val**2:
            best_val, best_x = float(np.sqrt(-res.fun)), dom.clip(res.x)
    return LipschitzEstimate(max(best_val, L_FLOOR), np.asarray(best_x, dtype=float), "global")


def estimate_L_local(gp, x_j):
    """Gradient-norm estimate of ``L`` at a single point."""
    g = gp.mean_grad(np.atleast_2d(x_j))[0]
    return max(float(np.linalg.norm(g)), L_FLOOR)


@dataclass(frozen=True)
class LipschitzReport:
    pairs: int
    violations: int
    max_slope: float

    @property
    def violation_fraction(self):
        return self.violations / self.pairs if self.pairs else 0.0


def verify_lipschitz_bound(f, L, domain, sample_pairs=100_000, rng=None, vectorized=True):
    """Empirically check ``|f(x1) - f(x2)| <= L |x1 - x2|`` on random pairs.

    ``f`` maps an (m, d) array to m values when ``vectorized``; otherwise it
    is called once per point.
    """
    rng = np.random.default_rng(rng)
    X1 = domain.from_unit(rng.random((sample_pairs, domain.dim)))
    X2 = domain.from_unit(rng.random((sample_pairs, domain.dim)))
    if vectorized:
        f1, f2 = np.asarray(f(X1), dtype=float), np.asarray(f(X2), dtype=float)
    else:
        f1 = np.array([f(x) for x in X1], dtype=float)
        f2 = np.array([f(x) for x in X2], dtype=float)
    dist = np.linalg.norm(X1 - X2, axis=1)
    gap = np.abs(f1 - f2)
    violations = int(np.sum(gap > L * dist * (1.0 + 1e-12) + 1e-12))
    slopes = gap[dist > 0] / dist[dist > 0]
    return LipschitzReport(sample_pairs, violations, float(slopes.max()) if slopes.size else 0.0)
