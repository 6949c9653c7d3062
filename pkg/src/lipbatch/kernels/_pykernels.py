"""Pure numpy implementation of the hot kernels.

Every function here has a twin with an identical signature in the compiled
``_ckernels`` module. Inputs are C-contiguous float64 arrays.
"""

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import erfc, erfcx

_SQRT2 = np.sqrt(2.0)
_SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)
_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def eq_cross(A, B, theta, gamma):
    """Exponentiated-quadratic cross covariance between rows of A and B."""
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * A @ B.T
    )
    np.maximum(sq, 0.0, out=sq)
    return theta * np.exp(-gamma * sq)


def gp_predict(Xq, X, alpha, chol, theta, gamma, with_grad):
    """Posterior mean, raw variance and their input gradients at query rows.

    Parameters
    ----------
    Xq : (m, d) array
        Query locations.
    X : (n, d) array
        Training inputs.
    alpha : (n,) array
        Solution of ``(K + noise I) alpha = y``.
    chol : (n, n) array
        Lower Cholesky factor of ``K + noise I``.
    theta, gamma : float
        Kernel variance and inverse squared lengthscale.
    with_grad : bool
        When false the gradient arrays are returned filled with zeros.

    Returns
    -------
    mu, var : (m,) arrays
        ``var`` is not clamped, so tiny negative values can appear.
    dmu, dvar : (m, d) arrays
    """
    m, d = Xq.shape
    k = eq_cross(Xq, X, theta, gamma)
    mu = k @ alpha
    v = solve_triangular(chol, k.T, lower=True, check_finite=False)
    var = theta - np.sum(v * v, axis=0)
    dmu = np.zeros((m, d))
    dvar = np.zeros((m, d))
    if with_grad:
        w = solve_triangular(chol, v, lower=True, trans="T", check_finite=False).T
        diff = Xq[:, None, :] - X[None, :, :]
        dk = -2.0 * gamma * diff * k[:, :, None]
        dmu = np.einsum("mnd,n->md", dk, alpha)
        dvar = -2.0 * np.einsum("mnd,mn->md", dk, w)
    return mu, var, dmu, dvar


def mean_grad_hess(Xq, X, alpha, theta, gamma):
    """Gradient and Hessian of the posterior mean at query rows."""
    d = Xq.shape[1]
    k = eq_cross(Xq, X, theta, gamma)
    diff = Xq[:, None, :] - X[None, :, :]
    ka = k * alpha[None, :]
    grad = -2.0 * gamma * np.einsum("mnd,mn->md", diff, ka)
    outer = np.einsum("mni,mnj,mn->mij", diff, diff, ka)
    hess = 4.0 * gamma * gamma * outer
    hess -= 2.0 * gamma * ka.sum(axis=1)[:, None, None] * np.eye(d)[None]
    return grad, hess


def _log_ndtr_and_ratio(s):
    """log Phi(s) and phi(s)/Phi(s), stable for very negative s."""
    s = np.asarray(s, dtype=float)
    logcdf = np.empty_like(s)
    ratio = np.empty_like(s)
    neg = s < 0.0
    t = -s[neg] / _SQRT2
    ex = erfcx(t)
    logcdf[neg] = np.log(0.5 * ex) - 0.5 * s[neg] ** 2
    ratio[neg] = _SQRT_2_OVER_PI / ex
    pos = ~neg
    tail = 0.5 * erfc(s[pos] / _SQRT2)
    cdf = 1.0 - tail
    logcdf[pos] = np.log1p(-tail)
    ratio[pos] = np.exp(-0.5 * s[pos] ** 2 - _LOG_SQRT_2PI) / cdf
    return logcdf, ratio


def log_penalizers(Xq, centers, mu_c, sigma_c, lips, M):
    """Sum of log local penalizers and its gradient at query rows.

    The penalizer around center ``c`` is ``Phi((L |x - c| - M + mu_c) / sigma_c)``.
    At ``x == c`` the gradient contribution is defined as zero.
    """
    m, d = Xq.shape
    total = np.zeros(m)
    grad = np.zeros((m, d))
    for j in range(centers.shape[0]):
        diff = Xq - centers[j]
        r = np.sqrt(np.sum(diff * diff, axis=1))
        s = (lips[j] * r - M + mu_c[j]) / sigma_c[j]
        logcdf, ratio = _log_ndtr_and_ratio(s)
        total += logcdf
        safe_r = np.where(r > 0.0, r, 1.0)
        scale = np.where(r > 0.0, ratio * lips[j] / (sigma_c[j] * safe_r), 0.0)
        grad += scale[:, None] * diff
    return total, grad
