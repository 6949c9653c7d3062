"""Gaussian-process regression with the exponentiated-quadratic kernel.

The kernel is ``k(x, x') = theta * exp(-gamma * |x - x'|^2)`` with a zero prior
mean. :func:`fit_gp` standardizes ``y`` before fitting, so the fitted
hyperparameters live in standardized units while every mean, variance and
gradient returned by :class:`GPPosterior` is reported in the units of ``y``.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

from lipbatch import kernels
from lipbatch.errors import DegenerateData, SingularKernel

JITTER_START = 1e-10
JITTER_MAX = 1e-4
NOISE_FLOOR = 1e-8

# log-parameter box used by the marginal-likelihood optimizer: log theta, log gamma, log noise
_LOG_BOUNDS = ((-9.0, 9.0), (-12.0, 12.0), (np.log(NOISE_FLOOR), 3.0))
_RESTART_RANGE = (-4.0, 4.0)


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box ``[lower, upper]`` in R^d."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size < 1:
            raise ValueError("lower and upper must be 1-d vectors of equal length >= 1")
        if not np.all(lower < upper):
            raise ValueError("lower[i] < upper[i] is required for every i")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self):
        return self.lower.size

    @property
    def width(self):
        return self.upper - self.lower

    def contains(self, X, tol=0.0):
        X = np.atleast_2d(X)
        return np.all((X >= self.lower - tol) & (X <= self.upper + tol), axis=1)

    def clip(self, X):
        return np.clip(X, self.lower, self.upper)

    def to_unit(self, X):
        return (np.asarray(X, dtype=float) - self.lower) / self.width

    def from_unit(self, U):
        return self.lower + np.asarray(U, dtype=float) * self.width


@dataclass(frozen=True)
class Dataset:
    """Observed inputs ``X`` (n, d), values ``y`` (n,) and their domain."""

    X: np.ndarray
    y: np.ndarray
    domain: BoxDomain

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.shape[0] != y.size:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.size} values")
        if X.shape[0] < 1:
            raise ValueError("a dataset needs at least one observation")
        if X.shape[1] != self.domain.dim:
            raise ValueError("X columns do not match the domain dimension")
        if not np.all(np.isfinite(y)):
            raise ValueError("y must be finite")
        if not np.all(self.domain.contains(X, tol=1e-12)):
            raise ValueError("every row of X must lie inside the domain")
        object.__setattr__(self, "X", np.ascontiguousarray(X))
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.y.size

    def append(self, X_new, y_new):
        X_new = np.atleast_2d(X_new)
        return Dataset(
            np.vstack([self.X, X_new]),
            np.concatenate([self.y, np.asarray(y_new, dtype=float).reshape(-1)]),
            self.domain,
        )


@dataclass(frozen=True)
class Hyperparams:
    theta: float
    gamma: float
    noise_var: float

    def __post_init__(self):
        if not self.theta > 0 or not self.gamma > 0 or not self.noise_var >= 0:
            raise ValueError("need theta > 0, gamma > 0 and noise_var >= 0")


@dataclass(frozen=True)
class GradPosterior:
    """Gaussian posterior over the gradient of f at one point."""

    mean_grad: np.ndarray
    cov_grad: np.ndarray


def eq_kernel(x1, x2, hyper):
    """``theta * exp(-gamma * |x1 - x2|^2)`` for two single points."""
    diff = np.asarray(x1, dtype=float) - np.asarray(x2, dtype=float)
    return float(hyper.theta * np.exp(-hyper.gamma * np.dot(diff, diff)))


def _factorize(K, theta):
    """Cholesky of ``K`` with escalating diagonal jitter.

    Returns the lower factor and the jitter that was added.
    """
    n = K.shape[0]
    jitter = JITTER_START * theta
    while jitter <= JITTER_MAX * theta * (1 + 1e-9):
        try:
            return np.linalg.cholesky(K + jitter * np.eye(n)), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise SingularKernel(f"kernel matrix not factorizable with jitter up to {JITTER_MAX:g} * theta")


def _lml_from_parts(chol, y):
    alpha = cho_solve((chol, True), y, check_finite=False)
    n = y.size
    return (
        -0.5 * float(y @ alpha)
        - float(np.sum(np.log(np.diag(chol))))
        - 0.5 * n * np.log(2.0 * np.pi)
    )


def log_marginal_likelihood(data, hyper):
    """Log marginal likelihood of ``data.y`` under a zero-mean GP with ``hyper``.

    Computed on the raw (unstandardized) values.
    """
    K = kernels.eq_cross(data.X, data.X, hyper.theta, hyper.gamma)
    K[np.diag_indices_from(K)] += hyper.noise_var
    chol, _ = _factorize(K, hyper.theta)
    return _lml_from_parts(chol, data.y)


class GPPosterior:
    """Fitted GP conditioned on a dataset.

    Immutable after construction. Hyperparameters apply to the standardized
    targets ``(y - y_shift) / y_scale``; with ``standardize=False`` the shift is
    zero and the scale one, so they apply to ``y`` directly.

    Parameters
    ----------
    data : Dataset
    hyper : Hyperparams
    standardize : bool
        Center and scale ``y`` to zero mean and unit variance.
    y_shift, y_scale : float, optional
        Explicit standardization constants; they take precedence over
        ``standardize`` and are used to condition on fake observations
        without moving the scale.
    """

    def __init__(self, data, hyper, standardize=False, y_shift=None, y_scale=None):
        self.data = data
        self.hyper = hyper
        self.degenerate = False
        if y_shift is not None:
            self.y_shift = float(y_shift)
            self.y_scale = float(y_scale)
        elif standardize:
            self.y_shift = float(np.mean(data.y))
            std = float(np.std(data.y))
            if std <= 0.0:
                self.degenerate = True
                std = 1.0
            self.y_scale = std
        else:
            self.y_shift, self.y_scale = 0.0, 1.0
        self.y_std = (data.y - self.y_shift) / self.y_scale
        K = kernels.eq_cross(data.X, data.X, hyper.theta, hyper.gamma)
        K[np.diag_indices_from(K)] += hyper.noise_var
        chol, self.jitter = _factorize(K, hyper.theta)
        self.chol_factor = np.ascontiguousarray(chol)
        self.alpha = np.ascontiguousarray(
            cho_solve((self.chol_factor, True), self.y_std, check_finite=False)
        )
        self.fit_info = None

    @property
    def X(self):
        return self.data.X

    @property
    def domain(self):
        return self.data.domain

    @property
    def dim(self):
        return self.data.domain.dim

    def predict_std(self, Xq, with_grad=False):
        """Mean, variance and gradients in standardized units.

        Returns ``(mu, var, dmu, dvar)``; ``var`` is clamped at zero and
        ``dvar`` is zeroed wherever the clamp is active.
        """
        Xq = np.ascontiguousarray(np.atleast_2d(Xq), dtype=float)
        mu, var, dmu, dvar = kernels.gp_predict(
            Xq, self.X, self.alpha, self.chol_factor,
            self.hyper.theta, self.hyper.gamma, bool(with_grad),
        )
        clamped = var <= 0.0
        if np.any(clamped):
            var = np.where(clamped, 0.0, var)
            dvar[clamped] = 0.0
        return mu, var, dmu, dvar

    def predict_raw_var(self, Xq):
        """Unclamped predictive variance in standardized units (for auditing the clamp)."""
        Xq = np.ascontiguousarray(np.atleast_2d(Xq), dtype=float)
        _, var, _, _ = kernels.gp_predict(
            Xq, self.X, self.alpha, self.chol_factor,
            self.hyper.theta, self.hyper.gamma, False,
        )
        return var

    def predict(self, Xq, with_grad=False):
        """Posterior mean and variance in the units of ``y``.

        With ``with_grad`` also returns the input gradients of both.
        """
        mu, var, dmu, dvar = self.predict_std(Xq, with_grad)
        s = self.y_scale
        mu = self.y_shift + s * mu
        var = s * s * var
        if not with_grad:
            return mu, var
        return mu, var, s * dmu, s * s * dvar

    def mean_grad(self, Xq):
        """Gradient of the posterior mean (units of ``y``) at each query row."""
        _, _, dmu, _ = self.predict_std(Xq, with_grad=True)
        return self.y_scale * dmu

    def mean_grad_hess(self, Xq):
        Xq = np.ascontiguousarray(np.atleast_2d(Xq), dtype=float)
        g, H = kernels.mean_grad_hess(Xq, self.X, self.alpha, self.hyper.theta, self.hyper.gamma)
        return self.y_scale * g, self.y_scale * H

    def condition_on(self, X_new, y_new):
        """Posterior with extra observations, same hyperparameters and scaling."""
        return GPPosterior(
            self.data.append(X_new, y_new), self.hyper,
            y_shift=self.y_shift, y_scale=self.y_scale,
        )


def posterior_mean_var(gp, x_star):
    """Posterior mean and (clamped) variance at a single point."""
    mu, var = gp.predict(np.atleast_2d(x_star))
    return float(mu[0]), float(var[0])


def posterior_gradient(gp, x_star):
    """Gaussian posterior of the gradient of f at ``x_star``.

    Mean ``dK K^-1 y`` and covariance ``2 gamma theta I - dK K^-1 dK^T`` where
    ``dK`` holds the derivatives of the cross-covariances with respect to
    ``x_star``. Both are returned in the units of ``y``.
    """
    x = np.asarray(x_star, dtype=float).reshape(1, -1)
    th, ga = gp.hyper.theta, gp.hyper.gamma
    k = kernels.eq_cross(x, gp.X, th, ga)[0]
    dK = -2.0 * ga * (x - gp.X) * k[:, None]  # (n, d)
    mean = dK.T @ gp.alpha
    W = solve_triangular(gp.chol_factor, dK, lower=True, check_finite=False)
    cov = 2.0 * ga * th * np.eye(gp.dim) - W.T @ W
    cov = 0.5 * (cov + cov.T)
    s = gp.y_scale
    return GradPosterior(mean_grad=s * mean, cov_grad=s * s * cov)


def _neg_lml_and_grad(logp, X, y, sqdist):
    theta, gamma, noise = np.exp(logp)
    E = np.exp(-gamma * sqdist)
    K = theta * E
    K[np.diag_indices_from(K)] += noise
    try:
        chol, jitter = _factorize(K, theta)
    except SingularKernel:
        return 1e25, np.zeros(3)
    alpha = cho_solve((chol, True), y, check_finite=False)
    n = y.size
    lml = -0.5 * float(y @ alpha) - float(np.sum(np.log(np.diag(chol)))) - 0.5 * n * np.log(2 * np.pi)
    Kinv = cho_solve((chol, True), np.eye(n), check_finite=False)
    A = np.outer(alpha, alpha) - Kinv
    dtheta = theta * E
    dgamma = -gamma * sqdist * theta * E
    grad = 0.5 * np.array([
        np.sum(A * dtheta),
        np.sum(A * dgamma),
        noise * np.trace(A),
    ])
    return -lml, -grad


def fit_gp(data, restarts=10, rng=None):
    """Fit hyperparameters by maximizing the log marginal likelihood.

    Targets are standardized first. Each restart draws log theta, log gamma
    and log noise uniformly from [-4, 4] and runs L-BFGS-B with analytic
    gradients; the restart with the highest likelihood wins (ties go to the
    lower restart index).

    Parameters
    ----------
    data : Dataset
        Needs at least two observations.
    restarts : int
    rng : numpy.random.Generator or int, optional

    Returns
    -------
    GPPosterior
        ``fit_info`` holds the starting points and likelihoods of every restart.
    """
    if data.n < 2:
        raise ValueError("fit_gp needs at least two observations")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = np.random.default_rng(rng)
    shift = float(np.mean(data.y))
    scale = float(np.std(data.y))
    degenerate = scale <= 0.0
    if degenerate:
        warnings.warn("all observed values are identical; fitting at the noise floor", DegenerateData)
        scale = 1.0
    y = (data.y - shift) / scale
    X = data.X
    sq = np.sum(X * X, axis=1)
    sqdist = np.maximum(sq[:, None] + sq[None, :] - 2.0 * X @ X.T, 0.0)

    lo = np.array([b[0] for b in _LOG_BOUNDS])
    hi = np.array([b[1] for b in _LOG_BOUNDS])
    starts = np.clip(rng.uniform(*_RESTART_RANGE, size=(restarts, 3)), lo, hi)
    start_lml, final_lml, finals = [], [], []
    for p0 in starts:
        f0, _ = _neg_lml_and_grad(p0, X, y, sqdist)
        res = minimize(
            _neg_lml_and_grad, p0, args=(X, y, sqdist), jac=True,
            method="L-BFGS-B", bounds=_LOG_BOUNDS,
        )
        p, f = (res.x, res.fun) if res.fun <= f0 else (p0, f0)
        start_lml.append(-f0)
        final_lml.append(-f)
        finals.append(p)
    best = int(np.argmax(final_lml))
    theta, gamma, noise = np.exp(finals[best])
    hyper = Hyperparams(float(theta), float(gamma), float(max(noise, NOISE_FLOOR)))
    gp = GPPosterior(data, hyper, y_shift=shift, y_scale=scale)
    gp.degenerate = degenerate
    gp.fit_info = {
        "starts": np.exp(starts),
        "start_lml": np.array(start_lml),
        "final_lml": np.array(final_lml),
        "best_restart": best,
    }
    return gp
