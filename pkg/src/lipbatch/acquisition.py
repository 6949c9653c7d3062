"""Expected improvement, upper confidence bound and positivity transforms.

Everything here maximizes: ``y_best`` is the largest value observed so far.
Acquisitions built from a :class:`~lipbatch.gp.GPPosterior` are evaluated on
the GP's standardized scale, which keeps the soft-plus transform independent
of the units of the objective.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx, ndtr

from lipbatch.errors import NonPositiveValue

_SQRT2 = np.sqrt(2.0)
_SQRT_PI_OVER_2 = np.sqrt(np.pi / 2.0)
_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)

KINDS = ("ei", "ucb")
TRANSFORMS = ("identity", "softplus", "exp")


@dataclass(frozen=True)
class AcquisitionSpec:
    """Which acquisition to use and how to make it strictly positive.

    ``transform`` defaults to identity for EI and soft-plus for UCB.
    """

    kind: str
    kappa: float = None
    transform: str = None

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in KINDS:
            raise ValueError(f"unknown acquisition {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "ucb":
            if self.kappa is None or not self.kappa >= 0:
                raise ValueError("UCB needs kappa >= 0")
        elif self.kappa is not None:
            raise ValueError("kappa is only meaningful for UCB")
        transform = self.transform or ("identity" if kind == "ei" else "softplus")
        if transform not in TRANSFORMS:
            raise ValueError(f"unknown transform {self.transform!r}")
        if transform == "identity" and kind != "ei":
            raise ValueError("the identity transform needs a non-negative acquisition (EI)")
        object.__setattr__(self, "transform", transform)


def ei(mu, sigma, y_best):
    """Expected improvement over ``y_best`` of a N(mu, sigma^2) variable.

    ``sigma * (u Phi(u) + phi(u))`` with ``u = (mu - y_best) / sigma``;
    ``max(mu - y_best, 0)`` where ``sigma == 0``.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    diff = mu - y_best
    pos = sigma > 0
    safe = np.where(pos, sigma, 1.0)
    with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
        u = diff / safe
        upper = diff * ndtr(u) + safe * np.exp(-0.5 * u * u - _LOG_SQRT_2PI)
        lower = safe * np.exp(_log_h(np.minimum(u, 0.0))[0])
        val = np.where(u >= 0, upper, lower)
    out = np.where(pos, np.maximum(val, 0.0), np.maximum(diff, 0.0))
    return out if out.ndim else float(out)


def ucb(mu, sigma, kappa):
    """``mu + kappa * sigma``."""
    out = np.asarray(mu, dtype=float) + kappa * np.asarray(sigma, dtype=float)
    return out if out.ndim else float(out)


def _log_h(u):
    """log(u Phi(u) + phi(u)) and its derivative Phi(u) / h(u)."""
    u = np.asarray(u, dtype=float)
    logh = np.empty_like(u)
    dlogh = np.empty_like(u)
    pos = u >= 0
    up = u[pos]
    cdf = ndtr(up)
    h = up * cdf + np.exp(-0.5 * up * up - _LOG_SQRT_2PI)
    logh[pos] = np.log(h)
    dlogh[pos] = cdf / h
    un = u[~pos]
    mills = _SQRT_PI_OVER_2 * erfcx(-un / _SQRT2)  # Phi(u) / phi(u)
    far = un < -20.0
    inv2 = 1.0 / (un * un)
    q = np.where(far, inv2 * (1.0 - 3.0 * inv2 + 15.0 * inv2 * inv2), 1.0 + un * mills)
    logh[~pos] = -0.5 * un * un - _LOG_SQRT_2PI + np.log(q)
    dlogh[~pos] = mills / q
    return logh, dlogh


def transform(g_kind, z):
    """Apply the positivity transform ``g``."""
    z = np.asarray(z, dtype=float)
    if g_kind == "identity":
        out = z.copy()
    elif g_kind == "softplus":
        big = z > 30.0
        out = np.where(big, z + np.exp(-np.where(big, z, 0.0)), np.log1p(np.exp(np.minimum(z, 30.0))))
    elif g_kind == "exp":
        out = np.exp(z)
    else:
        raise ValueError(f"unknown transform {g_kind!r}")
    return out if out.ndim else float(out)


def transform_deriv(g_kind, z):
    """Derivative ``g'(z)``."""
    z = np.asarray(z, dtype=float)
    if g_kind == "identity":
        out = np.ones_like(z)
    elif g_kind == "softplus":
        out = 0.5 * (1.0 + np.tanh(0.5 * z))
    elif g_kind == "exp":
        out = np.exp(z)
    else:
        raise ValueError(f"unknown transform {g_kind!r}")
    return out if out.ndim else float(out)


def log_transform(g_kind, z):
    """``log g(z)`` and ``g'(z) / g(z)``, overflow safe.

    For the identity transform non-positive ``z`` gives ``-inf`` and a zero
    derivative; callers that need a hard error check for that.
    """
    z = np.asarray(z, dtype=float)
    if g_kind == "identity":
        pos = z > 0
        safe = np.where(pos, z, 1.0)
        return np.where(pos, np.log(safe), -np.inf), np.where(pos, 1.0 / safe, 0.0)
    if g_kind == "exp":
        return z.copy(), np.ones_like(z)
    if g_kind == "softplus":
        sp = transform("softplus", z)
        low = z < -30.0
        ez = np.exp(np.minimum(z, -30.0))
        logsp = np.where(low, z + np.log1p(-0.5 * ez), np.log(np.where(low, 1.0, sp)))
        dlog = np.where(low, 1.0 - 0.5 * ez, transform_deriv("softplus", z) / np.where(low, 1.0, sp))
        return logsp, dlog
    raise ValueError(f"unknown transform {g_kind!r}")


def incumbent(gp):
    """Best (largest) observed value, in the units of ``y``."""
    return float(np.max(gp.data.y))


def _standardized_best(gp, y_best):
    if y_best is None:
        y_best = incumbent(gp)
    return (y_best - gp.y_shift) / gp.y_scale


def acquisition_value(gp, spec, X, y_best=None):
    """Acquisition at each row of ``X`` on the GP's standardized scale."""
    X = np.atleast_2d(X)
    mu, var, _, _ = gp.predict_std(X)
    sigma = np.sqrt(var)
    if spec.kind == "ei":
        return np.asarray(ei(mu, sigma, _standardized_best(gp, y_best)))
    return np.asarray(ucb(mu, sigma, spec.kappa))


def acquisition_value_grad(gp, spec, X, y_best=None):
    """Acquisition values and input gradients at each row of ``X``."""
    X = np.atleast_2d(X)
    mu, var, dmu, dvar = gp.predict_std(X, with_grad=True)
    sigma = np.sqrt(var)
    pos = sigma > 0
    dsigma = np.where(pos[:, None], dvar / (2.0 * np.where(pos, sigma, 1.0))[:, None], 0.0)
    if spec.kind == "ucb":
        return np.asarray(ucb(mu, sigma, spec.kappa)), dmu + spec.kappa * dsigma
    best = _standardized_best(gp, y_best)
    val = np.asarray(ei(mu, sigma, best))
    u = np.where(pos, (mu - best) / np.where(pos, sigma, 1.0), 0.0)
    cdf = np.where(pos, ndtr(u), (mu > best).astype(float))
    pdf = np.where(pos, np.exp(-0.5 * u * u - _LOG_SQRT_2PI), 0.0)
    return val, cdf[:, None] * dmu + pdf[:, None] * dsigma


def acquisition_grad(gp, spec, x, y_best=None):
    """Gradient of the acquisition at a single point ``x``."""
    _, g = acquisition_value_grad(gp, spec, np.atleast_2d(x), y_best)
    return g[0]


def log_transformed_acquisition(gp, spec, X, y_best=None):
    """``log g(alpha(x))`` and its gradient for each row of ``X``.

    EI under the identity transform goes through a log-domain formula so that
    points far from the incumbent keep a finite value and a usable gradient.
    """
    X = np.atleast_2d(X)
    if spec.kind == "ei" and spec.transform == "identity":
        mu, var, dmu, dvar = gp.predict_std(X, with_grad=True)
        best = _standardized_best(gp, y_best)
        sigma = np.sqrt(var)
        pos = sigma > 0
        safe = np.where(pos, sigma, 1.0)
        dsigma = dvar / (2.0 * safe)[:, None]
        u = (mu - best) / safe
        logh, dlogh = _log_h(u)
        logv = np.log(safe) + logh
        du = (dmu - u[:, None] * dsigma) / safe[:, None]
        grad = dsigma / safe[:, None] + dlogh[:, None] * du
        if not np.all(pos):
            diff = mu - best
            ok = ~pos & (diff > 0)
            logv = np.where(pos, logv, np.where(ok, np.log(np.where(ok, diff, 1.0)), -np.inf))
            zero_grad = dmu / np.where(ok, diff, 1.0)[:, None]
            grad = np.where(pos[:, None], grad, np.where(ok[:, None], zero_grad, 0.0))
        return logv, grad
    val, dval = acquisition_value_grad(gp, spec, X, y_best)
    logg, dlogg = log_transform(spec.transform, val)
    return logg, dlogg[:, None] * dval


def check_positive(spec, value):
    if spec.transform == "identity" and not value > 0:
        raise NonPositiveValue(f"acquisition value {value!r} is not positive under the identity transform")
