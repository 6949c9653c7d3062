"""Synthetic objectives, a noise wrapper and brute-force grid oracles.

All functions accept a single point of shape (d,) or a batch of shape (m, d)
and return a float or an (m,) array accordingly.
"""

from dataclasses import dataclass

import numpy as np

from lipbatch.gp import BoxDomain


def _as_batch(x, d=None):
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1
    X = x.reshape(1, -1) if single else x
    if d is not None and X.shape[1] != d:
        raise ValueError(f"expected {d} coordinates, got {X.shape[1]}")
    return X, single


def _out(vals, single):
    return float(vals[0]) if single else vals


def gsobol(x, a=None):
    """``prod_i (|4 x_i - 2| + a_i) / (1 + a_i)``, with ``a_i = 1`` by default."""
    X, single = _as_batch(x)
    a = np.ones(X.shape[1]) if a is None else np.asarray(a, dtype=float)
    return _out(np.prod((np.abs(4.0 * X - 2.0) + a) / (1.0 + a), axis=1), single)


def cosines(x):
    """``1 - sum_i ((1.6 x_i - 0.5)^2 - 0.3 cos(3 pi (1.6 x_i - 0.5)))`` in two dimensions."""
    X, single = _as_batch(x, 2)
    u = 1.6 * X - 0.5
    return _out(1.0 - np.sum(u * u - 0.3 * np.cos(3.0 * np.pi * u), axis=1), single)


def cosines_grad(x):
    X, single = _as_batch(x, 2)
    u = 1.6 * X - 0.5
    g = -1.6 * (2.0 * u + 0.9 * np.pi * np.sin(3.0 * np.pi * u))
    return g[0] if single else g


def forrester(x):
    """``(6x - 2)^2 sin(12x - 4)``."""
    x = np.asarray(x, dtype=float)
    t = x.reshape(-1)
    vals = (6.0 * t - 2.0) ** 2 * np.sin(12.0 * t - 4.0)
    return float(vals[0]) if x.ndim == 0 or x.shape == (1,) else vals


@dataclass(frozen=True)
class Benchmark:
    """A named test objective on a box.

    ``sense`` says whether the problem is a minimization or a maximization;
    :meth:`objective` always returns the function to be minimized.
    ``known_opt`` is ``(location, value, source)`` where known.
    """

    name: str
    dim: int
    domain: BoxDomain
    evaluate: object
    sense: str = "min"
    known_opt: tuple = None

    def objective(self):
        f = self.evaluate
        if self.sense == "min":
            return f

        def negated(x):
            val = f(x)
            return -val if np.ndim(val) == 0 else -np.asarray(val)

        return negated


def get_benchmark(name, dim=None):
    """Look up a benchmark by name.

    gsobol takes any ``dim`` (default 2) on ``[-5, 5]^d``; cosines is fixed to
    ``[0, 1]^2`` and forrester to ``[0, 1]``.
    """
    name = name.lower()
    if name == "gsobol":
        d = 2 if dim is None else int(dim)
        if d < 1:
            raise ValueError("gsobol needs dim >= 1")
        return Benchmark(
            "gsobol", d, BoxDomain(-5.0 * np.ones(d), 5.0 * np.ones(d)), gsobol, "min",
            (0.5 * np.ones(d), 2.0 ** (-d), "analytic"),
        )
    if name == "cosines":
        if dim not in (None, 2):
            raise ValueError("cosines is two-dimensional")
        return Benchmark(
            "cosines", 2, BoxDomain([0.0, 0.0], [1.0, 1.0]), cosines, "max",
            (np.array([0.3125, 0.3125]), 1.6, "analytic"),
        )
    if name == "forrester":
        if dim not in (None, 1):
            raise ValueError("forrester is one-dimensional")
        return Benchmark(
            "forrester", 1, BoxDomain([0.0], [1.0]), forrester, "min",
            (np.array([0.757249]), -6.020740, "grid"),
        )
    raise ValueError(f"unknown benchmark {name!r}")


BENCHMARKS = ("gsobol", "cosines", "forrester")


def with_noise(f, sigma, rng=None):
    """Wrap ``f`` so each evaluated point gets independent N(0, sigma^2) noise.

    Draws happen in call order from the wrapper's own generator.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    f = f.evaluate if isinstance(f, Benchmark) else f
    rng = np.random.default_rng(rng)

    def noisy(x):
        val = f(x)
        if sigma == 0:
            return val
        if np.ndim(val) == 0:
            return float(val) + sigma * rng.standard_normal()
        return np.asarray(val) + sigma * rng.standard_normal(np.shape(val))

    return noisy


def grid(domain, points_per_dim):
    axes = [np.linspace(lo, hi, points_per_dim) for lo, hi in zip(domain.lower, domain.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def grid_optimum(f, domain, points_per_dim, sense="min", chunk=250_000):
    """Brute-force optimum of a vectorized ``f`` on a regular grid.

    Returns ``(location, value)``.
    """
    G = grid(domain, points_per_dim)
    best_val, best_x = None, None
    for start in range(0, G.shape[0], chunk):
        block = G[start:start + chunk]
        vals = np.asarray(f(block), dtype=float)
        i = int(np.argmin(vals) if sense == "min" else np.argmax(vals))
        better = best_val is None or (vals[i] < best_val if sense == "min" else vals[i] > best_val)
        if better:
            best_val, best_x = float(vals[i]), block[i].copy()
    return best_x, best_val


def grid_max_grad_norm(grad, domain, points_per_dim):
    """Largest gradient norm of ``grad`` over a regular grid; ``(location, value)``."""
    G = grid(domain, points_per_dim)
    norms = np.linalg.norm(grad(G), axis=1)
    i = int(np.argmax(norms))
    return G[i], float(norms[i])
