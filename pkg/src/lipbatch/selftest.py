"""Quick oracle checks runnable from an installed package.

Each check compares an implementation against an independent route (dense
linear algebra, finite differences, Monte Carlo, brute-force grids, or the
other kernel backend) and reports one PASS/FAIL line.
"""

import numpy as np
from scipy.special import ndtr

from lipbatch import kernels
from lipbatch.acquisition import AcquisitionSpec, acquisition_grad, acquisition_value
from lipbatch.benchmarks import cosines, cosines_grad, get_benchmark, grid_max_grad_norm, grid_optimum
from lipbatch.gp import BoxDomain, Dataset, GPPosterior, Hyperparams, log_marginal_likelihood
from lipbatch.lipschitz import verify_lipschitz_bound
from lipbatch.penalization import PenalizedAcquisition, PenalizerParams, log_penalized_grad, penalizer_value


def _rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-12)))


def _random_gp(rng, n=12, d=3):
    dom = BoxDomain(np.zeros(d), np.ones(d))
    X = rng.random((n, d))
    y = np.sin(3.0 * X).sum(axis=1)
    return GPPosterior(Dataset(X, y, dom), Hyperparams(1.3, 2.0, 1e-3)), X, y


def check_gp_dense(rng):
    gp, X, y = _random_gp(rng)
    h = gp.hyper
    sq = ((X[:, None, :] - X[None, :, :]) ** 2).sum(-1)
    K = h.theta * np.exp(-h.gamma * sq) + (h.noise_var + gp.jitter) * np.eye(len(y))
    Xq = rng.random((5, X.shape[1]))
    k = h.theta * np.exp(-h.gamma * ((Xq[:, None, :] - X[None, :, :]) ** 2).sum(-1))
    mu = k @ np.linalg.solve(K, y)
    var = h.theta - np.einsum("ij,ji->i", k, np.linalg.solve(K, k.T))
    m, v = gp.predict(Xq)
    _, logdet = np.linalg.slogdet(K)
    lml = -0.5 * y @ np.linalg.solve(K, y) - 0.5 * logdet - 0.5 * len(y) * np.log(2 * np.pi)
    err = max(_rel(m, mu), _rel(v, var), _rel(log_marginal_likelihood(gp.data, h), lml))
    return err < 1e-8, f"max relative error {err:.2e}"


def check_acquisition_fd(rng):
    gp, _, _ = _random_gp(rng)
    worst = 0.0
    for spec in (AcquisitionSpec("ei"), AcquisitionSpec("ucb", 2.0)):
        for _ in range(10):
            x = rng.uniform(0.1, 0.9, 3)
            g = acquisition_grad(gp, spec, x)
            h = 1e-6
            fd = [(acquisition_value(gp, spec, x + h * e)[0] - acquisition_value(gp, spec, x - h * e)[0]) / (2 * h)
                  for e in np.eye(3)]
            worst = max(worst, float(np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-8)))
    return worst < 1e-5, f"max relative error {worst:.2e}"


def check_penalized_fd(rng):
    gp, _, _ = _random_gp(rng)
    pa = PenalizedAcquisition(gp, AcquisitionSpec("ucb", 2.0))
    pa = pa.with_penalizer(PenalizerParams(np.full(3, 0.5), 0.2, 0.3, 2.0, 1.0))
    worst = 0.0
    for _ in range(10):
        x = rng.uniform(0.1, 0.9, 3)
        g = log_penalized_grad(pa, x)
        h = 1e-6
        fd = [(pa.log_value_grad(x + h * e)[0][0] - pa.log_value_grad(x - h * e)[0][0]) / (2 * h) for e in np.eye(3)]
        worst = max(worst, float(np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-8)))
    return worst < 1e-5, f"max relative error {worst:.2e}"


def check_penalizer_mc(rng):
    worst = 0.0
    for _ in range(5):
        L, M, mu, sigma, dist = rng.uniform(0.5, 3), rng.uniform(1, 2), rng.uniform(0, 1), rng.uniform(0.1, 1), rng.uniform(0, 1)
        p = PenalizerParams(np.zeros(1), mu, sigma, L, M)
        f = rng.normal(mu, sigma, 200_000)
        mc = np.mean((M - f) / L <= dist)
        worst = max(worst, abs(penalizer_value(p, np.array([dist])) - mc))
    return worst < 1e-2, f"max absolute error {worst:.2e}"


def check_backends(rng):
    backends = kernels.available_backends()
    if len(backends) < 2:
        return True, "only the python backend is built; skipped"
    a, b = backends["cython"], backends["python"]
    X, Xq = rng.random((15, 2)), rng.random((7, 2))
    gp, _, _ = _random_gp(rng, d=2)
    ra = a.gp_predict(Xq, gp.X, gp.alpha, gp.chol_factor, 1.3, 2.0, True)
    rb = b.gp_predict(Xq, gp.X, gp.alpha, gp.chol_factor, 1.3, 2.0, True)
    err = max(_rel(u, v) for u, v in zip(ra, rb))
    args = (Xq, X[:3].copy(), np.zeros(3), np.full(3, 0.5), np.full(3, 2.0), 1.0)
    err = max(err, *(_rel(u, v) for u, v in zip(a.log_penalizers(*args), b.log_penalizers(*args))))
    return err < 1e-10, f"max relative difference {err:.2e}"


def check_benchmarks(rng):
    msgs, ok = [], True
    for name, n in (("cosines", 801), ("forrester", 200_001)):
        b = get_benchmark(name)
        loc, val = grid_optimum(b.evaluate, b.domain, n, b.sense)
        good = abs(val - b.known_opt[1]) < 1e-4 and np.allclose(loc, b.known_opt[0], atol=1e-4)
        ok &= good
        msgs.append(f"{name} {val:.6f}")
    return ok, ", ".join(msgs)


def check_lipschitz(rng):
    b = get_benchmark("cosines")
    _, L = grid_max_grad_norm(cosines_grad, b.domain, 1001)
    rep = verify_lipschitz_bound(cosines, 1.1 * L, b.domain, 20_000, rng)
    return rep.violations == 0, f"L_grad {L:.4f}, {rep.violations} violations"


def check_cdf_identity(rng):
    z = rng.normal(0, 3, 100)
    p = PenalizerParams(np.zeros(1), 0.0, 1.0, 1.0, 0.0)
    vals = [penalizer_value(p, np.array([abs(t)])) for t in z]
    err = _rel(vals, ndtr(np.abs(z)))
    return err < 1e-12, f"max relative error {err:.2e}"


CHECKS = (
    ("gp posterior vs dense solve", check_gp_dense),
    ("acquisition gradient vs finite differences", check_acquisition_fd),
    ("penalized log gradient vs finite differences", check_penalized_fd),
    ("penalizer vs Monte Carlo", check_penalizer_mc),
    ("penalizer equals normal cdf", check_cdf_identity),
    ("kernel backend parity", check_backends),
    ("benchmark optima vs grid", check_benchmarks),
    ("cosines Lipschitz bound", check_lipschitz),
)


def run_selftest(seed=0, out=print):
    """Run every check; returns True when all pass."""
    rng = np.random.default_rng(seed)
    out(f"kernel backend: {kernels.BACKEND}")
    all_ok = True
    for name, fn in CHECKS:
        try:
            ok, msg = fn(rng)
        except Exception as exc:  # report and keep going
            ok, msg = False, f"{type(exc).__name__}: {exc}"
        all_ok &= bool(ok)
        out(f"{'PASS' if ok else 'FAIL'}  {name}: {msg}")
    return all_ok
