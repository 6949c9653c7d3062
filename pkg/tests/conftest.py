import numpy as np
import pytest

from lipbatch.gp import BoxDomain, Dataset, GPPosterior, Hyperparams


def dense_kernel(A, B, theta, gamma):
    """Kernel matrix by explicit double loop over rows."""
    out = np.empty((A.shape[0], B.shape[0]))
    for i, a in enumerate(A):
        for j, b in enumerate(B):
            out[i, j] = theta * np.exp(-gamma * np.sum((a - b) ** 2))
    return out


def dense_posterior(X, y, hyper, jitter, Xq):
    """Posterior mean and variance from an explicit inverse."""
    K = dense_kernel(X, X, hyper.theta, hyper.gamma) + (hyper.noise_var + jitter) * np.eye(len(y))
    Kinv = np.linalg.inv(K)
    k = dense_kernel(Xq, X, hyper.theta, hyper.gamma)
    mu = k @ Kinv @ y
    var = hyper.theta - np.einsum("ij,jk,ik->i", k, Kinv, k)
    return mu, var, K


def random_dataset(rng, n, d, noise=1e-3):
    dom = BoxDomain(np.zeros(d), np.ones(d))
    X = rng.random((n, d))
    y = np.sin(3.0 * X).sum(axis=1) + 0.1 * rng.standard_normal(n)
    return Dataset(X, y, dom)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_gp(rng):
    data = random_dataset(rng, 12, 2)
    return GPPosterior(data, Hyperparams(1.2, 3.0, 1e-4), standardize=True)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one acceptance line: ``report(number, ok, detail)``."""

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
