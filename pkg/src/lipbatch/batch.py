"""Batch design strategies and the outer optimization loop.

``lp`` is the maximize-then-penalize loop with one global Lipschitz estimate,
``lp_local`` uses a per-center estimate, ``rand`` fills the batch uniformly
after the first acquisition maximizer, ``pred`` conditions the GP on fake
observations at the posterior mean, and ``sequential`` proposes one point per
model update.

The loop maximizes internally; :func:`run_bbo` minimizes the objective it is
given by maximizing its negation.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from lipbatch.acquisition import AcquisitionSpec
from lipbatch.errors import ObjectiveFailure
from lipbatch.gp import Dataset, fit_gp
from lipbatch.lipschitz import argmax_mean, estimate_L_global, estimate_L_local, estimate_M
from lipbatch.penalization import PenalizedAcquisition, PenalizerParams, maximize_penalized
from lipbatch.records import ExperimentRecord, Row

STRATEGIES = ("sequential", "lp", "lp_local", "rand", "pred")


@dataclass(frozen=True)
class BatchStrategy:
    kind: str
    batch_size: int
    acquisition: AcquisitionSpec

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.kind!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @property
    def points_per_update(self):
        return 1 if self.kind == "sequential" else self.batch_size


@dataclass(frozen=True)
class DesignSettings:
    """Knobs for the inner optimizers.

    ``forced_L`` overrides the Lipschitz estimate (in the units of y) when set.
    """

    seeds: int = 10
    screen: int = 1000
    max_iter: int = 200
    tol: float = 1e-6
    restarts: int = 10
    m_mode: str = "max_y"
    forced_L: float = None


@dataclass(frozen=True)
class BatchPlan:
    points: np.ndarray

    def __len__(self):
        return self.points.shape[0]


@dataclass
class RunState:
    data: Dataset
    gp: object
    iteration: int
    rng: np.random.Generator
    trace: ExperimentRecord = field(default_factory=ExperimentRecord)


def _maximize(pa, state, settings):
    return maximize_penalized(
        pa, state.data.domain, seeds=settings.seeds, rng=state.rng,
        screen=settings.screen, max_iter=settings.max_iter, tol=settings.tol,
    )


def propose_sequential(state, strategy, settings=DesignSettings()):
    """Maximizer of ``g(alpha)`` under the current posterior."""
    return _maximize(PenalizedAcquisition(state.gp, strategy.acquisition), state, settings)


def design_batch_lp(state, strategy, local_L=False, settings=DesignSettings()):
    """Maximize-penalize loop.

    ``M`` and the global ``L`` are estimated once per batch. Penalizers are
    built on the GP's standardized scale, where the sigma floor applies.
    """
    gp = state.gp
    shift, scale = gp.y_shift, gp.y_scale
    M = (estimate_M(gp, settings.m_mode) - shift) / scale
    if settings.forced_L is not None:
        L = settings.forced_L / scale
    elif not local_L and strategy.batch_size > 1:
        L = estimate_L_global(gp, rng=state.rng).value / scale
    pa = PenalizedAcquisition(gp, strategy.acquisition)
    points = []
    for j in range(strategy.batch_size):
        x = _maximize(pa, state, settings)
        points.append(x)
        if j == strategy.batch_size - 1:
            break
        mu, var, _, _ = gp.predict_std(x[None, :])
        Lj = estimate_L_local(gp, x) / scale if local_L and settings.forced_L is None else L
        pa = pa.with_penalizer(PenalizerParams(x, mu[0], np.sqrt(var[0]), Lj, M))
    return BatchPlan(np.array(points))


def design_batch_rand(state, strategy, settings=DesignSettings()):
    """Acquisition maximizer followed by uniform random points."""
    first = propose_sequential(state, strategy, settings)
    dom = state.data.domain
    rest = dom.from_unit(state.rng.random((strategy.batch_size - 1, dom.dim)))
    return BatchPlan(np.vstack([first[None, :], rest]))


def design_batch_pred(state, strategy, settings=DesignSettings()):
    """Fake-observation batches: condition on ``(x, mu(x))`` after each pick.

    Hyperparameters and the output scaling stay frozen; the conditioned GPs
    are local to this call.
    """
    gp = state.gp
    points = []
    for j in range(strategy.batch_size):
        x = _maximize(PenalizedAcquisition(gp, strategy.acquisition), state, settings)
        points.append(x)
        if j < strategy.batch_size - 1:
            mu, _ = gp.predict(x[None, :])
            gp = gp.condition_on(x[None, :], mu)
    return BatchPlan(np.array(points))


def design_batch(state, strategy, settings=DesignSettings()):
    kind = strategy.kind
    if kind == "sequential":
        return BatchPlan(propose_sequential(state, strategy, settings)[None, :])
    if kind == "lp":
        return design_batch_lp(state, strategy, False, settings)
    if kind == "lp_local":
        return design_batch_lp(state, strategy, True, settings)
    if kind == "rand":
        return design_batch_rand(state, strategy, settings)
    return design_batch_pred(state, strategy, settings)


def dedupe(points, existing, domain, rng, radius=1e-8):
    """Nudge points lying within ``radius`` of an existing input or of each other."""
    points = np.array(points, dtype=float)
    seen = np.asarray(existing, dtype=float)
    for i in range(points.shape[0]):
        if seen.size and np.min(np.linalg.norm(seen - points[i], axis=1)) <= radius:
            nudge = rng.uniform(-1.0, 1.0, domain.dim) * 1e-6 * domain.width
            points[i] = domain.clip(points[i] + nudge)
        seen = np.vstack([seen, points[i]]) if seen.size else points[i][None, :]
    return points


def latin_hypercube(domain, n, rng):
    return domain.from_unit(qmc.LatinHypercube(domain.dim, rng=rng).random(n))


def run_bbo(objective, domain, strategy, budget_iters, init_size=None, seed=0,
            settings=DesignSettings(), replicate=0, record_timing=True):
    """Minimize ``objective`` with batch Bayesian optimization.

    Parameters
    ----------
    objective : callable
        Maps one point of shape (d,) to a float. Minimized.
    domain : BoxDomain
    strategy : BatchStrategy
    budget_iters : int
        Number of model updates (batches) after the initial design.
    init_size : int, optional
        Latin-hypercube initial design size; ``2 d + 1`` by default.
    seed : int or numpy.random.Generator
    settings : DesignSettings
    replicate : int
        Label written into every row.
    record_timing : bool
        When false every timing column is written as zero so records are
        byte-reproducible.

    Returns
    -------
    ExperimentRecord
        One row per evaluation plus the final recommendation, the maximizer
        of the last posterior mean.

    Raises
    ------
    ObjectiveFailure
        Wraps any exception from ``objective``; ``.record`` holds the rows
        collected so far.
    """
    if budget_iters < 1:
        raise ValueError("budget_iters must be >= 1")
    init_size = 2 * domain.dim + 1 if init_size is None else init_size
    if init_size < 2:
        raise ValueError("init_size must be >= 2")
    rng = np.random.default_rng(seed)
    record = ExperimentRecord(dim=domain.dim)
    clock = {"wall": 0.0, "best": np.inf}

    def evaluate(points, iteration, design_time):
        vals, times = [], []
        for x in points:
            t0 = time.perf_counter()
            try:
                v = float(objective(x))
            except Exception as exc:
                raise ObjectiveFailure(f"objective failed at {x.tolist()}: {exc}", record) from exc
            times.append(time.perf_counter() - t0)
            vals.append(v)
        eval_time = max(times)
        if not record_timing:
            design_time = eval_time = 0.0
        clock["wall"] += design_time + eval_time
        for j, (x, v) in enumerate(zip(points, vals)):
            clock["best"] = min(clock["best"], v)
            record.rows.append(Row(
                replicate, iteration, j, tuple(float(c) for c in x), v,
                clock["best"], design_time, eval_time, clock["wall"],
            ))
        return np.array(vals)

    t0 = time.perf_counter()
    X = latin_hypercube(domain, init_size, rng)
    y = evaluate(X, 0, time.perf_counter() - t0)
    data = Dataset(X, -y, domain)
    state = RunState(data, None, 0, rng, record)
    for t in range(1, budget_iters + 1):
        t0 = time.perf_counter()
        state.gp = fit_gp(state.data, settings.restarts, rng)
        plan = design_batch(state, strategy, settings)
        pts = dedupe(plan.points, state.data.X, domain, rng)
        design_time = time.perf_counter() - t0
        y_new = evaluate(pts, t, design_time)
        state.data = state.data.append(pts, -y_new)
        state.iteration = t
    final_gp = fit_gp(state.data, settings.restarts, rng)
    x_hat, _ = argmax_mean(final_gp)
    record.recommendation = x_hat
    return record
