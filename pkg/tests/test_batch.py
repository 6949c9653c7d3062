import numpy as np
import pytest

from lipbatch.acquisition import AcquisitionSpec
from lipbatch.batch import (
    BatchStrategy, DesignSettings, RunState, dedupe, design_batch, design_batch_lp,
    design_batch_pred, design_batch_rand, latin_hypercube, propose_sequential, run_bbo,
)
from lipbatch.benchmarks import forrester, get_benchmark, grid_optimum
from lipbatch.errors import ObjectiveFailure
from lipbatch.gp import BoxDomain, Dataset, GPPosterior, Hyperparams, fit_gp
from lipbatch.penalization import PenalizedAcquisition, PenalizerParams

UCB = AcquisitionSpec("ucb", 2.0)
EI = AcquisitionSpec("ei")


def _state(seed=0, n=8):
    rng = np.random.default_rng(seed)
    b = get_benchmark("cosines")
    X = rng.random((n, 2))
    data = Dataset(X, b.evaluate(X), b.domain)
    return RunState(data, fit_gp(data, 3, rng), 0, rng)


def _log_value(gp, spec, x):
    return PenalizedAcquisition(gp, spec).log_value_grad(np.atleast_2d(x))[0][0]


@pytest.mark.parametrize("spec", [UCB, EI])
def test_first_lp_point_is_sequential_proposal(spec):
    a, b = _state(1), _state(1)
    seq = propose_sequential(a, BatchStrategy("sequential", 1, spec))
    lp = design_batch_lp(b, BatchStrategy("lp", 3, spec)).points
    assert abs(_log_value(a.gp, spec, seq) - _log_value(a.gp, spec, lp[0])) <= 1e-6


@pytest.mark.parametrize("kind", ["lp", "lp_local", "rand", "pred"])
def test_single_point_batch_is_sequential(kind):
    a, b = _state(2), _state(2)
    seq = propose_sequential(a, BatchStrategy("sequential", 1, UCB))
    plan = design_batch(b, BatchStrategy(kind, 1, UCB))
    assert len(plan) == 1
    np.testing.assert_array_equal(plan.points[0], seq)


def test_huge_L_collapses_batch():
    st = _state(3)
    plan = design_batch_lp(st, BatchStrategy("lp", 3, UCB), settings=DesignSettings(forced_L=1e9))
    P = plan.points
    diam = max(np.linalg.norm(P[i] - P[j]) for i in range(3) for j in range(3))
    assert diam <= 1e-3


def test_bimodal_batch_matches_grid_enumeration():
    dom = BoxDomain([0.0], [1.0])
    X = np.array([[0.05], [0.2], [0.35], [0.5], [0.65], [0.8], [0.95]])
    y = np.array([0.0, 1.0, 0.1, -0.5, 0.1, 0.95, 0.0])
    rng = np.random.default_rng(0)
    gp = GPPosterior(Dataset(X, y, dom), Hyperparams(1.0, 60.0, 1e-6), standardize=True)
    st = RunState(gp.data, gp, 0, rng)
    L = 4.0
    plan = design_batch_lp(st, BatchStrategy("lp", 3, UCB), settings=DesignSettings(forced_L=L))

    grid = np.linspace(0, 1, 200_001)[:, None]
    M = (y.max() - gp.y_shift) / gp.y_scale
    pa = PenalizedAcquisition(gp, UCB)
    expected = []
    for _ in range(3):
        x = grid[np.argmax(pa.log_value_grad(grid)[0])]
        expected.append(x)
        mu, var, _, _ = gp.predict_std(x)
        pa = pa.with_penalizer(PenalizerParams(x, mu[0], np.sqrt(var[0]), L / gp.y_scale, M))
    np.testing.assert_allclose(plan.points, np.array(expected), atol=1e-4)

    P = plan.points[:, 0]
    assert (P[0] < 0.5) != (P[1] < 0.5)  # the second point goes to the other mode
    mu0, _ = gp.predict(plan.points[:1])
    radius = (y.max() - mu0[0]) / L
    assert min(abs(P[0] - P[1]), abs(P[0] - P[2])) > radius


def test_rand_batch_in_domain_and_reproducible():
    a = design_batch_rand(_state(4), BatchStrategy("rand", 5, UCB))
    b = design_batch_rand(_state(4), BatchStrategy("rand", 5, UCB))
    np.testing.assert_array_equal(a.points, b.points)
    assert a.points.shape == (5, 2)
    assert np.all(_state(4).data.domain.contains(a.points))


def test_pred_leaves_state_untouched():
    st = _state(5)
    before_n, before_alpha = st.gp.data.n, st.gp.alpha.copy()
    plan = design_batch_pred(st, BatchStrategy("pred", 4, EI))
    assert len(plan) == 4
    assert st.gp.data.n == before_n and st.data.n == before_n
    np.testing.assert_array_equal(st.gp.alpha, before_alpha)


@pytest.mark.parametrize("kind", ["lp", "lp_local", "pred", "rand"])
def test_batches_inside_domain(kind):
    st = _state(6)
    plan = design_batch(st, BatchStrategy(kind, 4, EI))
    assert plan.points.shape == (4, 2)
    assert np.all(st.data.domain.contains(plan.points))


def test_dedupe_nudges_duplicates():
    dom = BoxDomain([0.0, 0.0], [1.0, 1.0])
    rng = np.random.default_rng(0)
    existing = np.array([[0.5, 0.5]])
    pts = dedupe(np.array([[0.5, 0.5], [0.2, 0.2], [0.2, 0.2]]), existing, dom, rng)
    assert np.linalg.norm(pts[0] - existing[0]) > 0
    assert np.linalg.norm(pts[1] - pts[2]) > 0
    np.testing.assert_array_equal(pts[1], [0.2, 0.2])
    assert np.all(np.abs(pts - [[0.5, 0.5], [0.2, 0.2], [0.2, 0.2]]) <= 1e-6)


def test_latin_hypercube_strata():
    dom = BoxDomain([-5.0, 0.0], [5.0, 1.0])
    X = latin_hypercube(dom, 10, np.random.default_rng(0))
    U = dom.to_unit(X)
    for j in range(2):
        assert sorted(np.floor(U[:, j] * 10).astype(int)) == list(range(10))


def test_run_bbo_forrester_reaches_grid_minimum():
    b = get_benchmark("forrester")
    _, fmin = grid_optimum(b.evaluate, b.domain, 10_000)
    rec = run_bbo(forrester, b.domain, BatchStrategy("lp", 3, EI), 5, seed=0)
    assert rec.summary()["mean_final_best"] <= fmin + 0.1


def test_run_bbo_accounting_and_determinism():
    b = get_benchmark("gsobol", 2)
    strat = BatchStrategy("sequential", 1, UCB)
    rec = run_bbo(b.objective(), b.domain, strat, 1, init_size=4, seed=3, record_timing=False)
    assert len(rec.rows) == 5
    again = run_bbo(b.objective(), b.domain, strat, 1, init_size=4, seed=3, record_timing=False)
    assert rec.rows == again.rows
    np.testing.assert_array_equal(rec.recommendation, again.recommendation)


def test_run_bbo_trace_properties():
    b = get_benchmark("cosines")
    rec = run_bbo(b.objective(), b.domain, BatchStrategy("lp", 3, EI), 3, seed=1)
    rows = rec.sorted_rows()
    assert len(rows) == 5 + 3 * 3
    best = [r.best_so_far for r in rows]
    assert all(b2 <= b1 for b1, b2 in zip(best, best[1:]))
    assert best[-1] == min(r.y for r in rows)
    assert np.all(b.domain.contains(np.array([r.x for r in rows])))
    wall = [r.wall_clock_s for r in rows]
    assert all(w2 >= w1 for w1, w2 in zip(wall, wall[1:]))
    assert b.domain.contains(rec.recommendation[None, :])[0]


def test_run_bbo_wraps_objective_errors():
    dom = BoxDomain([0.0], [1.0])
    calls = []

    def flaky(x):
        calls.append(x)
        if len(calls) > 4:
            raise RuntimeError("simulator crashed")
        return float(x[0] ** 2)

    with pytest.raises(ObjectiveFailure) as info:
        run_bbo(flaky, dom, BatchStrategy("lp", 2, UCB), 3, init_size=3, seed=0)
    assert len(info.value.record.rows) == 3
    assert "simulator crashed" in str(info.value)


def test_run_bbo_argument_checks():
    dom = BoxDomain([0.0], [1.0])
    with pytest.raises(ValueError):
        run_bbo(forrester, dom, BatchStrategy("lp", 2, UCB), 0)
    with pytest.raises(ValueError):
        run_bbo(forrester, dom, BatchStrategy("lp", 2, UCB), 1, init_size=1)
    with pytest.raises(ValueError):
        BatchStrategy("qei", 2, UCB)
