import numpy as np
import pytest

from lipbatch.benchmarks import (
    BENCHMARKS, cosines, cosines_grad, forrester, get_benchmark, grid_max_grad_norm,
    grid_optimum, gsobol, with_noise,
)


def test_gsobol_values():
    assert gsobol([0.5, 0.5]) == 0.25
    assert gsobol([-5.0]) == 11.5
    np.testing.assert_allclose(gsobol(np.array([[0.5, 0.5], [-5.0, -5.0]])), [0.25, 132.25])
    assert gsobol([1.0, 0.0], a=[0.0, 0.0]) == 4.0


def test_gsobol_grid_minimum():
    b = get_benchmark("gsobol", 2)
    # 1001 points per axis on [-5, 5] puts 0.5 exactly on the grid
    loc, val = grid_optimum(b.evaluate, b.domain, 1001)
    assert val == pytest.approx(0.25, abs=1e-12)
    np.testing.assert_allclose(loc, [0.5, 0.5], atol=1e-9)
    assert b.known_opt[1] == 2.0**-2


def test_cosines_values():
    assert cosines([0.0, 0.0]) == pytest.approx(0.5, abs=1e-15)
    assert cosines([0.3125, 0.3125]) == pytest.approx(1.6, abs=1e-15)


def test_cosines_grid_optimum():
    b = get_benchmark("cosines")
    loc, val = grid_optimum(b.evaluate, b.domain, 1601, sense="max")
    assert val == pytest.approx(1.6, abs=1e-12)
    np.testing.assert_allclose(loc, [0.3125, 0.3125], atol=1e-9)
    np.testing.assert_allclose(loc, b.known_opt[0], atol=1e-9)


def test_cosines_gradient_fd():
    rng = np.random.default_rng(0)
    X = rng.random((50, 2))
    h = 1e-6
    fd = np.column_stack([(cosines(X + h * e) - cosines(X - h * e)) / (2 * h) for e in np.eye(2)])
    np.testing.assert_allclose(cosines_grad(X), fd, rtol=1e-6, atol=1e-8)


def test_cosines_max_gradient_norm():
    b = get_benchmark("cosines")
    loc, L = grid_max_grad_norm(cosines_grad, b.domain, 4001)
    # the maximum sits where both coordinates take the same steepest slope
    assert L == pytest.approx(10.18701, abs=1e-4)
    np.testing.assert_allclose(loc, [0.83825, 0.83825], atol=1e-3)
    g1 = np.abs(cosines_grad(np.linspace(0, 1, 100_001)[:, None].repeat(2, axis=1))[:, 0]).max()
    assert L == pytest.approx(np.sqrt(2) * g1, rel=1e-6)


def test_forrester_values():
    assert forrester(1.0 / 3.0) == pytest.approx(0.0, abs=1e-15)
    assert forrester(0.0) == pytest.approx(4 * np.sin(-4.0), rel=1e-15)
    assert forrester(0.0) == pytest.approx(3.0272, abs=1e-4)
    assert isinstance(forrester(np.array([0.2])), float)
    assert forrester(np.array([[0.1], [0.2]])).shape == (2,)


def test_forrester_grid_minimum():
    b = get_benchmark("forrester")
    loc, val = grid_optimum(b.evaluate, b.domain, 1_000_001)
    assert val == pytest.approx(-6.020740, abs=1e-6)
    assert loc[0] == pytest.approx(0.757249, abs=1e-6)
    assert val == pytest.approx(b.known_opt[1], abs=1e-6)


def test_benchmark_lookup():
    assert set(BENCHMARKS) == {"gsobol", "cosines", "forrester"}
    assert get_benchmark("gsobol", 5).dim == 5
    with pytest.raises(ValueError):
        get_benchmark("branin")
    with pytest.raises(ValueError):
        get_benchmark("cosines", 3)


def test_max_sense_objective_negates():
    b = get_benchmark("cosines")
    f = b.objective()
    assert f([0.3125, 0.3125]) == pytest.approx(-1.6)
    np.testing.assert_allclose(f(np.zeros((2, 2))), [-0.5, -0.5])
    g = get_benchmark("forrester").objective()
    assert g is forrester


def test_noise_zero_is_identity():
    f = with_noise(gsobol, 0.0, 1)
    x = np.array([0.2, -1.0])
    assert f(x) == gsobol(x)


def test_noise_std():
    f = with_noise(lambda X: np.zeros(X.shape[0]), 0.25, 0)
    draws = f(np.zeros((100_000, 2)))
    assert 0.24 <= np.std(draws) <= 0.26


def test_noise_reproducible():
    b = get_benchmark("forrester")
    a = with_noise(b, 0.1, 42)
    c = with_noise(b, 0.1, 42)
    xs = np.linspace(0, 1, 20)
    assert [a(x) for x in xs] == [c(x) for x in xs]
    with pytest.raises(ValueError):
        with_noise(b, -1.0)
