import numpy as np
import pytest

from viflow.space import DimensionMismatch, TimeGrid, combine, inner, norm


def test_uniform_grid_weights_sum_to_horizon():
    grid = TimeGrid.uniform(0.0, 3.0, 7)
    assert grid.bins == 7
    assert grid.weights.sum() == pytest.approx(3.0, rel=1e-12)
    assert grid.is_uniform


def test_grid_rejects_bad_construction():
    with pytest.raises(ValueError):
        TimeGrid.uniform(1.0, 1.0, 4)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, np.array([0.5, -0.5, 1.0]))
    with pytest.raises(ValueError):
        # weights sum to 1.5 on a unit horizon
        TimeGrid(0.0, 1.0, np.array([1.0, 0.5]))


def test_grid_edges_and_centers():
    grid = TimeGrid(0.0, 1.0, np.array([0.25, 0.5, 0.25]))
    assert np.allclose(grid.bin_edges(), [0.0, 0.25, 0.75, 1.0])
    assert np.allclose(grid.bin_centers(), [0.125, 0.5, 0.875])
    assert not grid.is_uniform


def test_grid_weights_are_read_only():
    grid = TimeGrid.uniform(0.0, 1.0, 4)
    with pytest.raises(ValueError):
        grid.weights[0] = 2.0


def test_inner_zero_vector():
    grid = TimeGrid.uniform(0.0, 2.0, 4)
    v = np.arange(8.0).reshape(2, 4)
    assert inner(np.zeros((2, 4)), v, grid) == 0.0


def test_inner_hand_quadrature():
    # C=2, M=4, uniform weights 0.5 each, all-ones: 2 * 4 * 0.5 = 4
    grid = TimeGrid.uniform(0.0, 2.0, 4)
    u = np.ones((2, 4))
    assert inner(u, u, grid) == pytest.approx(4.0, rel=1e-14)


def test_inner_symmetry_random():
    grid = TimeGrid(0.0, 1.0, np.array([0.1, 0.4, 0.3, 0.2]))
    rng = np.random.default_rng(0)
    for _ in range(100):
        u = rng.normal(size=(3, 4))
        v = rng.normal(size=(3, 4))
        assert inner(u, v, grid) == pytest.approx(inner(v, u, grid), rel=1e-12)


def test_inner_shape_mismatch_raises():
    grid = TimeGrid.uniform(0.0, 1.0, 4)
    with pytest.raises(DimensionMismatch):
        inner(np.ones((2, 4)), np.ones((3, 4)), grid)
    with pytest.raises(DimensionMismatch):
        inner(np.ones((2, 5)), np.ones((2, 5)), grid)


def test_norm_hand_values():
    grid = TimeGrid(0.0, 2.0, np.array([1.0, 1.0]))
    assert norm(np.zeros((1, 2)), grid) == 0.0
    assert norm(np.array([[3.0, 4.0]]), grid) == pytest.approx(5.0, rel=1e-14)


def test_norm_homogeneity_random():
    grid = TimeGrid.uniform(0.0, 1.5, 6)
    rng = np.random.default_rng(1)
    for _ in range(50):
        u = rng.normal(size=(2, 6))
        a = rng.normal()
        assert norm(a * u, grid) == pytest.approx(abs(a) * norm(u, grid), rel=1e-12)


def test_cauchy_schwarz_random():
    grid = TimeGrid(0.0, 1.0, np.array([0.2, 0.3, 0.5]))
    rng = np.random.default_rng(2)
    for _ in range(200):
        u = rng.normal(size=(2, 3))
        v = rng.normal(size=(2, 3))
        lhs = abs(inner(u, v, grid))
        rhs = norm(u, grid) * norm(v, grid)
        assert lhs <= rhs * (1 + 1e-10)


def test_parallelogram_law_random():
    grid = TimeGrid.uniform(0.0, 4.0, 5)
    rng = np.random.default_rng(3)
    for _ in range(200):
        u = rng.normal(size=(3, 5))
        v = rng.normal(size=(3, 5))
        lhs = norm(u + v, grid) ** 2 + norm(u - v, grid) ** 2
        rhs = 2 * norm(u, grid) ** 2 + 2 * norm(v, grid) ** 2
        assert lhs == pytest.approx(rhs, rel=1e-10)


def test_grid_refinement_preserves_inner_product():
    # piecewise-constant profiles keep their inner product when every bin
    # is split in two
    coarse = TimeGrid.uniform(0.0, 1.0, 8)
    fine = TimeGrid.uniform(0.0, 1.0, 16)
    rng = np.random.default_rng(4)
    u = rng.normal(size=(2, 8))
    v = rng.normal(size=(2, 8))
    u_fine = np.repeat(u, 2, axis=1)
    v_fine = np.repeat(v, 2, axis=1)
    assert inner(u_fine, v_fine, fine) == pytest.approx(
        inner(u, v, coarse), rel=1e-12
    )


def test_combine_identity_and_convexity():
    rng = np.random.default_rng(5)
    u = rng.normal(size=(2, 3))
    assert np.array_equal(combine([1.0], [u]), u)
    assert np.array_equal(combine([0.5, 0.5], [u, u]), u)


def test_combine_hand_arithmetic():
    # 0.25 * 2 + 0.25 * 1.5 = 0.875 on a 1x1 vector
    u = np.array([[2.0]])
    v = np.array([[1.5]])
    out = combine([0.25, 0.25], [u, v])
    assert out.shape == (1, 1)
    assert out[0, 0] == pytest.approx(0.875, abs=0)


def test_combine_rejects_bad_input():
    u = np.ones((2, 2))
    with pytest.raises(ValueError):
        combine([], [])
    with pytest.raises(ValueError):
        combine([1.0, 2.0], [u])
    with pytest.raises(DimensionMismatch):
        combine([1.0, 1.0], [u, np.ones((2, 3))])
