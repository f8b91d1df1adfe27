import numpy as np
import pytest

from viflow.sets import (
    Ball,
    Box,
    DemandFlowSet,
    SetConstructionError,
    project_demand_slice,
)
from viflow.space import TimeGrid, inner, norm

from _oracles import (
    bisect_shift,
    knapsack_projection_active_set,
    sample_feasible_demand_point,
)


def unit_grid(bins):
    return TimeGrid.uniform(0.0, float(bins), bins)  # weights all 1.0


@pytest.fixture
def demand_set():
    grid = unit_grid(1)
    return DemandFlowSet(owner=[0, 0], demands=[1.0], grid=grid), grid


# ---------------------------------------------------------------- box / ball

def test_box_clamps_scalar_case():
    grid = unit_grid(1)
    box = Box(-1.0, 2.0, shape=(1, 1))
    rep = box.project(np.array([[3.0]]), grid)
    assert rep.point[0, 0] == 2.0
    assert rep.feasibility_residual == 0.0


def test_box_idempotent_on_members():
    grid = unit_grid(3)
    box = Box(0.0, 1.0, shape=(2, 3))
    x = np.full((2, 3), 0.5)
    assert np.array_equal(box.project(x, grid).point, x)


def test_box_rejects_crossed_bounds():
    with pytest.raises(SetConstructionError):
        Box(1.0, 0.0, shape=(1, 2))


def test_ball_projection_weighted_norm():
    grid = TimeGrid(0.0, 1.0, np.array([0.75, 0.25]))
    ball = Ball(np.zeros((1, 2)), radius=1.0)
    x = np.array([[2.0, 2.0]])  # weighted norm 2
    rep = ball.project(x, grid)
    assert norm(rep.point, grid) == pytest.approx(1.0, rel=1e-12)
    assert np.allclose(rep.point, x / 2.0)
    inside = np.array([[0.3, 0.3]])
    assert np.array_equal(ball.project(inside, grid).point, inside)


def test_ball_rejects_nonpositive_radius():
    with pytest.raises(SetConstructionError):
        Ball(np.zeros((1, 1)), 0.0)


# ------------------------------------------------------- demand slice solver

def test_slice_interior_point_is_fixed():
    v = np.array([0.4, 0.6])
    w = np.array([1.0, 1.0])
    x, lam = project_demand_slice(v, w, 1.0)
    assert lam == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(x, v)


def test_slice_symmetric_split():
    x, lam = project_demand_slice(np.zeros(2), np.ones(2), 1.0)
    assert np.allclose(x, [0.5, 0.5])
    assert lam == pytest.approx(-0.5, abs=1e-12)


def test_slice_matches_bisection_oracle():
    v = np.array([2.0, 0.0])
    w = np.ones(2)
    x, lam = project_demand_slice(v, w, 1.0)
    assert lam == pytest.approx(bisect_shift(v, w, 1.0), abs=1e-9)
    assert np.allclose(x, [1.0, 0.0], atol=1e-12)


def test_slice_random_against_bisection():
    rng = np.random.default_rng(10)
    for _ in range(100):
        n = rng.integers(1, 9)
        v = rng.normal(size=n) * 3
        w = rng.uniform(0.2, 2.0, size=n)
        Q = rng.uniform(0.1, 5.0)
        x, lam = project_demand_slice(v, w, Q)
        assert lam == pytest.approx(bisect_shift(v, w, Q), abs=1e-8)
        assert float(w @ x) == pytest.approx(Q, abs=1e-10 * max(1.0, Q))
        assert np.all(x >= 0)


def test_slice_root_residual_tiny():
    rng = np.random.default_rng(11)
    for _ in range(50):
        v = rng.normal(size=20) * 10
        w = rng.uniform(0.1, 3.0, size=20)
        Q = rng.uniform(0.5, 20.0)
        x, lam = project_demand_slice(v, w, Q)
        phi = float(w @ np.maximum(v - lam, 0.0)) - Q
        assert abs(phi) <= 1e-10 * max(1.0, Q)


def test_slice_shift_is_weight_independent_form():
    # stationarity gives x = max(0, v - lam): on the active set the offset
    # v - x is one constant, regardless of how lopsided the weights are
    rng = np.random.default_rng(12)
    v = rng.normal(size=6)
    w = rng.uniform(0.1, 5.0, size=6)
    x, lam = project_demand_slice(v, w, 2.0)
    active = x > 0
    offsets = v[active] - x[active]
    assert np.allclose(offsets, lam, atol=1e-12)


def test_slice_bisection_path_agrees_with_scan():
    from viflow import sets

    rng = np.random.default_rng(13)
    v = rng.normal(size=40)
    w = rng.uniform(0.5, 1.5, size=40)
    x_scan, lam_scan = project_demand_slice(v, w, 3.0)
    lam_bis = sets._shift_root_bisection(v, w, 3.0)
    assert lam_bis == pytest.approx(lam_scan, abs=1e-10)


def test_slice_equality_only_variant():
    v = np.array([2.0, -1.0])
    w = np.array([1.0, 1.0])
    x, lam = project_demand_slice(v, w, 1.0, nonneg=False)
    assert lam == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(x, v)
    assert np.any(x < 0)  # equality-only keeps negative rates


def test_slice_rejects_bad_inputs():
    with pytest.raises(ValueError):
        project_demand_slice(np.ones(2), np.ones(2), 0.0)
    with pytest.raises(ValueError):
        project_demand_slice(np.ones(2), np.array([1.0, 0.0]), 1.0)


# ----------------------------------------------------------- demand flow set

def test_demand_set_spec_example(demand_set):
    ds, grid = demand_set
    rep = ds.project(np.array([[2.0], [0.0]]), grid)
    assert np.allclose(rep.point, [[1.0], [0.0]], atol=1e-12)
    assert rep.multipliers[0] == pytest.approx(1.0, abs=1e-12)
    assert rep.feasibility_residual <= 1e-10


def test_demand_set_construction_errors():
    grid = unit_grid(2)
    with pytest.raises(SetConstructionError):
        DemandFlowSet(owner=[0, 0], demands=[-1.0], grid=grid)
    with pytest.raises(SetConstructionError):
        DemandFlowSet(owner=[0, 2], demands=[1.0, 1.0], grid=grid)  # gap in groups


def test_demand_set_contains():
    grid = TimeGrid.uniform(0.0, 1.0, 2)  # weights 0.5
    ds = DemandFlowSet(owner=[0], demands=[1.0], grid=grid)
    assert ds.contains(np.array([[1.0, 1.0]]), grid, tol=1e-9)
    # integral 1.5: violated by 0.5, any tol below that must reject
    assert not ds.contains(np.array([[1.5, 1.5]]), grid, tol=0.4)
    assert not ds.contains(np.array([[2.5, -0.5]]), grid, tol=1e-6)


def test_projection_is_feasible_and_idempotent():
    grid = TimeGrid.uniform(0.0, 2.0, 4)
    ds = DemandFlowSet(owner=[0, 0, 1], demands=[2.0, 1.5], grid=grid)
    rng = np.random.default_rng(20)
    for _ in range(50):
        x = rng.normal(size=(3, 4)) * 2
        p = ds.project(x, grid).point
        assert ds.contains(p, grid, tol=1e-8)
        p2 = ds.project(p, grid).point
        assert np.allclose(p2, p, atol=1e-12)


def test_projection_matches_active_set_oracle():
    # <= 6 variables so the exhaustive oracle stays cheap
    grid = TimeGrid(0.0, 1.0, np.array([0.3, 0.7]))
    ds = DemandFlowSet(owner=[0, 0, 0], demands=[1.2], grid=grid)
    rng = np.random.default_rng(21)
    w = np.tile(grid.weights, 3)
    for _ in range(100):
        x = rng.normal(size=(3, 2)) * 2
        p = ds.project(x, grid).point
        oracle = knapsack_projection_active_set(x.ravel(), w, 1.2)
        assert np.allclose(p.ravel(), oracle, atol=1e-8)


def test_projection_variational_characterization():
    grid = TimeGrid.uniform(0.0, 1.0, 3)
    ds = DemandFlowSet(owner=[0, 0, 1, 1], demands=[1.0, 2.0], grid=grid)
    rng = np.random.default_rng(22)
    for _ in range(5):
        x = rng.normal(size=(4, 3)) * 3
        z = ds.project(x, grid).point
        for _ in range(200):
            y = np.vstack(
                [
                    sample_feasible_demand_point(rng, grid.weights, 2, 1.0),
                    sample_feasible_demand_point(rng, grid.weights, 2, 2.0),
                ]
            )
            assert inner(x - z, z - y, grid) >= -1e-8


def test_projection_nonexpansive():
    grid = TimeGrid.uniform(0.0, 1.0, 4)
    sets_to_try = [
        Box(-1.0, 1.0, shape=(2, 4)),
        Ball(np.zeros((2, 4)), 1.5),
        DemandFlowSet(owner=[0, 1], demands=[1.0, 1.0], grid=grid),
    ]
    rng = np.random.default_rng(23)
    for s in sets_to_try:
        for _ in range(50):
            x = rng.normal(size=(2, 4)) * 2
            y = rng.normal(size=(2, 4)) * 2
            px = s.project(x, grid).point
            py = s.project(y, grid).point
            assert norm(px - py, grid) <= norm(x - y, grid) * (1 + 1e-10) + 1e-12


def test_groupwise_projection_order_independent():
    grid = TimeGrid.uniform(0.0, 1.0, 2)
    rng = np.random.default_rng(24)
    x = rng.normal(size=(4, 2))
    ds1 = DemandFlowSet(owner=[0, 0, 1, 1], demands=[1.0, 2.0], grid=grid)
    # same partition with group labels swapped
    ds2 = DemandFlowSet(owner=[1, 1, 0, 0], demands=[2.0, 1.0], grid=grid)
    assert np.allclose(ds1.project(x, grid).point, ds2.project(x, grid).point)


def test_equality_only_variant_projection():
    grid = unit_grid(1)
    ds = DemandFlowSet(owner=[0, 0], demands=[1.0], grid=grid, nonneg=False)
    rep = ds.project(np.array([[2.0], [-1.0]]), grid)
    # hyperplane projection keeps the negative component
    assert rep.point[1, 0] < 0
    assert float(ds.group_totals(rep.point, grid)[0]) == pytest.approx(1.0, abs=1e-12)


def test_sample_returns_members():
    grid = TimeGrid.uniform(0.0, 1.0, 3)
    ds = DemandFlowSet(owner=[0, 0], demands=[1.0], grid=grid)
    rng = np.random.default_rng(25)
    for _ in range(10):
        assert ds.contains(ds.sample(grid, rng), grid, tol=1e-8)
