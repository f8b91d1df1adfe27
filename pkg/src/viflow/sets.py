"""Closed convex feasible sets with exact projections in the weighted norm.

Three variants: componentwise boxes, balls, and the demand-coupled flow set
(per-group equality sum_i w_i x_i = Q with optional nonnegativity).  All
projections are exact minimizers of the weighted squared distance; the
variational characterization <x - P(x), P(x) - y> >= 0 for feasible y is the
universal correctness test and is exercised heavily in the test suite.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from .space import HVector, TimeGrid, check_vector, norm

# slices longer than this use safeguarded bisection instead of the sort scan
_SORT_SCAN_LIMIT = 100_000
_BISECTION_TOL = 1e-12


class SetConstructionError(ValueError):
    """A feasible set was declared with inconsistent data."""


@dataclass(frozen=True)
class ProjectionReport:
    """Projection result: the point, per-group multipliers where the set has
    them, and the worst absolute constraint violation at the returned point."""

    point: HVector
    multipliers: np.ndarray | None
    feasibility_residual: float


class FeasibleSet(abc.ABC):
    """Nonempty closed convex subset of the discretized flow space."""

    @abc.abstractmethod
    def project(self, x: HVector, grid: TimeGrid) -> ProjectionReport:
        """Weighted-norm projection of ``x`` onto the set."""

    @abc.abstractmethod
    def contains(self, x: HVector, grid: TimeGrid, tol: float = 1e-9) -> bool:
        """True iff every defining constraint holds within absolute ``tol``."""

    def sample(self, grid: TimeGrid, rng: np.random.Generator,
               scale: float = 1.0) -> HVector:
        """Random member: a Gaussian draw projected onto the set."""
        draw = scale * rng.normal(size=self.shape(grid))
        return self.project(draw, grid).point

    @abc.abstractmethod
    def shape(self, grid: TimeGrid) -> tuple[int, int]:
        """(channels, bins) of the ambient space."""


class Box(FeasibleSet):
    """Componentwise bounds lower <= x <= upper."""

    def __init__(self, lower, upper, shape: tuple[int, int]):
        lower = np.broadcast_to(np.asarray(lower, dtype=float), shape).copy()
        upper = np.broadcast_to(np.asarray(upper, dtype=float), shape).copy()
        if np.any(lower > upper):
            raise SetConstructionError("box needs lower <= upper componentwise")
        lower.setflags(write=False)
        upper.setflags(write=False)
        self.lower = lower
        self.upper = upper
        self._shape = shape

    def shape(self, grid: TimeGrid) -> tuple[int, int]:
        return self._shape

    def project(self, x: HVector, grid: TimeGrid) -> ProjectionReport:
        x = check_vector(x, grid)
        point = np.clip(x, self.lower, self.upper)
        return ProjectionReport(point, None, 0.0)

    def contains(self, x: HVector, grid: TimeGrid, tol: float = 1e-9) -> bool:
        x = check_vector(x, grid)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))


class Ball(FeasibleSet):
    """Weighted-norm ball around ``center`` with positive ``radius``."""

    def __init__(self, center: HVector, radius: float):
        if radius <= 0:
            raise SetConstructionError("ball radius must be positive")
        center = np.asarray(center, dtype=float).copy()
        center.setflags(write=False)
        self.center = center
        self.radius = float(radius)

    def shape(self, grid: TimeGrid) -> tuple[int, int]:
        return self.center.shape

    def project(self, x: HVector, grid: TimeGrid) -> ProjectionReport:
        x = check_vector(x, grid)
        diff = x - self.center
        dist = norm(diff, grid)
        if dist <= self.radius:
            return ProjectionReport(x.copy(), None, 0.0)
        point = self.center + (self.radius / dist) * diff
        return ProjectionReport(point, None, 0.0)

    def contains(self, x: HVector, grid: TimeGrid, tol: float = 1e-9) -> bool:
        x = check_vector(x, grid)
        return norm(x - self.center, grid) <= self.radius + tol


def _shift_root_sort_scan(v: np.ndarray, weights: np.ndarray, demand: float) -> float:
    """Exact root of phi(s) = sum_i w_i max(0, v_i - s) - demand.

    On the sorted values phi is piecewise linear; scan breakpoints for the
    segment containing the root and solve it in closed form.
    """
    order = np.argsort(v)[::-1]
    vs = v[order]
    ws = weights[order]
    cum_wv = np.cumsum(ws * vs)
    cum_w = np.cumsum(ws)
    # candidate shift if exactly the top-k entries stay active
    shifts = (cum_wv - demand) / cum_w
    # the active set is the largest k with vs[k-1] > shifts[k-1]
    active = vs > shifts
    k = int(np.nonzero(active)[0].max()) if active.any() else 0
    return float(shifts[k])


def _shift_root_bisection(v: np.ndarray, weights: np.ndarray, demand: float) -> float:
    """Safeguarded bisection on phi, then one closed-form polish on the
    identified active set so the residual is at rounding level."""

    def phi(s: float) -> float:
        return float(weights @ np.maximum(v - s, 0.0)) - demand

    hi = float(v.max())
    lo = hi - demand / float(weights.sum()) - 1.0
    while phi(lo) < 0.0:
        lo -= 2.0 * (hi - lo)
    while hi - lo > _BISECTION_TOL * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if phi(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    active = v - 0.5 * (lo + hi) > 0.0
    if not active.any():
        return 0.5 * (lo + hi)
    return float((weights[active] @ v[active] - demand) / weights[active].sum())


def project_demand_slice(v, weights, demand: float,
                         nonneg: bool = True) -> tuple[np.ndarray, float]:
    """Project one flattened group slice onto its demand constraint.

    Minimizes sum_i w_i (x_i - v_i)^2 subject to sum_i w_i x_i = demand and,
    when ``nonneg``, x >= 0.  The weighted-norm KKT system gives the uniform
    shift x_i = max(0, v_i - lam): the shift does not scale with the weights
    (they cancel from stationarity), only the root equation sees them.
    Returns (x, lam).
    """
    v = np.asarray(v, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if demand <= 0:
        raise ValueError("demand must be positive")
    if np.any(weights <= 0):
        raise ValueError("weights must be positive")
    if not nonneg:
        lam = float((weights @ v - demand) / weights.sum())
        return v - lam, lam
    if v.size <= _SORT_SCAN_LIMIT:
        lam = _shift_root_sort_scan(v, weights, demand)
    else:
        lam = _shift_root_bisection(v, weights, demand)
    return np.maximum(v - lam, 0.0), lam


class DemandFlowSet(FeasibleSet):
    """Feasible departure-rate profiles: per group (o/d pair) the flow over
    the member channels integrates to the group's demand; optionally
    nonnegative.

    ``owner[c]`` is the group index of channel ``c``; groups must partition
    the channels, every demand must be positive.  The set is a product over
    groups, so projection decomposes groupwise.
    """

    def __init__(self, owner, demands, grid: TimeGrid, nonneg: bool = True):
        owner = np.asarray(owner, dtype=int).copy()
        demands = np.asarray(demands, dtype=float).copy()
        if owner.ndim != 1 or demands.ndim != 1:
            raise SetConstructionError("owner and demands must be 1-D")
        if np.any(demands <= 0):
            raise SetConstructionError("every group demand must be positive")
        present = np.unique(owner)
        if len(present) != demands.size or present[0] != 0 or present[-1] != demands.size - 1:
            raise SetConstructionError(
                "owner must use every group index 0..len(demands)-1"
            )
        owner.setflags(write=False)
        demands.setflags(write=False)
        self.owner = owner
        self.demands = demands
        self.grid = grid
        self.nonneg = bool(nonneg)
        self._groups = [np.nonzero(owner == g)[0] for g in range(demands.size)]

    @property
    def channels(self) -> int:
        return self.owner.size

    def shape(self, grid: TimeGrid) -> tuple[int, int]:
        return (self.channels, grid.bins)

    def group_totals(self, x: HVector, grid: TimeGrid) -> np.ndarray:
        """Time-integrated flow per group."""
        x = check_vector(x, grid)
        per_channel = x @ grid.weights
        return np.array([per_channel[idx].sum() for idx in self._groups])

    def project(self, x: HVector, grid: TimeGrid) -> ProjectionReport:
        x = check_vector(x, grid)
        if x.shape[0] != self.channels:
            raise ValueError(f"expected {self.channels} channels, got {x.shape[0]}")
        point = np.empty_like(x)
        lams = np.empty(self.demands.size)
        residual = 0.0
        for g, idx in enumerate(self._groups):
            v = x[idx, :].ravel()
            w = np.tile(grid.weights, idx.size)
            xg, lam = project_demand_slice(v, w, self.demands[g], self.nonneg)
            point[idx, :] = xg.reshape(idx.size, grid.bins)
            lams[g] = lam
            residual = max(residual, abs(float(w @ xg) - self.demands[g]))
            if self.nonneg:
                residual = max(residual, float(max(0.0, -xg.min(initial=0.0))))
        return ProjectionReport(point, lams, residual)

    def contains(self, x: HVector, grid: TimeGrid, tol: float = 1e-9) -> bool:
        x = check_vector(x, grid)
        if self.nonneg and np.any(x < -tol):
            return False
        totals = self.group_totals(x, grid)
        return bool(np.all(np.abs(totals - self.demands) <= tol))
