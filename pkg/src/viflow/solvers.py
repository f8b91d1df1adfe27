"""First-order VI solvers.

The main scheme is a forward-backward-forward splitting with an extra
vanishing extrapolation term: per iteration

    z = P(x - gamma F(x))
    r = z + gamma (F(x) - F(z))
    x+ = (1 - alpha_k - beta_k) x + beta_k r

The -alpha_k x leakage is what upgrades plain FBF from weak to strong
convergence and steers the iterates to the minimal-norm solution.  The
step can be a constant gamma in (0, 1/L) or the Lipschitz-free adaptive
rule

    gamma_{k+1} = min(rho |z - x| / |F(z) - F(x)|, gamma_k)

which is non-increasing and can never fall below min(gamma0, rho / L).

Baselines: plain FBF (x+ = r), extragradient (two projections per
iteration), and projected gradient (one operator evaluation, may fail to
converge off cocoercive problems -- reported as MaxIters, never raised).

One caveat on stopping: the relative-gap statistic compares successive
iterates, so it can be small far from a solution (e.g. for a deliberately
stalled scheme); the residual |x - z| is reported alongside it for that
reason.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .operators import VIProblem, evaluate
from .space import HVector, TimeGrid, check_vector, norm

_DIVERGENCE_FACTOR = 1e6
_CONSTANT_STEP_MARGIN = 0.99


class SolveStatus(enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    DIVERGED = "diverged"


@dataclass(frozen=True)
class ConstantStep:
    """Fixed step; valid only with a known Lipschitz bound, gamma < 1/L."""

    gamma: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True)
class AdaptiveStep:
    """Lipschitz-free non-increasing step rule."""

    gamma0: float = 1.0
    rho: float = 0.5

    def __post_init__(self):
        if self.gamma0 <= 0:
            raise ValueError("gamma0 must be positive")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")


StepRule = ConstantStep | AdaptiveStep


@dataclass(frozen=True)
class Schedule:
    """Extrapolation parameters: alpha_k vanishing but not summable, and
    beta_k sandwiched in [alpha_floor, 1 - alpha_k).

    ``alpha_floor`` is the infimum of the beta sequence; the convergence
    argument only needs some positive lower bound, so the floor check is
    non-strict.
    """

    alpha: Callable[[int], float]
    beta: Callable[[int], float]
    alpha_floor: float

    def validate(self, kmax: int) -> None:
        if self.alpha_floor <= 0:
            raise ValueError("alpha_floor must be positive")
        for k in range(kmax):
            a = self.alpha(k)
            b = self.beta(k)
            if not 0.0 < a < 1.0:
                raise ValueError(f"alpha({k}) = {a} outside (0, 1)")
            if not self.alpha_floor <= b < 1.0 - a:
                raise ValueError(
                    f"beta({k}) = {b} outside [{self.alpha_floor}, {1.0 - a})"
                )


def default_schedule(beta_bar: float = 0.5, alpha_scale: float = 1.0) -> Schedule:
    """alpha_k = min(alpha_scale / (k + 2), 1/2), beta_k = beta_bar (1 - alpha_k).

    alpha_scale stretches how fast the extrapolation weight decays; larger
    values trade early progress for a faster-vanishing minimal-norm bias.
    """
    if not 0.0 < beta_bar < 1.0:
        raise ValueError("beta_bar must lie in (0, 1)")
    if alpha_scale <= 0:
        raise ValueError("alpha_scale must be positive")

    def alpha(k: int) -> float:
        return min(alpha_scale / (k + 2), 0.5)

    def beta(k: int) -> float:
        return beta_bar * (1.0 - alpha(k))

    return Schedule(alpha, beta, alpha_floor=beta_bar / 2.0)


class IterationTrace:
    """Per-iteration diagnostics, appended as the solve runs.

    ``operator_evals`` and ``projections`` are cumulative counters; their
    per-iteration increments are fixed by the scheme (2 evaluations and 1
    projection for FBF, etc.).
    """

    __slots__ = ("eps", "gamma", "residual", "dist_to_known", "wall_ms",
                 "operator_evals", "projections")

    def __init__(self):
        self.eps: list[float] = []
        self.gamma: list[float] = []
        self.residual: list[float] = []
        self.dist_to_known: list[float] = []
        self.wall_ms: list[float] = []
        self.operator_evals: list[int] = []
        self.projections: list[int] = []

    def append(self, eps, gamma, residual, dist, ms, evals, projections):
        self.eps.append(eps)
        self.gamma.append(gamma)
        self.residual.append(residual)
        self.dist_to_known.append(dist)
        self.wall_ms.append(ms)
        self.operator_evals.append(evals)
        self.projections.append(projections)

    def __len__(self) -> int:
        return len(self.eps)


@dataclass
class SolveResult:
    x_final: HVector
    status: SolveStatus
    trace: IterationTrace
    iterations: int

    @property
    def converged(self) -> bool:
        return self.status is SolveStatus.CONVERGED


@dataclass(frozen=True)
class IterationSnapshot:
    """Handed to solver callbacks once per iteration, before the state is
    overwritten.  ``gamma_next`` is the step the *next* iteration will use
    (equal to ``gamma`` for constant rules)."""

    k: int
    x: HVector
    z: HVector
    r: HVector
    x_next: HVector
    gamma: float
    gamma_next: float
    eps: float
    residual: float


Callback = Callable[[IterationSnapshot], None]


def relative_gap(x_next: HVector, x: HVector, grid: TimeGrid) -> float:
    """Squared-norm relative change |x+ - x|^2 / |x|^2.

    A zero denominator is flagged by returning +inf (or 0.0 for the
    stationary-at-zero case), never raised.
    """
    diff = norm(x_next - x, grid)
    base = norm(x, grid)
    if base == 0.0:
        return 0.0 if diff == 0.0 else math.inf
    return (diff / base) ** 2


def adaptive_gamma_update(gamma_k: float, rho: float, x: HVector, z: HVector,
                          fx: HVector, fz: HVector, grid: TimeGrid) -> float:
    """One application of the adaptive step recursion."""
    if gamma_k <= 0:
        raise ValueError("gamma_k must be positive")
    denom = norm(fz - fx, grid)
    if denom == 0.0:
        return gamma_k
    return min(rho * norm(z - x, grid) / denom, gamma_k)


def fbf_step(problem: VIProblem, x: HVector, gamma: float) -> tuple[HVector, HVector]:
    """One forward-backward-forward step from any point x (feasible or not):
    returns (z, r) with z feasible.  Costs exactly two operator evaluations
    and one projection."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    x = check_vector(x, problem.grid)
    fx = evaluate(problem, x)
    z = problem.set.project(x - gamma * fx, problem.grid).point
    fz = evaluate(problem, z)
    return z, z + gamma * (fx - fz)


def _initial_gamma(problem: VIProblem, step: StepRule) -> float:
    if isinstance(step, AdaptiveStep):
        return step.gamma0
    L = problem.lipschitz_hint
    if L is None:
        raise ValueError(
            "constant step rule needs a Lipschitz hint on the problem; "
            "use AdaptiveStep for operators without one"
        )
    if L > 0 and step.gamma > _CONSTANT_STEP_MARGIN / L:
        raise ValueError(
            f"gamma = {step.gamma} too large for L = {L}; "
            f"need gamma <= {_CONSTANT_STEP_MARGIN / L}"
        )
    return step.gamma


def _diverged(x: HVector, limit: float) -> bool:
    return not np.all(np.isfinite(x)) or float(np.abs(x).max(initial=0.0)) > limit


def _fbf_loop(problem: VIProblem, step: StepRule, schedule: Schedule | None,
              x0: HVector, tol: float, kmax: int,
              callback: Callback | None) -> SolveResult:
    """Shared FBF iteration; ``schedule`` None means the plain scheme
    x+ = r, otherwise the extrapolated update."""
    grid = problem.grid
    gamma = _initial_gamma(problem, step)
    rho = step.rho if isinstance(step, AdaptiveStep) else None
    x = check_vector(x0, grid).copy()
    limit = _DIVERGENCE_FACTOR * (1.0 + float(np.abs(x).max(initial=0.0)))
    known = problem.known_solution
    trace = IterationTrace()
    evals = 0
    projections = 0
    status = SolveStatus.MAX_ITERS
    for k in range(kmax):
        t_start = time.perf_counter()
        fx = evaluate(problem, x)
        z = problem.set.project(x - gamma * fx, grid).point
        fz = evaluate(problem, z)
        evals += 2
        projections += 1
        r = z + gamma * (fx - fz)
        if schedule is None:
            x_next = r
        else:
            a = schedule.alpha(k)
            b = schedule.beta(k)
            x_next = (1.0 - a - b) * x + b * r
        gamma_next = gamma
        if rho is not None:
            gamma_next = adaptive_gamma_update(gamma, rho, x, z, fx, fz, grid)
        eps = relative_gap(x_next, x, grid)
        residual = norm(x - z, grid)
        dist = norm(x_next - known, grid) if known is not None else math.nan
        trace.append(eps, gamma, residual, dist,
                     (time.perf_counter() - t_start) * 1e3, evals, projections)
        if callback is not None:
            callback(IterationSnapshot(k, x, z, r, x_next, gamma, gamma_next,
                                       eps, residual))
        if _diverged(x_next, limit) or math.isnan(eps):
            x = x_next
            status = SolveStatus.DIVERGED
            break
        x = x_next
        gamma = gamma_next
        if eps <= tol:
            status = SolveStatus.CONVERGED
            break
    return SolveResult(x, status, trace, len(trace))


def solve_fbf(problem: VIProblem, step: StepRule, schedule: Schedule,
              x0: HVector, tol: float = 1e-4, kmax: int = 10_000,
              callback: Callback | None = None) -> SolveResult:
    """Strongly convergent FBF iteration (constant or adaptive step).

    On success the final iterate approximates the minimal-norm solution of
    the VI.  Iterates live in the ambient space; only z is feasible.
    """
    schedule.validate(kmax)
    return _fbf_loop(problem, step, schedule, x0, tol, kmax, callback)


def solve_tseng_plain(problem: VIProblem, step: StepRule, x0: HVector,
                      tol: float = 1e-4, kmax: int = 10_000,
                      callback: Callback | None = None) -> SolveResult:
    """Classical FBF without the extrapolation term: x+ = r.  Converges (at
    best weakly, in the continuous theory) to some solution, with no
    minimal-norm selection."""
    return _fbf_loop(problem, step, None, x0, tol, kmax, callback)


def solve_extragradient(problem: VIProblem, gamma: float, x0: HVector,
                        tol: float = 1e-4, kmax: int = 10_000,
                        callback: Callback | None = None) -> SolveResult:
    """Extragradient baseline: y = P(x - gamma F(x)), x+ = P(x - gamma F(y)).
    Two projections and two evaluations per iteration."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    grid = problem.grid
    x = check_vector(x0, grid).copy()
    limit = _DIVERGENCE_FACTOR * (1.0 + float(np.abs(x).max(initial=0.0)))
    known = problem.known_solution
    trace = IterationTrace()
    evals = 0
    projections = 0
    status = SolveStatus.MAX_ITERS
    for k in range(kmax):
        t_start = time.perf_counter()
        fx = evaluate(problem, x)
        y = problem.set.project(x - gamma * fx, grid).point
        fy = evaluate(problem, y)
        x_next = problem.set.project(x - gamma * fy, grid).point
        evals += 2
        projections += 2
        eps = relative_gap(x_next, x, grid)
        residual = norm(x - y, grid)
        dist = norm(x_next - known, grid) if known is not None else math.nan
        trace.append(eps, gamma, residual, dist,
                     (time.perf_counter() - t_start) * 1e3, evals, projections)
        if callback is not None:
            callback(IterationSnapshot(k, x, y, x_next, x_next, gamma, gamma,
                                       eps, residual))
        if _diverged(x_next, limit) or math.isnan(eps):
            x = x_next
            status = SolveStatus.DIVERGED
            break
        x = x_next
        if eps <= tol:
            status = SolveStatus.CONVERGED
            break
    return SolveResult(x, status, trace, len(trace))


def solve_projected_gradient(problem: VIProblem, gamma: float, x0: HVector,
                             tol: float = 1e-4, kmax: int = 10_000,
                             callback: Callback | None = None) -> SolveResult:
    """Projected-gradient baseline: x+ = P(x - gamma F(x)).  One evaluation
    and one projection per iteration.  May legitimately cycle on problems
    that are not cocoercive; that shows up as MaxIters, never an exception."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    grid = problem.grid
    x = check_vector(x0, grid).copy()
    limit = _DIVERGENCE_FACTOR * (1.0 + float(np.abs(x).max(initial=0.0)))
    known = problem.known_solution
    trace = IterationTrace()
    evals = 0
    projections = 0
    status = SolveStatus.MAX_ITERS
    for k in range(kmax):
        t_start = time.perf_counter()
        fx = evaluate(problem, x)
        x_next = problem.set.project(x - gamma * fx, grid).point
        evals += 1
        projections += 1
        eps = relative_gap(x_next, x, grid)
        residual = norm(x - x_next, grid)
        dist = norm(x_next - known, grid) if known is not None else math.nan
        trace.append(eps, gamma, residual, dist,
                     (time.perf_counter() - t_start) * 1e3, evals, projections)
        if callback is not None:
            callback(IterationSnapshot(k, x, x_next, x_next, x_next, gamma,
                                       gamma, eps, residual))
        if _diverged(x_next, limit) or math.isnan(eps):
            x = x_next
            status = SolveStatus.DIVERGED
            break
        x = x_next
        if eps <= tol:
            status = SolveStatus.CONVERGED
            break
    return SolveResult(x, status, trace, len(trace))
