"""VI problem definitions, operator regularity diagnostics, and a library of
benchmark instances with known solution sets.

The diagnostics are sampling-based: they can certify the *presence* of
monotonicity or pseudomonotonicity violations, never their absence.  Sampling
draws Gaussians and projects them onto the feasible set, which concentrates
probe points near the boundary where violations of the implication-style
definition live.

Weak-to-weak continuity of the operator is automatic in finite dimensions and
is therefore documented but not tested anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .sets import Ball, Box, FeasibleSet
from .space import HVector, TimeGrid, check_vector, inner, norm


class OperatorEvaluationError(RuntimeError):
    """The operator produced non-finite values; carries the offending indices."""

    def __init__(self, indices: np.ndarray):
        self.indices = indices
        pairs = [tuple(int(i) for i in ij) for ij in indices[:8]]
        suffix = ", ..." if len(indices) > 8 else ""
        super().__init__(f"operator returned non-finite entries at {pairs}{suffix}")


@dataclass
class VIProblem:
    """A variational inequality: find x* in the set with
    <F(x*), x - x*> >= 0 for all feasible x.

    ``lipschitz_hint`` is an analytic upper bound on the Lipschitz constant
    when one is available (constant-step solvers require it).
    ``known_solution`` is the minimal-norm solution for benchmark instances
    that have one in closed form or via an independent oracle.
    """

    operator: Callable[[HVector], HVector]
    set: FeasibleSet
    grid: TimeGrid
    lipschitz_hint: float | None = None
    known_solution: HVector | None = None
    name: str = ""


@dataclass(frozen=True)
class MonotonicityReport:
    samples: int
    monotone_violations: int
    pseudomonotone_violations: int
    worst_violation: float


def evaluate(problem: VIProblem, x: HVector) -> HVector:
    """Evaluate the operator once, guarding shape and finiteness."""
    x = check_vector(x, problem.grid)
    y = np.asarray(problem.operator(x), dtype=float)
    if y.shape != x.shape:
        raise ValueError(f"operator returned shape {y.shape} for input {x.shape}")
    if not np.all(np.isfinite(y)):
        raise OperatorEvaluationError(np.argwhere(~np.isfinite(y)))
    return y


def _sample_points(problem: VIProblem, n: int, rng: np.random.Generator,
                   scale: float = 1.0) -> list[HVector]:
    return [problem.set.sample(problem.grid, rng, scale=scale) for _ in range(n)]


def sample_monotonicity(problem: VIProblem, n: int, seed: int,
                        slack: float = 1e-10) -> MonotonicityReport:
    """Probe ``n`` random feasible pairs for monotonicity and
    pseudomonotonicity violations.

    A monotone violation is <F(x) - F(y), x - y> < -slack.  A pseudomonotone
    violation is a pair with <F(x), y - x> >= 0 but <F(y), y - x> < -slack.
    Deterministic given the seed.
    """
    rng = np.random.default_rng(seed)
    grid = problem.grid
    mono = 0
    pseudo = 0
    worst = 0.0
    for _ in range(n):
        x = problem.set.sample(grid, rng)
        y = problem.set.sample(grid, rng)
        fx = evaluate(problem, x)
        fy = evaluate(problem, y)
        gap = inner(fx - fy, x - y, grid)
        if gap < -slack:
            mono += 1
            worst = max(worst, -gap)
        premise = inner(fx, y - x, grid)
        conclusion = inner(fy, y - x, grid)
        if premise >= 0.0 and conclusion < -slack:
            pseudo += 1
            worst = max(worst, -conclusion)
    return MonotonicityReport(n, mono, pseudo, worst)


def estimate_lipschitz(problem: VIProblem, n: int, seed: int) -> float:
    """Max difference quotient over sampled feasible pairs: a lower bound on
    the true Lipschitz constant."""
    rng = np.random.default_rng(seed)
    grid = problem.grid
    best = 0.0
    for _ in range(n):
        x = problem.set.sample(grid, rng)
        y = problem.set.sample(grid, rng)
        d = norm(x - y, grid)
        if d == 0.0:
            continue
        q = norm(evaluate(problem, x) - evaluate(problem, y), grid) / d
        best = max(best, q)
    return best


# ------------------------------------------------------------------ builtins

def _point_grid() -> TimeGrid:
    # single unit-weight bin: the weighted inner product reduces to the dot
    # product, so abstract R^d instances live on (d, 1) arrays
    return TimeGrid.uniform(0.0, 1.0, 1)


def _spd_matrix(dim: int, rng: np.random.Generator) -> np.ndarray:
    # soft ridge: strongly monotone, but weak enough that the positive
    # rescaling in scaled_pseudomonotone visibly breaks monotonicity
    a = rng.normal(size=(dim, dim))
    return a @ a.T / dim + 0.05 * np.eye(dim)


def _spectral_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2))


def _projected_gradient_oracle(m: np.ndarray, q: np.ndarray, box: Box,
                               grid: TimeGrid) -> np.ndarray:
    """Drive x <- P(x - gamma (Mx + q)) to stagnation.  Only used to stamp
    known_solution on small benchmark instances; the solvers under test never
    call this."""
    gamma = 0.9 / _spectral_norm(m)
    x = box.project(np.zeros((q.size, 1)), grid).point
    for _ in range(200_000):
        step = box.project(x - gamma * (m @ x + q[:, None]), grid).point
        if norm(step - x, grid) <= 1e-14 * (1.0 + norm(x, grid)):
            return step
        x = step
    return x


def _affine_operator(m: np.ndarray, q: np.ndarray) -> Callable[[HVector], HVector]:
    def op(x: HVector) -> HVector:
        return m @ x + q[:, None]

    return op


def builtin_problem(name: str, dim: int = 2, seed: int | None = None,
                    **params) -> VIProblem:
    """Benchmark VI instances.

    - ``zero_operator_box``: F = 0 on the box [lower, upper]^dim; the whole
      box solves the VI and the minimal-norm solution is its lower corner
      (for lower > 0).
    - ``linear_monotone``: F(x) = Mx + q on [0, 2]^dim.  With seed=None the
      canonical instance M = I, q = -1 with solution (1, ..., 1); otherwise
      a seeded random SPD M with the solution stamped by an independent
      projected-gradient oracle.
    - ``skew``: 2-D rotation F(a, b) = (b, -a) on a ball around the origin;
      monotone (not strictly), unique solution 0.
    - ``scaled_pseudomonotone``: the linear_monotone instance rescaled by the
      positive scalar field 1/(1 + |x|); pseudomonotone but in general no
      longer monotone, with the same solution set as its parent.
    - ``due``: delegates to the traffic equilibrium layer; params are
      forwarded to viflow.due.builtin_due_problem.
    """
    grid = _point_grid()
    if name == "zero_operator_box":
        lower = params.pop("lower", 1.0)
        upper = params.pop("upper", 2.0)
        _reject_extras(name, params)
        box = Box(lower, upper, shape=(dim, 1))
        p = box.project(np.zeros((dim, 1)), grid).point
        return VIProblem(lambda x: np.zeros_like(x), box, grid,
                         lipschitz_hint=0.0, known_solution=p, name=name)

    if name == "linear_monotone":
        _reject_extras(name, params)
        box = Box(0.0, 2.0, shape=(dim, 1))
        if seed is None:
            m = np.eye(dim)
            q = -np.ones(dim)
            known = np.ones((dim, 1))
        else:
            rng = np.random.default_rng(seed)
            m = _spd_matrix(dim, rng)
            q = 3.0 * rng.normal(size=dim)
            known = _projected_gradient_oracle(m, q, box, grid)
        return VIProblem(_affine_operator(m, q), box, grid,
                         lipschitz_hint=_spectral_norm(m),
                         known_solution=known, name=name)

    if name == "skew":
        radius = params.pop("radius", 1.0)
        _reject_extras(name, params)
        ball = Ball(np.zeros((2, 1)), radius)

        def op(x: HVector) -> HVector:
            return np.array([[x[1, 0]], [-x[0, 0]]])

        return VIProblem(op, ball, grid, lipschitz_hint=1.0,
                         known_solution=np.zeros((2, 1)), name=name)

    if name == "scaled_pseudomonotone":
        _reject_extras(name, params)
        parent = builtin_problem("linear_monotone", dim=dim, seed=seed)
        parent_op = parent.operator
        pgrid = parent.grid

        def op(x: HVector) -> HVector:
            return parent_op(x) / (1.0 + norm(x, pgrid))

        # positive rescaling keeps the solution set; the scale factor is at
        # most 1, so the parent's constant still bounds difference quotients
        # near the solution but is not a global certificate -> no hint
        return VIProblem(op, parent.set, pgrid, lipschitz_hint=None,
                         known_solution=parent.known_solution, name=name)

    if name == "due":
        from . import due

        return due.builtin_due_problem(dim=dim, seed=seed, **params)

    raise ValueError(f"unknown builtin problem {name!r}")


def _reject_extras(name: str, params: dict) -> None:
    if params:
        raise TypeError(f"unexpected parameters for {name!r}: {sorted(params)}")
