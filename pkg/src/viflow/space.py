"""Discretized function space for path-flow profiles.

Profiles live on a quadrature time grid: a vector is a dense ``(channels,
bins)`` float array ("HVector" throughout the package), and all inner
products and norms are weighted by the grid's quadrature weights.  Solver
convergence statements are statements about this weighted norm, so nothing
in the solver code may fall back to the plain Euclidean norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# An HVector is a plain ndarray of shape (channels, bins); the package keeps
# the raw numpy type instead of wrapping it.
HVector = np.ndarray

#: Relative tolerance for the weights-sum-to-horizon invariant.
_WEIGHT_SUM_RTOL = 1e-12


class DimensionMismatch(ValueError):
    """Shapes of operands, or operand vs. grid, do not agree."""


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Quadrature grid on a planning horizon ``[t0, t1]``.

    ``weights[i]`` is the measure (hours) of bin ``i``; weights are positive
    and sum to ``t1 - t0``.  Bins are contiguous, so edges and centers are
    recovered from cumulative sums.
    """

    t0: float
    t1: float
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).copy()
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty 1-D array")
        if not self.t0 < self.t1:
            raise ValueError(f"need t0 < t1, got [{self.t0}, {self.t1}]")
        if not np.all(w > 0):
            raise ValueError("all quadrature weights must be positive")
        measure = self.t1 - self.t0
        if abs(w.sum() - measure) > _WEIGHT_SUM_RTOL * max(1.0, abs(measure)):
            raise ValueError(
                f"weights sum to {w.sum()!r}, expected t1 - t0 = {measure!r}"
            )
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, t0: float, t1: float, bins: int) -> "TimeGrid":
        """Uniform grid with ``bins`` equal bins covering ``[t0, t1]``."""
        if bins < 1:
            raise ValueError("bins must be a positive integer")
        return cls(t0, t1, np.full(bins, (t1 - t0) / bins))

    @property
    def bins(self) -> int:
        return self.weights.size

    @property
    def measure(self) -> float:
        return self.t1 - self.t0

    @property
    def is_uniform(self) -> bool:
        return bool(np.allclose(self.weights, self.weights[0], rtol=1e-12, atol=0.0))

    def bin_edges(self) -> np.ndarray:
        """The bins+1 edge times, starting at t0."""
        edges = np.empty(self.bins + 1)
        edges[0] = self.t0
        np.cumsum(self.weights, out=edges[1:])
        edges[1:] += self.t0
        return edges

    def bin_centers(self) -> np.ndarray:
        edges = self.bin_edges()
        return 0.5 * (edges[:-1] + edges[1:])


def check_vector(u: HVector, grid: TimeGrid) -> np.ndarray:
    """Validate array shape against the grid and return it as float ndarray."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 2:
        raise DimensionMismatch(f"expected (channels, bins) array, got shape {u.shape}")
    if u.shape[1] != grid.bins:
        raise DimensionMismatch(
            f"vector has {u.shape[1]} bins but grid has {grid.bins}"
        )
    return u


def _check_pair(u: HVector, v: HVector, grid: TimeGrid) -> tuple[np.ndarray, np.ndarray]:
    u = check_vector(u, grid)
    v = check_vector(v, grid)
    if u.shape != v.shape:
        raise DimensionMismatch(f"shape mismatch: {u.shape} vs {v.shape}")
    return u, v


def inner(u: HVector, v: HVector, grid: TimeGrid) -> float:
    """Weighted inner product sum_c sum_i w_i u[c,i] v[c,i]."""
    u, v = _check_pair(u, v, grid)
    return float(np.einsum("ci,ci,i->", u, v, grid.weights))


def norm(u: HVector, grid: TimeGrid) -> float:
    """Norm induced by :func:`inner`."""
    u = check_vector(u, grid)
    # inner(u, u) can go negative by a few ulp for tiny u
    return float(np.sqrt(max(np.einsum("ci,ci,i->", u, u, grid.weights), 0.0)))


def combine(coeffs: list[float], vectors: list[HVector]) -> HVector:
    """Componentwise linear combination ``sum_j coeffs[j] * vectors[j]``."""
    if not coeffs or len(coeffs) != len(vectors):
        raise ValueError("need equally many coefficients and vectors, at least one")
    arrays = [np.asarray(v, dtype=float) for v in vectors]
    shape = arrays[0].shape
    for a in arrays[1:]:
        if a.shape != shape:
            raise DimensionMismatch(f"shape mismatch: {a.shape} vs {shape}")
    out = coeffs[0] * arrays[0]
    for c, a in zip(coeffs[1:], arrays[1:]):
        out += c * a
    return out
