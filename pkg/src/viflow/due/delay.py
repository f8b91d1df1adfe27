"""Path delay operators and the effective-delay map.

Two delay models:

- ``AffineKernel``: D(h) = d0 + K (W h) with an entrywise-nonnegative
  interaction kernel over (path, bin) pairs and quadrature weights W.  With a
  symmetric positive semidefinite kernel the operator is monotone in the
  weighted inner product; it extends naturally to negative (infeasible)
  flows, which the solvers do query.
- ``PointQueue``: delays produced by deterministic first-in-first-out
  point-queue link dynamics, composed link by link along each path via exact
  cumulative-count curves.  The raw loader rejects negative inflows; the
  operator wrapper produced by :func:`build_due_problem` clamps them to zero
  and logs the clamped mass instead, so solver iterates outside the feasible
  set stay evaluable.

Effective delay adds a late-arrival penalty: for a departure at time t on
path p with travel time D, the cost is D + penalty(t + D - target_arrival).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..operators import VIProblem
from ..sets import DemandFlowSet
from ..space import HVector, TimeGrid, check_vector
from .network import Network, PathSet

logger = logging.getLogger(__name__)

__all__ = [
    "Penalty", "AffineKernel", "PointQueue", "DelayModel", "LinkLoad",
    "LoadingResult", "load_point_queue", "path_delays", "effective_delay",
    "build_due_problem", "path_free_flow_times",
]


@dataclass(frozen=True)
class Penalty:
    """Arrival penalty coeff * max(0, slack)^exponent, zero for early
    arrivals.  Exponent 2 keeps the map differentiable at the target time;
    exponent 1 keeps the effective delay globally Lipschitz."""

    coeff: float = 0.0
    exponent: int = 2

    def __post_init__(self):
        if self.coeff < 0:
            raise ValueError("penalty coefficient must be nonnegative")
        if self.exponent not in (1, 2):
            raise ValueError("penalty exponent must be 1 or 2")

    def __call__(self, slack: np.ndarray) -> np.ndarray:
        pos = np.maximum(slack, 0.0)
        return self.coeff * (pos if self.exponent == 1 else pos * pos)


def path_free_flow_times(network: Network, path_set: PathSet) -> np.ndarray:
    by_id = network.link_by_id()
    return np.array(
        [sum(by_id[lid].free_flow_time for lid in path) for path in path_set.paths]
    )


@dataclass(frozen=True)
class AffineKernel:
    """D(h)[p, i] = d0[p] + sum_{q,j} kernel[(p,i),(q,j)] w_j h[q, j].

    ``kernel`` is indexed by flattened (path, bin) in C order and must be
    entrywise nonnegative (more flow never reduces delays).
    """

    d0: np.ndarray
    kernel: np.ndarray

    def __post_init__(self):
        d0 = np.asarray(self.d0, dtype=float)
        kernel = np.asarray(self.kernel, dtype=float)
        if np.any(d0 <= 0):
            raise ValueError("free-flow delays d0 must be positive")
        n = d0.size
        if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1]:
            raise ValueError("kernel must be square")
        if kernel.shape[0] % n != 0:
            raise ValueError("kernel size must be a multiple of the path count")
        if np.any(kernel < 0):
            raise ValueError("kernel must be entrywise nonnegative")
        object.__setattr__(self, "d0", d0)
        object.__setattr__(self, "kernel", kernel)

    @property
    def paths(self) -> int:
        return self.d0.size

    def delays(self, h: HVector, grid: TimeGrid) -> np.ndarray:
        h = check_vector(h, grid)
        wflat = np.tile(grid.weights, h.shape[0])
        flow = self.kernel @ (wflat * h.ravel())
        return self.d0[:, None] + flow.reshape(h.shape)

    def operator_norm(self, grid: TimeGrid) -> float:
        """Lipschitz constant of h -> D(h) in the weighted norm:
        the spectral norm of W^(1/2) K W^(1/2)."""
        root_w = np.sqrt(np.tile(grid.weights, self.paths))
        return float(np.linalg.norm(root_w[:, None] * self.kernel * root_w, 2))

    @classmethod
    def from_network(cls, network: Network, path_set: PathSet, grid: TimeGrid,
                     congestion_ratio: float = 0.5,
                     time_corr: float = 0.25) -> "AffineKernel":
        """Synthesize a PSD kernel from the topology: interaction strength is
        the number of shared links between two paths, smoothed over time by
        an exponential correlation with scale ``time_corr`` hours.

        The kernel is rescaled so the mean congestion delay of the
        uniform-split feasible profile is ``congestion_ratio`` times the mean
        free-flow delay, which keeps instances comparably conditioned across
        fixtures and grids.
        """
        d0 = path_free_flow_times(network, path_set)
        link_ids = [link.id for link in network.links]
        incidence = np.zeros((len(path_set), len(link_ids)))
        col = {lid: j for j, lid in enumerate(link_ids)}
        for p, path in enumerate(path_set.paths):
            for lid in path:
                incidence[p, col[lid]] = 1.0
        overlap = incidence @ incidence.T
        t = grid.bin_centers()
        time_kernel = np.exp(-np.abs(t[:, None] - t[None, :]) / time_corr)
        raw = np.kron(overlap, time_kernel)
        # uniform-split feasible profile for the normalization
        demands = np.array(network.demands)
        per_path = np.zeros(len(path_set))
        counts = np.bincount(path_set.owner, minlength=len(network.od_pairs))
        for p, w in enumerate(path_set.owner):
            per_path[p] = demands[w] / (counts[w] * grid.measure)
        h_uniform = np.repeat(per_path[:, None], grid.bins, axis=1)
        wflat = np.tile(grid.weights, len(path_set))
        congestion = raw @ (wflat * h_uniform.ravel())
        mean_cong = float(congestion.mean())
        if mean_cong <= 0:
            raise ValueError("degenerate kernel normalization")
        scale = congestion_ratio * float(d0.mean()) / mean_cong
        return cls(d0, scale * raw)


@dataclass(frozen=True)
class PointQueue:
    """Marker for the point-queue network-loading delay model."""


DelayModel = AffineKernel | PointQueue


@dataclass
class LinkLoad:
    """Per-link loading curves: cumulative entrances at breakpoint times and
    the FIFO exit time of the vehicle at each cumulative level."""

    link_id: str
    times: np.ndarray
    cum_in: np.ndarray
    exit_time: np.ndarray

    def cumulative_in(self, t) -> np.ndarray:
        return np.interp(t, self.times, self.cum_in, left=0.0,
                         right=self.cum_in[-1])

    def cumulative_out(self, t) -> np.ndarray:
        return np.interp(t, self.exit_time, self.cum_in, left=0.0,
                         right=self.cum_in[-1])

    def queue(self, t) -> np.ndarray:
        """Vehicles inside the link (traversing or queued) at time t."""
        return self.cumulative_in(t) - self.cumulative_out(t)

    @property
    def total_in(self) -> float:
        return float(self.cum_in[-1])


@dataclass
class LoadingResult:
    """Outcome of one network loading.

    ``departure_times`` are the shared per-path breakpoints (bin edges
    interleaved with bin midpoints); ``path_arrival_times[p][k]`` is the
    exact FIFO arrival time at the destination for a departure at
    ``departure_times[k]``.  ``path_delays[p, i]`` is the midpoint travel
    time for bin i.
    """

    departure_times: np.ndarray
    path_arrival_times: list[np.ndarray]
    path_delays: np.ndarray
    links: dict[str, LinkLoad]


def _topological_link_order(path_set: PathSet) -> list[str]:
    """Order links so every path visits its links in processing order.
    Raises on cyclic dependencies (two paths traversing shared links in
    opposite order), which this loader does not support."""
    nodes: set[str] = set()
    succ: dict[str, set[str]] = {}
    indeg: dict[str, int] = {}
    for path in path_set.paths:
        for lid in path:
            nodes.add(lid)
            succ.setdefault(lid, set())
            indeg.setdefault(lid, 0)
        for a, b in zip(path, path[1:]):
            if b not in succ[a]:
                succ[a].add(b)
                indeg[b] += 1
    ready = sorted(l for l in nodes if indeg[l] == 0)
    order = []
    while ready:
        a = ready.pop(0)
        order.append(a)
        added = []
        for b in succ[a]:
            indeg[b] -= 1
            if indeg[b] == 0:
                added.append(b)
        ready.extend(sorted(added))
        ready.sort()
    if len(order) != len(nodes):
        raise ValueError(
            "paths traverse shared links in conflicting orders; the "
            "point-queue loader needs an acyclic link dependency graph"
        )
    return order


def load_point_queue(network: Network, path_set: PathSet, h: HVector,
                     grid: TimeGrid) -> LoadingResult:
    """Deterministic FIFO point-queue loading of path departure rates.

    Vehicles entering a link traverse its free-flow time, then exit through a
    bottleneck of the link's capacity; the exit time of the cumulative level
    N at entrance time t is the Newell lower envelope, computed exactly for
    piecewise-linear cumulative curves.  Path delays compose link by link:
    the arrival curve at link j+1 is the exit curve from link j.
    """
    h = check_vector(h, grid)
    if h.shape[0] != len(path_set):
        raise ValueError(f"expected {len(path_set)} path flows, got {h.shape[0]}")
    if np.any(h < 0):
        raise ValueError("point-queue loading requires nonnegative inflows")
    if not grid.is_uniform:
        raise ValueError("point-queue loading requires a uniform grid")

    edges = grid.bin_edges()
    centers = grid.bin_centers()
    breakpoints = np.empty(2 * grid.bins + 1)
    breakpoints[0::2] = edges
    breakpoints[1::2] = centers

    # cumulative departures per path at the breakpoints
    cum = []
    for p in range(len(path_set)):
        half_masses = np.repeat(grid.weights * h[p, :] / 2.0, 2)
        cum.append(np.concatenate([[0.0], np.cumsum(half_masses)]))

    by_id = network.link_by_id()
    cur_times = [breakpoints.copy() for _ in range(len(path_set))]
    stage = [0] * len(path_set)
    links: dict[str, LinkLoad] = {}

    for lid in _topological_link_order(path_set):
        contributors = [p for p in range(len(path_set))
                        if stage[p] < len(path_set.paths[p])
                        and path_set.paths[p][stage[p]] == lid]
        merged = np.unique(np.concatenate([cur_times[p] for p in contributors]))
        total = np.zeros_like(merged)
        for p in contributors:
            total += np.interp(merged, cur_times[p], cum[p],
                               left=0.0, right=cum[p][-1])
        link = by_id[lid]
        exit_time = np.empty_like(merged)
        exit_time[0] = merged[0] + link.free_flow_time
        for k in range(1, merged.size):
            exit_time[k] = max(
                merged[k] + link.free_flow_time,
                exit_time[k - 1] + (total[k] - total[k - 1]) / link.capacity,
            )
        links[lid] = LinkLoad(lid, merged, total, exit_time)
        for p in contributors:
            idx = np.searchsorted(merged, cur_times[p])
            cur_times[p] = exit_time[idx]
            stage[p] += 1

    delays = np.empty((len(path_set), grid.bins))
    for p in range(len(path_set)):
        delays[p, :] = (cur_times[p] - breakpoints)[1::2]
    return LoadingResult(breakpoints, cur_times, delays, links)


def path_delays(model: DelayModel, network: Network, path_set: PathSet,
                h: HVector, grid: TimeGrid) -> np.ndarray:
    if isinstance(model, AffineKernel):
        return model.delays(h, grid)
    if isinstance(model, PointQueue):
        return load_point_queue(network, path_set, h, grid).path_delays
    raise TypeError(f"unknown delay model {model!r}")


def effective_delay(model: DelayModel, penalty: Penalty, network: Network,
                    path_set: PathSet, h: HVector, grid: TimeGrid) -> np.ndarray:
    """Travel time plus arrival penalty, per (path, departure bin)."""
    delays = path_delays(model, network, path_set, h, grid)
    targets = np.array(
        [network.od_pairs[w].target_arrival for w in path_set.owner]
    )
    arrival_slack = grid.bin_centers()[None, :] + delays - targets[:, None]
    return delays + penalty(arrival_slack)


def build_due_problem(network: Network, path_set: PathSet, model: DelayModel,
                      penalty: Penalty, grid: TimeGrid,
                      nonneg: bool = True) -> VIProblem:
    """Wire a delay model into a VI over the feasible flow set.

    For the point-queue model the operator clamps negative entries to zero
    before loading (solver iterates may leave the feasible set) and logs the
    clamped mass; the affine kernel is evaluated as-is.  A Lipschitz hint is
    attached only when one is analytically available (affine kernel with
    penalty off or linear penalty); otherwise use the adaptive step rule.
    """
    feasible = DemandFlowSet(np.array(path_set.owner), np.array(network.demands),
                             grid, nonneg=nonneg)

    if isinstance(model, AffineKernel):
        def operator(x: HVector) -> np.ndarray:
            return effective_delay(model, penalty, network, path_set, x, grid)

        if penalty.coeff == 0.0:
            hint = model.operator_norm(grid)
        elif penalty.exponent == 1:
            hint = model.operator_norm(grid) * (1.0 + penalty.coeff)
        else:
            hint = None
    elif isinstance(model, PointQueue):
        def operator(x: HVector) -> np.ndarray:
            clamped = np.maximum(x, 0.0)
            lost = float(np.abs(x - clamped).sum())
            if lost > 0.0:
                logger.debug("point-queue operator clamped negative inflow "
                             "mass %.3g", lost)
            return effective_delay(model, penalty, network, path_set, clamped,
                                   grid)

        hint = None
    else:
        raise TypeError(f"unknown delay model {model!r}")

    return VIProblem(operator, feasible, grid, lipschitz_hint=hint,
                     name="due")


def builtin_due_problem(fixture_name: str = "two_path_toy", bins: int = 16,
                        t0: float = 0.0, t1: float = 2.0,
                        model: str = "affine_kernel",
                        congestion_ratio: float = 0.5, time_corr: float = 0.25,
                        penalty_coeff: float = 0.1, penalty_exponent: int = 2,
                        nonneg: bool = True) -> VIProblem:
    """DUE instance on a bundled fixture, for the builtin-problem registry."""
    from .network import fixture

    network, path_set = fixture(fixture_name)
    grid = TimeGrid.uniform(t0, t1, bins)
    if model == "affine_kernel":
        delay_model: DelayModel = AffineKernel.from_network(
            network, path_set, grid, congestion_ratio=congestion_ratio,
            time_corr=time_corr)
    elif model == "point_queue":
        delay_model = PointQueue()
    else:
        raise ValueError(f"unknown delay model name {model!r}")
    penalty = Penalty(penalty_coeff, penalty_exponent)
    problem = build_due_problem(network, path_set, delay_model, penalty, grid,
                                nonneg=nonneg)
    problem.name = f"due:{fixture_name}"
    return problem
