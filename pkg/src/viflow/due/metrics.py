"""Equilibrium quality metrics on effective-delay profiles.

With piecewise-constant profiles the essential infimum over the horizon
coincides with the minimum over bins, so minimal costs are plain mins here.
"""

from __future__ import annotations

import numpy as np

__all__ = ["min_costs", "od_gap", "support_mask", "wardrop_excess"]


def min_costs(psi: np.ndarray, owner) -> tuple[np.ndarray, np.ndarray]:
    """Per-path and per-o/d minimal effective delays.

    Returns (nu_p, nu_w): nu_p[p] is the minimum of psi[p, :] over departure
    bins, nu_w[w] the minimum of nu_p over the pair's paths.
    """
    psi = np.asarray(psi, dtype=float)
    owner = np.asarray(owner, dtype=int)
    if not np.all(np.isfinite(psi)):
        raise ValueError("effective delays must be finite")
    nu_p = psi.min(axis=1)
    groups = owner.max() + 1
    nu_w = np.array([nu_p[owner == w].min() for w in range(groups)])
    return nu_p, nu_w


def support_mask(h: np.ndarray, threshold: float) -> np.ndarray:
    """(path, bin) entries carrying flow above the threshold."""
    return np.asarray(h) > threshold


def od_gap(h: np.ndarray, psi: np.ndarray, owner,
           support_threshold: float = 0.0) -> np.ndarray:
    """Spread (max - min) of effective delays over the supported departures
    of each o/d pair; zero at an exact equilibrium.

    Pairs with empty support are reported as nan (undefined), not raised.
    """
    h = np.asarray(h, dtype=float)
    psi = np.asarray(psi, dtype=float)
    owner = np.asarray(owner, dtype=int)
    if not np.all(np.isfinite(psi)):
        raise ValueError("effective delays must be finite")
    supported = support_mask(h, support_threshold)
    groups = owner.max() + 1
    gaps = np.full(groups, np.nan)
    for w in range(groups):
        vals = psi[owner == w][supported[owner == w]]
        if vals.size:
            gaps[w] = float(vals.max() - vals.min())
    return gaps


def wardrop_excess(h: np.ndarray, psi: np.ndarray, owner,
                   support_threshold: float = 0.0) -> np.ndarray:
    """Per o/d pair: worst supported effective delay minus the pair's minimal
    cost over *all* departures.  Zero iff every used departure is minimal;
    nan for pairs with empty support."""
    h = np.asarray(h, dtype=float)
    psi = np.asarray(psi, dtype=float)
    owner = np.asarray(owner, dtype=int)
    _, nu_w = min_costs(psi, owner)
    supported = support_mask(h, support_threshold)
    groups = owner.max() + 1
    excess = np.full(groups, np.nan)
    for w in range(groups):
        vals = psi[owner == w][supported[owner == w]]
        if vals.size:
            excess[w] = float(vals.max() - nu_w[w])
    return excess
