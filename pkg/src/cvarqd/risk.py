"""Discrete CVaR primitives and the confidence-level grid.

Cost convention throughout: larger realizations are worse.  At confidence
level y in (0, 1], CVaR is the expected value over the worst y-fraction of
outcomes; y = 1 is the plain expectation and y -> 0 approaches the maximum.

Computation uses the reweighting (dual) characterization: CVaR_y(Z) is the
largest xi-weighted expectation of Z over densities xi with xi_i in
[0, 1/y] and sum_i xi_i p_i = 1.  On a discrete distribution the maximizer
stacks weight 1/y on the largest values until probability mass y is
exhausted, with a fractional weight on the boundary atom.  (The
conditional-expectation form E[Z | Z >= VaR_y(Z)] coincides with the dual
on atomless distributions but differs when an atom straddles the quantile;
the dual is the defining computation here because the learning machinery
is built on the xi representation.)

Value tables indexed by a grid of confidence levels are interpolated in the
product variable g(y) = y * Q(y), the natural scale for these tables: g is
concave for CVaR-consistent data, piecewise-linear interpolation preserves
that concavity, and g(0) = 0 anchors queries below the smallest grid level.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

PROB_TOL = 1e-12


def _check_level(y: float) -> None:
    if not (0.0 < y <= 1.0):
        raise ValueError(f"confidence level must be in (0, 1], got {y}")


@dataclass(frozen=True)
class YGrid:
    """Ascending discretization y_1 < ... < y_m of the interval (0, 1]."""

    levels: np.ndarray

    def __post_init__(self):
        levels = np.array(self.levels, dtype=float)
        if levels.ndim != 1 or levels.size == 0:
            raise ValueError("levels must be a nonempty 1-d sequence")
        if np.any(np.diff(levels) <= 0):
            raise ValueError("levels must be strictly increasing")
        if levels[0] <= 0.0 or levels[-1] > 1.0:
            raise ValueError("levels must lie in (0, 1]")
        levels.setflags(write=False)
        object.__setattr__(self, "levels", levels)

    @classmethod
    def uniform(cls, m: int) -> "YGrid":
        """m equally spaced levels i/m for i = 1..m (so y_m = 1)."""
        if m < 1:
            raise ValueError("m must be >= 1")
        return cls(np.arange(1, m + 1) / m)

    @property
    def m(self) -> int:
        return self.levels.size

    @cached_property
    def knots(self) -> np.ndarray:
        """Interpolation abscissae [0, y_1, ..., y_m] for the product scale."""
        k = np.concatenate(([0.0], self.levels))
        k.setflags(write=False)
        return k

    def g_knots(self, q_slice: np.ndarray) -> np.ndarray:
        """Product-scale ordinates [0, y_1*q_1, ..., y_m*q_m] of a table slice."""
        q = np.asarray(q_slice, dtype=float)
        return np.concatenate((np.zeros(q.shape[:-1] + (1,)), self.levels * q), axis=-1)


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite-support distribution given by parallel value/probability arrays."""

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        probs = np.array(self.probs, dtype=float)
        if values.ndim != 1 or values.shape != probs.shape or values.size == 0:
            raise ValueError("values and probs must be equal-length 1-d arrays")
        if np.any(probs < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise ValueError("probabilities must sum to 1 within 1e-12")
        values.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))


def value_at_risk(d: DiscreteDistribution, y: float) -> float:
    """Smallest support value z with F(z) >= 1 - y."""
    _check_level(y)
    order = np.argsort(d.values, kind="stable")
    cum = np.cumsum(d.probs[order])
    idx = int(np.searchsorted(cum, 1.0 - y - PROB_TOL, side="left"))
    return float(d.values[order][min(idx, d.values.size - 1)])


def cvar(d: DiscreteDistribution, y: float) -> float:
    """Dual CVaR by greedy tail stacking.

    Sort values descending and assign reweighting 1/y until probability mass
    y is exhausted, with a fractional weight on the boundary atom; this is
    the exact maximizer of the xi-weighted expectation over the dual set.
    """
    _check_level(y)
    order = np.argsort(-d.values, kind="stable")
    vals = d.values[order]
    probs = d.probs[order]
    cum = np.cumsum(probs)
    take = np.clip(y - (cum - probs), 0.0, probs)
    return float(np.dot(take, vals) / y)


def cvar_bruteforce(d: DiscreteDistribution, y: float, grid_resolution: int = 7) -> float:
    """Independent dual maximization by grid search over feasible xi vectors.

    For each choice of a pinned coordinate, the remaining coordinates sweep a
    uniform grid on [0, 1/y] (endpoints included) and the pinned one is
    solved from the mass constraint.  Every vertex of the feasible polytope
    has all but one coordinate at a bound, so the candidate set contains all
    vertices and the search is exact up to roundoff for a linear objective.
    Restricted to small supports; intended as a cross-check of ``cvar``.
    """
    _check_level(y)
    if d.values.size > 6:
        raise ValueError("brute force is restricted to supports of <= 6 atoms")
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be >= 2")
    mask = d.probs > 0
    vals = d.values[mask]
    probs = d.probs[mask]
    n = vals.size
    cap = 1.0 / y
    if n == 1:
        return float(vals[0])
    axis = np.linspace(0.0, cap, grid_resolution)
    best = -np.inf
    for pinned in range(n):
        others = [i for i in range(n) if i != pinned]
        mesh = np.meshgrid(*([axis] * (n - 1)), indexing="ij")
        combos = np.stack([g.ravel() for g in mesh], axis=1)
        used = combos @ probs[others]
        xi_pinned = (1.0 - used) / probs[pinned]
        feasible = (xi_pinned >= -1e-12) & (xi_pinned <= cap + 1e-12)
        if not np.any(feasible):
            continue
        obj = combos @ (probs[others] * vals[others]) + xi_pinned * probs[pinned] * vals[pinned]
        best = max(best, float(obj[feasible].max()))
    assert best > -np.inf, "xi = 1 is always feasible"
    return best


def interpolate_yq(grid: YGrid, q_slice: np.ndarray, y_query):
    """Evaluate a table slice at off-grid levels via the product interpolant.

    Interpolates g(y) = y*Q(y) linearly through the knots (y_j, y_j*q_j)
    with anchor g(0) = 0, then divides by the query level.  Queries must lie
    in (0, y_m]; a 1e-9 slack absorbs roundoff from products like y*xi.
    """
    q = np.asarray(q_slice, dtype=float)
    if q.shape != (grid.m,):
        raise ValueError(f"slice must have length {grid.m}")
    yq = np.asarray(y_query, dtype=float)
    top = grid.levels[-1]
    if np.any(yq <= 0.0) or np.any(yq > top + 1e-9):
        raise ValueError(f"query levels must lie in (0, {top}]")
    clipped = np.minimum(yq, top)
    g = np.interp(clipped, grid.knots, grid.g_knots(q))
    out = g / clipped
    return float(out) if np.ndim(y_query) == 0 else out


def _chord_defects(levels: np.ndarray, q_table: np.ndarray) -> np.ndarray:
    g = levels * np.asarray(q_table, dtype=float)
    y0, y1, y2 = levels[:-2], levels[1:-1], levels[2:]
    t = (y1 - y0) / (y2 - y0)
    chord = (1.0 - t) * g[..., :-2] + t * g[..., 2:]
    return np.maximum(0.0, chord - g[..., 1:-1])


def concavity_defect(grid: YGrid, q_slice: np.ndarray) -> float:
    """Largest amount by which y_j*q_j dips below the chord of its neighbors.

    Zero means the product sequence is discretely concave.
    """
    q = np.asarray(q_slice, dtype=float)
    if q.shape != (grid.m,):
        raise ValueError(f"slice must have length {grid.m}")
    if grid.m < 3:
        raise ValueError("need at least 3 grid levels")
    return float(_chord_defects(grid.levels, q).max())


def max_concavity_defect(grid: YGrid, q_table: np.ndarray) -> float:
    """Worst concavity defect over all slices of a (..., m) table."""
    q = np.asarray(q_table, dtype=float)
    if q.shape[-1] != grid.m:
        raise ValueError(f"last axis must have length {grid.m}")
    if grid.m < 3:
        raise ValueError("need at least 3 grid levels")
    return float(_chord_defects(grid.levels, q).max())
