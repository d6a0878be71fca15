"""Known-model dynamic programming for the risk-augmented value table.

The operator computed here maps a table Q(s, a, y) -- with y on a grid of
CVaR confidence levels -- to

    (T Q)(s, a, y) = cbar(s, a)
        + gamma * min_a' max_xi sum_s' xi(s') P(s'|s, a) Q(s', a', y*xi(s'))

where cbar is the agent-average cost and xi ranges over densities bounded
by 1/y that average to one under P(.|s, a).  Substituting u(s') = y*xi(s')
turns the inner problem into a budget allocation,

    maximize (1/y) * sum_s' P(s') g_s'(u(s'))
    subject to sum_s' P(s') u(s') = y,  u(s') in [0, y_m],

with g_s' the piecewise-linear product interpolant of the successor slice
(see `risk`).  A separable piecewise-linear objective under one linear
equality attains its maximum at a point with at most one coordinate off the
knot set, so enumerating knot assignments with one budget-pinned coordinate
solves the problem exactly -- the "enum" method, the desk-scale default.
The "lp" method solves the hypograph linear program instead, exact whenever
every g_s' is concave; the two routes are cross-checked in the test suite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import MarkovGame
from .risk import YGrid

_ENUM_CANDIDATE_LIMIT = 2_000_000


@dataclass
class AugmentedQ:
    """Value table over (state, action, confidence-level index) plus its grid."""

    values: np.ndarray
    grid: YGrid

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 3:
            raise ValueError("values must have shape (S, A, m)")
        if values.shape[2] != self.grid.m:
            raise ValueError(f"last axis must match the grid size {self.grid.m}")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        self.values = values

    @classmethod
    def zeros(cls, n_states: int, n_actions: int, grid: YGrid) -> "AugmentedQ":
        return cls(np.zeros((n_states, n_actions, grid.m)), grid)

    @classmethod
    def constant(cls, n_states: int, n_actions: int, grid: YGrid, value: float) -> "AugmentedQ":
        return cls(np.full((n_states, n_actions, grid.m), float(value)), grid)

    def copy(self) -> "AugmentedQ":
        return AugmentedQ(self.values.copy(), self.grid)

    def sup_distance(self, other: "AugmentedQ") -> float:
        if self.values.shape != other.values.shape:
            raise ValueError("shape mismatch")
        return float(np.abs(self.values - other.values).max())


def _dual_values_enum(p: np.ndarray, gvals: np.ndarray, knots: np.ndarray,
                      budgets: np.ndarray) -> np.ndarray:
    """Exact budget-allocation maxima, one per budget level.

    p: positive successor probabilities (r,), summing to 1.
    gvals: interpolant ordinates at `knots` for each successor, (r, m+1).
    Returns max of sum_i p_i g_i(u_i) s.t. sum_i p_i u_i = budget,
    u in [0, knots[-1]], for every entry of `budgets` (objective not yet
    divided by the budget).
    """
    r = p.size
    cap = knots[-1]
    if r == 1:
        # mass constraint pins u = budget / p, and p = 1 for a probability row
        return p[0] * np.interp(budgets / p[0], knots, gvals[0])
    k = knots.size
    if k ** (r - 1) > _ENUM_CANDIDATE_LIMIT:
        raise ValueError(
            "enumeration too large for this support/grid; use method='lp'"
        )
    combo_idx = np.indices((k,) * (r - 1)).reshape(r - 1, -1).T  # (C, r-1)
    best = np.full(budgets.size, -np.inf)
    for pinned in range(r):
        others = [i for i in range(r) if i != pinned]
        base = np.zeros(combo_idx.shape[0])
        used = np.zeros(combo_idx.shape[0])
        for col, i in enumerate(others):
            base += p[i] * gvals[i][combo_idx[:, col]]
            used += p[i] * knots[combo_idx[:, col]]
        u_pin = (budgets[:, None] - used[None, :]) / p[pinned]
        feasible = (u_pin >= -1e-12) & (u_pin <= cap + 1e-12)
        g_pin = np.interp(np.clip(u_pin, 0.0, cap).ravel(), knots, gvals[pinned])
        obj = base[None, :] + p[pinned] * g_pin.reshape(u_pin.shape)
        obj[~feasible] = -np.inf
        best = np.maximum(best, obj.max(axis=1))
    return best


def _dual_values_lp(p: np.ndarray, gvals: np.ndarray, knots: np.ndarray,
                    budgets: np.ndarray) -> np.ndarray:
    """Budget-allocation maxima via the hypograph LP (assumes concave g)."""
    from scipy.optimize import linprog

    r = p.size
    cap = knots[-1]
    nseg = knots.size - 1
    slopes = np.diff(gvals, axis=1) / np.diff(knots)[None, :]
    intercepts = gvals[:, :-1] - slopes * knots[:-1][None, :]
    # variables: u_0..u_{r-1}, t_0..t_{r-1}; maximize sum p_i t_i
    a_ub = np.zeros((r * nseg, 2 * r))
    b_ub = np.zeros(r * nseg)
    for i in range(r):
        rows = slice(i * nseg, (i + 1) * nseg)
        a_ub[rows, i] = -slopes[i]
        a_ub[rows, r + i] = 1.0
        b_ub[rows] = intercepts[i]
    a_eq = np.concatenate([p, np.zeros(r)])[None, :]
    c = np.concatenate([np.zeros(r), -p])
    bounds = [(0.0, cap)] * r + [(None, None)] * r
    out = np.empty(budgets.size)
    for idx, y in enumerate(budgets):
        res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[y],
                      bounds=bounds, method="highs")
        if not res.success:
            raise RuntimeError(f"inner LP failed at budget {y}: {res.message}")
        out[idx] = -res.fun
    return out


_DUAL_METHODS = {"enum": _dual_values_enum, "lp": _dual_values_lp}


def _successor_support(game: MarkovGame, s: int, a: int) -> tuple:
    p_row = game.transitions[s, a]
    support = np.flatnonzero(p_row > 0.0)
    if support.size == 0:
        raise ValueError(f"degenerate transition row at (s={s}, a={a})")
    return support, p_row[support]


def inner_max(game: MarkovGame, q: AugmentedQ, s: int, a: int, a_prime: int,
              j: int, method: str = "enum") -> float:
    """Optimal reweighted successor value for one (s, a, a', y_j) cell."""
    grid = q.grid
    support, p = _successor_support(game, s, a)
    gvals = grid.g_knots(q.values[support, a_prime, :])
    budget = grid.levels[j : j + 1]
    value = _DUAL_METHODS[method](p, gvals, grid.knots, budget)
    return float(value[0] / grid.levels[j])


def bellman_apply(game: MarkovGame, q: AugmentedQ, method: str = "enum") -> AugmentedQ:
    """One sweep of the risk-augmented Bellman operator; input is not mutated."""
    if method not in _DUAL_METHODS:
        raise ValueError(f"unknown method {method!r}")
    if q.values.shape[:2] != (game.n_states, game.n_actions):
        raise ValueError("table dimensions do not match the game")
    grid = q.grid
    levels = grid.levels
    out = np.empty_like(q.values)
    dual = _DUAL_METHODS[method]
    for s in range(game.n_states):
        for a in range(game.n_actions):
            support, p = _successor_support(game, s, a)
            lookahead = np.empty((game.n_actions, grid.m))
            for a_prime in range(game.n_actions):
                gvals = grid.g_knots(q.values[support, a_prime, :])
                lookahead[a_prime] = dual(p, gvals, grid.knots, levels) / levels
            out[s, a] = game.mean_costs[s, a] + game.gamma * lookahead.min(axis=0)
    return AugmentedQ(out, grid)


@dataclass
class ValueIterationResult:
    """Fixed-point iteration outcome; `converged` is False when max_iters hit."""

    q: AugmentedQ
    iterations: int
    residual: float
    residuals: list
    converged: bool


def value_iterate(game: MarkovGame, grid: YGrid, tol: float = 1e-8,
                  max_iters: int = 10000, method: str = "enum",
                  q0: AugmentedQ | None = None) -> ValueIterationResult:
    """Iterate the operator from Q = 0 until the sup-norm residual <= tol.

    Contraction makes the residual sequence decay at least like
    gamma**k * residual_0, so hitting max_iters with a large residual
    signals a bug rather than slow convergence; the result reports it via
    `converged` instead of raising.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    q = AugmentedQ.zeros(game.n_states, game.n_actions, grid) if q0 is None else q0.copy()
    residuals: list = []
    residual = np.inf
    for iteration in range(1, max_iters + 1):
        q_next = bellman_apply(game, q, method=method)
        residual = q_next.sup_distance(q)
        residuals.append(residual)
        q = q_next
        if residual <= tol:
            return ValueIterationResult(q, iteration, residual, residuals, True)
    return ValueIterationResult(q, max_iters, residual, residuals, False)


@dataclass
class RiskNeutralResult:
    q: np.ndarray
    iterations: int
    residual: float
    converged: bool


def risk_neutral_vi(game: MarkovGame, tol: float = 1e-8,
                    max_iters: int = 10000) -> RiskNeutralResult:
    """Classical expected-cost Q-value iteration (independent of the CVaR path).

    Q <- cbar + gamma * P @ min_a' Q; used to cross-check the y = 1 slice of
    the augmented fixed point, where CVaR collapses to the expectation.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    q = np.zeros((game.n_states, game.n_actions))
    residual = np.inf
    for iteration in range(1, max_iters + 1):
        v = q.min(axis=1)
        q_next = game.mean_costs + game.gamma * np.einsum("sap,p->sa", game.transitions, v)
        residual = float(np.abs(q_next - q).max())
        q = q_next
        if residual <= tol:
            return RiskNeutralResult(q, iteration, residual, True)
    return RiskNeutralResult(q, max_iters, residual, False)


def greedy_policy(q: AugmentedQ, s: int, j: int) -> int:
    """Cost-minimizing action at (s, y_j); ties break to the smallest index."""
    return int(np.argmin(q.values[s, :, j]))
