"""Distributed CVaR Q-learning over a communication graph.

Each agent holds a private value table over (state, action, confidence
level).  On every environment step, at the visited (state, action) cell and
for every grid level, the table blends three ingredients:

    Q_n <- (1 - alpha_k) * Q_n + alpha_k * innovation_n
           - beta_k * sum_{l in N(n)} (Q_n - Q_l)

The innovation is the agent's private cost plus a discounted, risk-
reweighted lookahead at the observed successor.  The consensus term pulls
an agent toward its neighbors (the sign matters: a positive sign would be
repulsive and the stacked update would no longer factor through
I - beta_k*L - alpha_k*I).  All neighbor differences are evaluated on the
pre-step snapshot, so the update is synchronous regardless of the order in
which agents are processed.

The reweighting factor xi in the lookahead ranges over ratios of grid
levels capped by the empirical bound xi_bar = 1/P_hat(s'|s, a), which keeps
every table lookup exactly on the grid -- no interpolation on this path.
Agent tables are stored stacked as one (N, S, A, m) array; `AgentState`
views are available at the API boundary.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .game import MarkovGame, TrajectoryStep, uniform_trajectory
from .graph import GraphTopology, WeightSchedule, laplacian, validate_schedule
from .oracle import AugmentedQ
from .risk import YGrid, max_concavity_defect

_XI_RULES = ("maximize", "fixed-one")


@dataclass
class TransitionEstimator:
    """Empirical visit/transition counts and the reweighting cap xi_bar.

    xi_bar(s'|s, a) starts at 1 and becomes 1/P_hat(s'|s, a) once the
    transition has been observed, so xi_bar * P_hat <= 1 always and unseen
    transitions keep the initial guess.
    """

    visits: np.ndarray
    transitions: np.ndarray
    xi_bar: np.ndarray

    @classmethod
    def zeros(cls, n_states: int, n_actions: int) -> "TransitionEstimator":
        return cls(
            visits=np.zeros((n_states, n_actions), dtype=np.int64),
            transitions=np.zeros((n_states, n_actions, n_states), dtype=np.int64),
            xi_bar=np.ones((n_states, n_actions, n_states)),
        )

    def update_xi_bound(self, s: int, a: int, s_next: int) -> None:
        """Record one observed transition and refresh the visited row's bound."""
        self.visits[s, a] += 1
        self.transitions[s, a, s_next] += 1
        p_hat = self.transitions[s, a] / self.visits[s, a]
        seen = p_hat > 0
        self.xi_bar[s, a, seen] = 1.0 / p_hat[seen]

    def p_hat(self, s: int, a: int) -> np.ndarray:
        if self.visits[s, a] == 0:
            return np.zeros(self.transitions.shape[2])
        return self.transitions[s, a] / self.visits[s, a]


def _max_level_indices(levels: np.ndarray, xi_cap: float) -> np.ndarray:
    """For each grid index j, the largest i with y_i <= y_j * xi_cap."""
    caps = levels * xi_cap
    imax = np.searchsorted(levels, caps * (1.0 + 1e-12), side="right") - 1
    # xi = 1 (i = j) is always admissible since xi_bar >= 1
    return np.maximum(imax, np.arange(levels.size))


def admissible_xis(est: TransitionEstimator, s: int, a: int, s_next: int,
                   j: int, grid: YGrid) -> np.ndarray:
    """Admissible reweightings {y_i / y_j : y_i <= y_j * xi_bar(s_next|s, a)}.

    Nonempty by construction: xi = 1 (i = j) always qualifies.
    """
    imax = int(_max_level_indices(grid.levels, float(est.xi_bar[s, a, s_next]))[j])
    return grid.levels[: imax + 1] / grid.levels[j]


def innovation(q: AugmentedQ, cost: float, s_next: int, j: int,
               est: TransitionEstimator, s: int, a: int, gamma: float,
               xi_rule: str = "maximize") -> float:
    """Single-agent innovation at one grid level.

    cost + gamma * min_a' max_xi xi * Q(s_next, a', y_j * xi) with xi from
    the admissible set; every product y_j * xi is itself a grid level, so
    lookups are by index.  With xi_rule="fixed-one" the reweighting is
    pinned to 1 (risk-neutral lookahead, for ablations).
    """
    if xi_rule not in _XI_RULES:
        raise ValueError(f"xi_rule must be one of {_XI_RULES}")
    if xi_rule == "fixed-one":
        lookahead = float(q.values[s_next, :, j].min())
    else:
        levels = q.grid.levels
        imax = int(_max_level_indices(levels, float(est.xi_bar[s, a, s_next]))[j])
        weights = levels[: imax + 1] / levels[j]
        candidates = weights[None, :] * q.values[s_next, :, : imax + 1]
        lookahead = float(candidates.max(axis=1).min())
    return float(cost) + gamma * lookahead


def _innovations(qs: np.ndarray, step: TrajectoryStep, est: TransitionEstimator,
                 levels: np.ndarray, gamma: float, xi_rule: str) -> np.ndarray:
    """Vectorized innovations for all agents and levels, shape (N, m)."""
    successor = qs[:, step.s_next, :, :]  # (N, A, m)
    if xi_rule == "fixed-one":
        lookahead = successor
    else:
        g = levels * successor
        running_max = np.maximum.accumulate(g, axis=-1)
        imax = _max_level_indices(levels, float(est.xi_bar[step.s, step.a, step.s_next]))
        lookahead = running_max[:, :, imax] / levels
    return step.local_costs[:, None] + gamma * lookahead.min(axis=1)


def _project_concave(levels: np.ndarray, q_row: np.ndarray) -> np.ndarray:
    """Lift y*q onto its least concave majorant over the grid points."""
    g = levels * q_row
    hull_x = [levels[0]]
    hull_y = [g[0]]
    for x, yv in zip(levels[1:], g[1:]):
        while len(hull_x) >= 2:
            cross = (hull_x[-1] - hull_x[-2]) * (yv - hull_y[-2]) - (
                x - hull_x[-2]
            ) * (hull_y[-1] - hull_y[-2])
            if cross >= 0:
                hull_x.pop()
                hull_y.pop()
            else:
                break
        hull_x.append(x)
        hull_y.append(yv)
    return np.interp(levels, hull_x, hull_y) / levels


@dataclass(frozen=True)
class LearnerConfig:
    """Algorithm parameters shared by every agent in a run."""

    schedule: WeightSchedule
    grid: YGrid
    total_steps: int
    seed: int
    concavity_projection: bool = False
    xi_rule: str = "maximize"

    def __post_init__(self):
        if self.total_steps < 0:
            raise ValueError("total_steps must be >= 0")
        if self.xi_rule not in _XI_RULES:
            raise ValueError(f"xi_rule must be one of {_XI_RULES}")


def qd_step(qs: np.ndarray, topology: GraphTopology, step: TrajectoryStep,
            k: int, cfg: LearnerConfig, est: TransitionEstimator,
            gamma: float, lap: np.ndarray | None = None) -> np.ndarray:
    """One synchronous consensus + innovation update of the stacked tables.

    Only the visited (s, a) cell changes, at every grid level; all consensus
    differences read the step-k snapshot.  Returns a new array.
    """
    if lap is None:
        lap = laplacian(topology)
    levels = cfg.grid.levels
    alpha = float(cfg.schedule.alpha(k))
    beta = float(cfg.schedule.beta(k))
    innov = _innovations(qs, step, est, levels, gamma, cfg.xi_rule)
    visited = qs[:, step.s, step.a, :]  # (N, m)
    updated = (1.0 - alpha) * visited + alpha * innov - beta * (lap @ visited)
    if cfg.concavity_projection:
        updated = np.stack([_project_concave(levels, row) for row in updated])
    out = qs.copy()
    out[:, step.s, step.a, :] = updated
    return out


def consensus_spread(qs: np.ndarray) -> float:
    """max_n ||Q_n - Qbar||_inf where Qbar is the elementwise agent average."""
    if qs.shape[0] < 2:
        raise ValueError("consensus spread needs at least 2 agents")
    return float(np.abs(qs - qs.mean(axis=0)).max())


@dataclass(frozen=True)
class AgentState:
    """One agent's identity and its local copy of the value table."""

    agent_id: int
    q: AugmentedQ


@dataclass(frozen=True)
class Checkpoint:
    k: int
    spread: float
    max_concavity_defect: float


@dataclass
class RunHistory:
    """Everything a run produced: checkpoints, snapshots, and final tables."""

    grid: YGrid
    checkpoints: list
    snapshots: list  # (k, stacked copy) pairs
    q_initial: np.ndarray
    q_final: np.ndarray
    estimator: TransitionEstimator
    schedule_report: object
    config: LearnerConfig

    @property
    def initial_spread(self) -> float:
        return self.checkpoints[0].spread

    @property
    def final_spread(self) -> float:
        return self.checkpoints[-1].spread

    def ks(self) -> np.ndarray:
        return np.array([c.k for c in self.checkpoints], dtype=np.int64)

    def spreads(self) -> np.ndarray:
        return np.array([c.spread for c in self.checkpoints])

    def defects(self) -> np.ndarray:
        return np.array([c.max_concavity_defect for c in self.checkpoints])

    def mean_final_q(self) -> AugmentedQ:
        return AugmentedQ(self.q_final.mean(axis=0), self.grid)

    def final_agents(self) -> list:
        return [
            AgentState(n, AugmentedQ(self.q_final[n].copy(), self.grid))
            for n in range(self.q_final.shape[0])
        ]


def windowed_spread_means(history: RunHistory, start: int = 5000,
                          width: int = 10000) -> np.ndarray:
    """Mean checkpoint spread over consecutive windows [start + i*width, ...).

    Only full windows inside the run are reported; consensus shows up as a
    nonincreasing sequence of these means.
    """
    ks = history.ks()
    spreads = history.spreads()
    means = []
    lo = start
    while lo + width <= ks[-1] + 1:
        mask = (ks >= lo) & (ks < lo + width)
        if not mask.any():
            break
        means.append(float(spreads[mask].mean()))
        lo += width
    return np.array(means)


def run(game: MarkovGame, topology: GraphTopology, cfg: LearnerConfig,
        checkpoint_every: int = 100, snapshot_every: int | None = None,
        strict: bool = False, episode_cap: int | None = None) -> RunHistory:
    """Execute the full learning loop along one shared trajectory.

    Every step: sample a uniform action, sample the transition, update the
    empirical xi bound, then apply `qd_step` at every grid level.  Agent n
    starts from the constant table n/N (distinct per agent, concave product
    trivially).  Deterministic given cfg.seed.

    Schedule validation failures warn by default and raise only in strict
    mode, since useful settings can fail the sufficient condition while
    passing the direct spectral check.
    """
    n = topology.n_agents
    if game.n_agents != n:
        raise ValueError("game and topology disagree on the number of agents")
    report = validate_schedule(topology, cfg.schedule)
    if not report.all_ok:
        failed = "; ".join(line for line in report.lines() if line.startswith("FAIL"))
        if strict:
            raise RuntimeError(f"schedule validation failed: {failed}")
        warnings.warn(f"schedule validation failed: {failed}", stacklevel=2)

    m = cfg.grid.m
    rng = np.random.default_rng(cfg.seed)
    qs = np.tile(
        (np.arange(n) / n)[:, None, None, None],
        (1, game.n_states, game.n_actions, m),
    )
    est = TransitionEstimator.zeros(game.n_states, game.n_actions)
    lap = laplacian(topology)
    bound = 10.0 * (game.c_max + 1.0) / (1.0 - game.gamma)

    def checkpoint(k: int) -> Checkpoint:
        return Checkpoint(k, consensus_spread(qs), max_concavity_defect(cfg.grid, qs))

    checkpoints = [checkpoint(0)]
    snapshots = [(0, qs.copy())]
    for step in uniform_trajectory(game, cfg.total_steps, rng, episode_cap=episode_cap):
        est.update_xi_bound(step.s, step.a, step.s_next)
        qs = qd_step(qs, topology, step, step.k, cfg, est, game.gamma, lap=lap)
        if np.abs(qs[:, step.s, step.a, :]).max() > bound:
            raise RuntimeError(
                f"table diverged at step {step.k}: exceeded pathwise bound {bound:g}"
            )
        done = step.k + 1
        if done % checkpoint_every == 0 or done == cfg.total_steps:
            checkpoints.append(checkpoint(done))
        if snapshot_every is not None and done % snapshot_every == 0 and done != cfg.total_steps:
            snapshots.append((done, qs.copy()))
    if cfg.total_steps > 0:
        snapshots.append((cfg.total_steps, qs.copy()))
    return RunHistory(
        grid=cfg.grid,
        checkpoints=checkpoints,
        snapshots=snapshots,
        q_initial=snapshots[0][1],
        q_final=qs.copy(),
        estimator=est,
        schedule_report=report,
        config=cfg,
    )
