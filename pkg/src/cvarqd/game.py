"""Finite Markov game environment.

Global state and action, per-agent deterministic cost tables, seeded
transition sampling, and trajectory generation under a uniform-random
behavior policy.  Costs are sampled once at construction and frozen, so
repeated queries at the same (agent, state, action) are bit-identical.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

PROB_TOL = 1e-12


@dataclass(frozen=True)
class MarkovGame:
    """Finite game: transitions P[s, a, s'], costs c[n, s, a], discount gamma.

    Transition rows must sum to one within 1e-12 and costs must lie in
    [-c_max, c_max].  Arrays are copied and made read-only; the game is safe
    to share across workers.
    """

    transitions: np.ndarray
    costs: np.ndarray
    gamma: float
    c_max: float = 2.0
    terminal_states: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        trans = np.array(self.transitions, dtype=float)
        costs = np.array(self.costs, dtype=float)
        if trans.ndim != 3 or trans.shape[0] != trans.shape[2]:
            raise ValueError("transitions must have shape (S, A, S)")
        if costs.ndim != 3 or costs.shape[1:] != trans.shape[:2]:
            raise ValueError("costs must have shape (N, S, A)")
        if np.any(trans < 0):
            raise ValueError("transition probabilities must be nonnegative")
        row_sums = trans.sum(axis=2)
        if np.any(np.abs(row_sums - 1.0) > PROB_TOL):
            raise ValueError("every transition row must sum to 1 within 1e-12")
        if self.c_max <= 0:
            raise ValueError("c_max must be positive")
        if np.any(np.abs(costs) > self.c_max + 1e-12):
            raise ValueError("costs must lie in [-c_max, c_max]")
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError("gamma must be in [0, 1)")
        terminals = frozenset(int(s) for s in self.terminal_states)
        if any(not (0 <= s < trans.shape[0]) for s in terminals):
            raise ValueError("terminal state out of range")
        trans.setflags(write=False)
        costs.setflags(write=False)
        object.__setattr__(self, "transitions", trans)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "c_max", float(self.c_max))
        object.__setattr__(self, "terminal_states", terminals)

    @property
    def n_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transitions.shape[1]

    @property
    def n_agents(self) -> int:
        return self.costs.shape[0]

    @cached_property
    def mean_costs(self) -> np.ndarray:
        """Agent-average cost table, shape (S, A)."""
        out = self.costs.mean(axis=0)
        out.setflags(write=False)
        return out


def average_cost(game: MarkovGame, s: int, a: int) -> float:
    """Mean of the per-agent costs at (s, a)."""
    return float(game.mean_costs[s, a])


def sample_transition(game: MarkovGame, s: int, a: int, rng: np.random.Generator) -> int:
    """Draw the next state by inverse CDF; deterministic given the generator state."""
    cdf = np.cumsum(game.transitions[s, a])
    u = rng.random()
    nxt = int(np.searchsorted(cdf, u, side="right"))
    return min(nxt, game.n_states - 1)


@dataclass(frozen=True)
class RandomGameSpec:
    """Sizes and sampling ranges for ``random_game``.

    Each (s, a) pair gets its own cost mean, drawn uniformly from
    [cost_mean_low, cost_mean_high]; per-agent costs are then drawn once
    from mean +- cost_half_width and clipped to [-c_max, c_max].
    """

    n_states: int = 2
    n_actions: int = 2
    n_agents: int = 8
    gamma: float = 0.7
    cost_mean_low: float = -1.0
    cost_mean_high: float = 1.0
    cost_half_width: float = 0.5
    c_max: float = 2.0

    def __post_init__(self):
        if min(self.n_states, self.n_actions, self.n_agents) < 1:
            raise ValueError("sizes must be >= 1")


def random_game(spec: RandomGameSpec, seed) -> MarkovGame:
    """Sample a game reproducibly from a seed (or an existing Generator).

    For two states each transition row is (p, 1-p) with p ~ U(0, 1), so a
    2x2 game has exactly four free probabilities fixing the other four.
    Larger state spaces draw rows uniformly from the simplex.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    s_n, a_n, n = spec.n_states, spec.n_actions, spec.n_agents
    if s_n == 1:
        trans = np.ones((1, a_n, 1))
    elif s_n == 2:
        p = rng.uniform(size=(2, a_n))
        trans = np.stack([p, 1.0 - p], axis=-1)
    else:
        trans = rng.dirichlet(np.ones(s_n), size=(s_n, a_n))
    means = rng.uniform(spec.cost_mean_low, spec.cost_mean_high, size=(s_n, a_n))
    costs = means[None, :, :] + rng.uniform(
        -spec.cost_half_width, spec.cost_half_width, size=(n, s_n, a_n)
    )
    costs = np.clip(costs, -spec.c_max, spec.c_max)
    return MarkovGame(trans, costs, spec.gamma, c_max=spec.c_max)


def discounted_return(costs, gamma: float) -> float:
    """Sum of gamma**t * costs[t] over a finite cost sequence."""
    c = np.asarray(costs, dtype=float)
    if c.size == 0:
        return 0.0
    return float(np.dot(gamma ** np.arange(c.size), c))


@dataclass(frozen=True)
class TrajectoryStep:
    """One observed transition: all agents see (s, a, s_next), costs are local."""

    k: int
    s: int
    a: int
    local_costs: np.ndarray
    s_next: int


def uniform_trajectory(game: MarkovGame, n_steps: int, rng: np.random.Generator,
                       s0: int | None = None, episode_cap: int | None = None):
    """Yield n_steps of uniform-random play as TrajectorySteps.

    Actions are sampled uniformly (persistent excitation of every pair).
    The task is continuing by default; if the game declares terminal states
    or an episode cap is given, the state resets to a fresh uniform draw at
    episode boundaries while the step index k keeps counting.
    """
    s = int(rng.integers(game.n_states)) if s0 is None else int(s0)
    in_episode = 0
    for k in range(n_steps):
        a = int(rng.integers(game.n_actions))
        s_next = sample_transition(game, s, a, rng)
        yield TrajectoryStep(k, s, a, game.costs[:, s, a].copy(), s_next)
        in_episode += 1
        if s_next in game.terminal_states or (episode_cap is not None and in_episode >= episode_cap):
            s = int(rng.integers(game.n_states))
            in_episode = 0
        else:
            s = s_next


def game_to_dict(game: MarkovGame) -> dict:
    """Plain-JSON representation so runs can share one environment exactly."""
    return {
        "n_states": game.n_states,
        "n_actions": game.n_actions,
        "n_agents": game.n_agents,
        "transitions": game.transitions.tolist(),
        "costs": game.costs.tolist(),
        "gamma": game.gamma,
        "c_max": game.c_max,
        "terminal_states": sorted(game.terminal_states),
    }


def game_from_dict(doc: dict) -> MarkovGame:
    game = MarkovGame(
        np.asarray(doc["transitions"], dtype=float),
        np.asarray(doc["costs"], dtype=float),
        float(doc["gamma"]),
        c_max=float(doc.get("c_max", 2.0)),
        terminal_states=frozenset(doc.get("terminal_states", ())),
    )
    declared = (doc.get("n_states"), doc.get("n_actions"), doc.get("n_agents"))
    actual = (game.n_states, game.n_actions, game.n_agents)
    for want, got in zip(declared, actual):
        if want is not None and int(want) != got:
            raise ValueError(f"declared sizes {declared} do not match tables {actual}")
    return game


def save_game(game: MarkovGame, path) -> None:
    Path(path).write_text(json.dumps(game_to_dict(game), indent=2, sort_keys=True))


def load_game(path) -> MarkovGame:
    return game_from_dict(json.loads(Path(path).read_text()))
