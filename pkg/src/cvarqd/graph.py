"""Inter-agent communication graphs, Laplacians, and step-size schedules.

The learner couples agents through an undirected, simple, connected graph.
Consensus analysis rests on two ingredients computed here: the graph
Laplacian L (degree matrix minus adjacency) and the decaying weight pair

    alpha_k = a / (k + 1)**tau1        (innovation weight)
    beta_k  = b / (k + 1)**tau2        (consensus weight)

Schedule feasibility is never enforced silently.  ``validate_schedule``
reports each condition separately and leaves the abort decision to the
caller: the shortcut a + N*b <= 1 is sufficient but not necessary for
I - beta_k*L - alpha_k*I to stay positive semidefinite, and settings that
fail the shortcut can still pass the direct spectral check.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

PSD_TOL = 1e-10


@dataclass(frozen=True)
class GraphTopology:
    """Undirected simple connected graph on agent indices 0..n_agents-1.

    Immutable after construction; disconnected graphs, self-loops, and
    out-of-range endpoints are rejected immediately.
    """

    n_agents: int
    edges: frozenset

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValueError("n_agents must be positive")
        normalized = set()
        for edge in self.edges:
            i, j = edge
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (0 <= i < self.n_agents and 0 <= j < self.n_agents):
                raise ValueError(f"edge {edge} out of range for {self.n_agents} agents")
            normalized.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(normalized))
        if not self._is_connected():
            raise ValueError("graph is not connected")

    def _is_connected(self) -> bool:
        if self.n_agents == 1:
            return True
        seen = {0}
        frontier = [0]
        while frontier:
            nxt = []
            for u in frontier:
                for v in self.neighbor_lists[u]:
                    if v not in seen:
                        seen.add(v)
                        nxt.append(v)
            frontier = nxt
        return len(seen) == self.n_agents

    @cached_property
    def neighbor_lists(self) -> tuple:
        lists = [[] for _ in range(self.n_agents)]
        for i, j in self.edges:
            lists[i].append(j)
            lists[j].append(i)
        return tuple(tuple(sorted(l)) for l in lists)

    def neighbors(self, n: int) -> tuple:
        return self.neighbor_lists[n]

    def degree(self, n: int) -> int:
        return len(self.neighbor_lists[n])


def ring_topology(n_agents: int, k_nearest: int) -> GraphTopology:
    """Circulant graph: each node adjacent to k_nearest/2 neighbors per side.

    k_nearest must be even and < n_agents; n_agents >= 3.  With
    k_nearest = n_agents - 1 (odd n_agents) this yields the complete graph.
    """
    if n_agents < 3:
        raise ValueError("ring topology needs at least 3 agents")
    if k_nearest % 2 != 0 or k_nearest < 2:
        raise ValueError("k_nearest must be a positive even count")
    if k_nearest >= n_agents:
        raise ValueError("k_nearest must be smaller than n_agents")
    edges = set()
    for i in range(n_agents):
        for d in range(1, k_nearest // 2 + 1):
            j = (i + d) % n_agents
            edges.add((min(i, j), max(i, j)))
    return GraphTopology(n_agents, frozenset(edges))


def laplacian(g: GraphTopology) -> np.ndarray:
    """Graph Laplacian: L_ii = degree(i), L_ij = -1 on edges, else 0."""
    lap = np.zeros((g.n_agents, g.n_agents))
    for i, j in g.edges:
        lap[i, j] = -1.0
        lap[j, i] = -1.0
        lap[i, i] += 1.0
        lap[j, j] += 1.0
    return lap


@dataclass(frozen=True)
class WeightSchedule:
    """Decaying weight pair alpha_k = a/(k+1)^tau1, beta_k = b/(k+1)^tau2.

    Only positivity of a and b is enforced here.  The exponent ranges
    tau1 in (1/2, 1] and tau2 in (0, tau1 - 1/2) and the magnitude condition
    a + N*b <= 1 are advisory; see ``validate_schedule``.
    """

    a: float
    b: float
    tau1: float
    tau2: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("a and b must be positive")

    def alpha(self, k):
        """Innovation weight at step k (scalar or array)."""
        return self.a / (np.asarray(k, dtype=float) + 1.0) ** self.tau1

    def beta(self, k):
        """Consensus weight at step k (scalar or array)."""
        return self.b / (np.asarray(k, dtype=float) + 1.0) ** self.tau2

    @property
    def tau1_ok(self) -> bool:
        return 0.5 < self.tau1 <= 1.0

    @property
    def tau2_ok(self) -> bool:
        return 0.0 < self.tau2 < self.tau1 - 0.5


@dataclass(frozen=True)
class ScheduleReport:
    """Per-condition pass/fail summary from ``validate_schedule``."""

    n_agents: int
    weight_sum: float
    weight_sum_ok: bool
    tau1_ok: bool
    tau2_ok: bool
    psd_min_eigenvalue: float
    psd_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.weight_sum_ok and self.tau1_ok and self.tau2_ok and self.psd_ok

    def lines(self) -> list:
        def mark(ok):
            return "PASS" if ok else "FAIL"

        return [
            f"{mark(self.weight_sum_ok)} a + N*b = {self.weight_sum:.6g} <= 1",
            f"{mark(self.tau1_ok)} tau1 in (1/2, 1]",
            f"{mark(self.tau2_ok)} tau2 in (0, tau1 - 1/2)",
            f"{mark(self.psd_ok)} min eig(I - beta_0*L - alpha_0*I) = "
            f"{self.psd_min_eigenvalue:.6g} >= -{PSD_TOL:g}",
        ]

    def to_dict(self) -> dict:
        return {
            "n_agents": self.n_agents,
            "weight_sum": self.weight_sum,
            "weight_sum_ok": self.weight_sum_ok,
            "tau1_ok": self.tau1_ok,
            "tau2_ok": self.tau2_ok,
            "psd_min_eigenvalue": self.psd_min_eigenvalue,
            "psd_ok": self.psd_ok,
            "all_ok": self.all_ok,
        }


def validate_schedule(g: GraphTopology, w: WeightSchedule) -> ScheduleReport:
    """Check schedule feasibility conditions against a topology.

    Reports, never raises: (i) the sufficient magnitude condition
    a + N*b <= 1, (ii) the exponent ranges, and (iii) a direct eigenvalue
    check of I - beta_0*L - alpha_0*I.  Since alpha_k and beta_k are
    nonincreasing, k = 0 is the worst case for (iii).
    """
    n = g.n_agents
    weight_sum = w.a + n * w.b
    lap = laplacian(g)
    step0 = np.eye(n) - float(w.beta(0)) * lap - float(w.alpha(0)) * np.eye(n)
    min_eig = float(np.linalg.eigvalsh(step0)[0])
    return ScheduleReport(
        n_agents=n,
        weight_sum=weight_sum,
        weight_sum_ok=weight_sum <= 1.0,
        tau1_ok=w.tau1_ok,
        tau2_ok=w.tau2_ok,
        psd_min_eigenvalue=min_eig,
        psd_ok=min_eig >= -PSD_TOL,
    )
