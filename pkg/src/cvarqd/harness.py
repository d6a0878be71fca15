"""Experiment presets, config file I/O, artifact emission, oracle comparison.

An experiment is described by a JSON document with nested sections for the
game, topology, grid, and schedule (exact keys documented in the README and
pinned by a round-trip test).  ``run_experiment`` builds everything, runs
the oracle and/or the learner, and emits:

    consensus.csv   one row per checkpoint: k, spread, concavity_defect
    q_profile.csv   final per-agent tables: agent, s, a, y, q
    q_star.csv      oracle fixed point (when enabled): s, a, y, q
    summary.json    headline numbers and validation results
    *.svg           optional line charts rendered from the CSVs

Floats are written with repr (shortest round-trip form), so identical runs
emit byte-identical files.
"""
from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import svg
from .game import MarkovGame, RandomGameSpec, game_from_dict, random_game
from .graph import GraphTopology, WeightSchedule, ring_topology, validate_schedule
from .learner import LearnerConfig, RunHistory, run, windowed_spread_means
from .oracle import AugmentedQ, value_iterate
from .risk import YGrid, max_concavity_defect

DEFAULT_SEED = 7
PRESET_NAMES = ("fig1", "fig2", "paper-fig", "oracle-check")

# The profile figure is read on confidence levels >= 0.2: the scalar
# per-sample maximization only admits integer reweighting ratios at the
# smallest grid levels, which systematically depresses those cells, so the
# clean monotone shape lives on [0.2, 1].
FIG_PROFILE_Y_MIN = 0.2

# Positive per-(s, a) cost means for profile runs: the per-sample rule picks
# the largest admissible product xi * Q, which is only a meaningful
# worst-case emphasis when tables stay positive (with negative tables the
# maximization deflates the lookahead toward zero instead).
_PROFILE_COSTS = {"cost_mean_low": 0.25, "cost_mean_high": 1.0, "cost_half_width": 0.25}


class StrictModeError(RuntimeError):
    """Raised when strict mode upgrades a validation failure to an error."""


@dataclass
class ExperimentConfig:
    """Declarative description of one experiment; serializes to flat JSON."""

    name: str
    seed: int
    game: dict
    topology: dict
    grid: dict
    schedule: dict
    total_steps: int
    xi_rule: str = "maximize"
    concavity_projection: bool = False
    run_learner: bool = True
    oracle: dict = field(default_factory=lambda: {"enabled": True, "tol": 1e-8, "max_iters": 10000})
    checkpoint_every: int = 100
    snapshot_every: int | None = None
    svg: bool = True
    strict: bool = False

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))


def build_grid(spec: dict) -> YGrid:
    if "levels" in spec:
        return YGrid(np.asarray(spec["levels"], dtype=float))
    return YGrid.uniform(int(spec["m"]))


def build_topology(spec: dict) -> GraphTopology:
    kind = spec.get("type", "ring")
    if kind == "ring":
        return ring_topology(int(spec["n_agents"]), int(spec["k_nearest"]))
    if kind == "edges":
        edges = frozenset((int(i), int(j)) for i, j in spec["edges"])
        return GraphTopology(int(spec["n_agents"]), edges)
    raise ValueError(f"unknown topology type {kind!r}")


def build_schedule(spec: dict) -> WeightSchedule:
    return WeightSchedule(
        a=float(spec["a"]), b=float(spec["b"]),
        tau1=float(spec["tau1"]), tau2=float(spec["tau2"]),
    )


def build_game(spec: dict) -> MarkovGame:
    kind = spec.get("type", "random")
    if kind == "random":
        sizes = {
            k: spec[k]
            for k in (
                "n_states", "n_actions", "n_agents", "gamma",
                "cost_mean_low", "cost_mean_high", "cost_half_width", "c_max",
            )
            if k in spec
        }
        return random_game(RandomGameSpec(**sizes), int(spec["seed"]))
    if kind == "explicit":
        return game_from_dict(spec)
    raise ValueError(f"unknown game type {kind!r}")


def preset(name: str, seed: int | None = None) -> ExperimentConfig:
    """Named experiment configurations.

    fig1/fig2 are desk-scale runs (8 agents on a 2-nearest ring, 2x2 game,
    20 grid levels, 50000 steps) with a schedule that passes every
    validation condition.  fig1 is read for its consensus trace and uses
    the default zero-centered cost means; fig2 is read for the final
    value-versus-confidence profile and uses positive cost means so the
    risk premium is visible (see _PROFILE_COSTS).  paper-fig keeps the
    printed large-scale constants verbatim (40 agents, 100 levels,
    tau1=0.2, tau2=0.3, a=0.2, b=0.1) and therefore trips the
    exponent-range and weight-sum validations -- expect warnings.
    oracle-check runs the known-model solver alone on the fig1-scale game.
    """
    if seed is None:
        seed = DEFAULT_SEED
    if name in ("fig1", "fig2", "oracle-check"):
        cfg = ExperimentConfig(
            name=name,
            seed=seed,
            game={"type": "random", "n_states": 2, "n_actions": 2,
                  "n_agents": 8, "gamma": 0.7, "seed": seed},
            topology={"type": "ring", "n_agents": 8, "k_nearest": 2},
            grid={"m": 20},
            schedule={"a": 0.2, "b": 0.05, "tau1": 0.6, "tau2": 0.05},
            total_steps=50000,
        )
        if name == "fig2":
            cfg.game.update(_PROFILE_COSTS)
        if name == "oracle-check":
            cfg.run_learner = False
            cfg.total_steps = 0
        return cfg
    if name == "paper-fig":
        return ExperimentConfig(
            name=name,
            seed=seed,
            game={"type": "random", "n_states": 2, "n_actions": 2,
                  "n_agents": 40, "gamma": 0.7, "seed": seed, **_PROFILE_COSTS},
            topology={"type": "ring", "n_agents": 40, "k_nearest": 2},
            grid={"m": 100},
            schedule={"a": 0.2, "b": 0.1, "tau1": 0.2, "tau2": 0.3},
            total_steps=50000,
        )
    raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")


def _write_csv(path: Path, header: list, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_consensus_csv(path, history: RunHistory) -> None:
    rows = (
        (c.k, repr(c.spread), repr(c.max_concavity_defect))
        for c in history.checkpoints
    )
    _write_csv(Path(path), ["k", "spread", "concavity_defect"], rows)


def read_consensus_csv(path):
    ks, spreads, defects = [], [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            ks.append(int(row["k"]))
            spreads.append(float(row["spread"]))
            defects.append(float(row["concavity_defect"]))
    return np.array(ks), np.array(spreads), np.array(defects)


def _q_rows(table: np.ndarray, levels: np.ndarray, lead=()):
    shape = table.shape[:-1]
    for idx in np.ndindex(*shape):
        for j, y in enumerate(levels):
            yield (*lead, *idx, repr(float(y)), repr(float(table[idx + (j,)])))


def write_q_profile_csv(path, history: RunHistory) -> None:
    levels = history.grid.levels
    rows = []
    for n in range(history.q_final.shape[0]):
        rows.extend(_q_rows(history.q_final[n], levels, lead=(n,)))
    _write_csv(Path(path), ["agent", "s", "a", "y", "q"], rows)


def read_q_profile_csv(path):
    """Rebuild the (N, S, A, m) stacked table and the level array."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            records.append((int(row["agent"]), int(row["s"]), int(row["a"]),
                            float(row["y"]), float(row["q"])))
    n = max(r[0] for r in records) + 1
    s_n = max(r[1] for r in records) + 1
    a_n = max(r[2] for r in records) + 1
    levels = sorted({r[3] for r in records})
    index = {y: j for j, y in enumerate(levels)}
    table = np.full((n, s_n, a_n, len(levels)), np.nan)
    for agent, s, a, y, q in records:
        table[agent, s, a, index[y]] = q
    return table, np.array(levels)


def write_q_star_csv(path, q: AugmentedQ) -> None:
    _write_csv(Path(path), ["s", "a", "y", "q"], _q_rows(q.values, q.grid.levels))


def read_q_star_csv(path):
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            records.append((int(row["s"]), int(row["a"]), float(row["y"]), float(row["q"])))
    s_n = max(r[0] for r in records) + 1
    a_n = max(r[1] for r in records) + 1
    levels = sorted({r[2] for r in records})
    index = {y: j for j, y in enumerate(levels)}
    table = np.full((s_n, a_n, len(levels)), np.nan)
    for s, a, y, q in records:
        table[s, a, index[y]] = q
    return table, np.array(levels)


@dataclass(frozen=True)
class OracleComparison:
    """Absolute distances between an agent-average table and the fixed point.

    Diagnostic only: agent tables provably agree with each other in the
    limit, but nothing here asserts how far that consensus sits from the
    known-model optimum, so no pass/fail threshold is attached.
    """

    sup: float
    mean: float
    diffs: np.ndarray


def compare_to_oracle(learner, q_star: AugmentedQ) -> OracleComparison:
    """Compare a RunHistory (agent-average final table), AugmentedQ, or array."""
    if isinstance(learner, RunHistory):
        table = learner.q_final.mean(axis=0)
    elif isinstance(learner, AugmentedQ):
        table = learner.values
    else:
        table = np.asarray(learner, dtype=float)
    if table.shape != q_star.values.shape:
        raise ValueError(
            f"dimension mismatch: {table.shape} vs {q_star.values.shape}"
        )
    diffs = np.abs(table - q_star.values)
    return OracleComparison(float(diffs.max()), float(diffs.mean()), diffs)


def monotone_violation(table: np.ndarray) -> float:
    """Largest increase along the confidence-level axis (0 when nonincreasing)."""
    diffs = np.diff(np.asarray(table, dtype=float), axis=-1)
    return float(max(0.0, diffs.max()))


def run_experiment(cfg: ExperimentConfig, out_dir) -> dict:
    """Run one experiment and emit artifacts; returns {artifact: path}.

    Raises StrictModeError (instead of warning) when cfg.strict is set and
    the schedule fails validation.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = build_grid(cfg.grid)
    game = build_game(cfg.game)
    topology = build_topology(cfg.topology)
    schedule = build_schedule(cfg.schedule)
    report = validate_schedule(topology, schedule)
    if cfg.strict and not report.all_ok:
        raise StrictModeError(
            "schedule validation failed in strict mode:\n  " + "\n  ".join(report.lines())
        )
    summary = {
        "name": cfg.name,
        "seed": cfg.seed,
        "schedule": report.to_dict(),
    }
    paths = {}

    q_star = None
    if cfg.oracle.get("enabled", True):
        vi = value_iterate(
            game, grid,
            tol=float(cfg.oracle.get("tol", 1e-8)),
            max_iters=int(cfg.oracle.get("max_iters", 10000)),
        )
        q_star = vi.q
        paths["q_star"] = out / "q_star.csv"
        write_q_star_csv(paths["q_star"], q_star)
        summary["oracle"] = {
            "iterations": vi.iterations,
            "residual": vi.residual,
            "converged": vi.converged,
            "q_star_min": float(q_star.values.min()),
            "q_star_max": float(q_star.values.max()),
            "max_concavity_defect": max_concavity_defect(grid, q_star.values),
            "monotone_violation": monotone_violation(q_star.values),
        }

    if cfg.run_learner:
        lcfg = LearnerConfig(
            schedule=schedule,
            grid=grid,
            total_steps=cfg.total_steps,
            seed=cfg.seed + 1,
            concavity_projection=cfg.concavity_projection,
            xi_rule=cfg.xi_rule,
        )
        history = run(
            game, topology, lcfg,
            checkpoint_every=cfg.checkpoint_every,
            snapshot_every=cfg.snapshot_every,
        )
        paths["consensus"] = out / "consensus.csv"
        write_consensus_csv(paths["consensus"], history)
        paths["q_profile"] = out / "q_profile.csv"
        write_q_profile_csv(paths["q_profile"], history)
        window_means = windowed_spread_means(history)
        profile_mask = grid.levels >= FIG_PROFILE_Y_MIN - 1e-12
        summary["learner"] = {
            "total_steps": cfg.total_steps,
            "initial_spread": history.initial_spread,
            "final_spread": history.final_spread,
            "spread_ratio": (
                history.final_spread / history.initial_spread
                if history.initial_spread > 0 else 0.0
            ),
            "final_max_concavity_defect": history.checkpoints[-1].max_concavity_defect,
            "monotone_violation_final": monotone_violation(history.q_final),
            "monotone_violation_profile_range": monotone_violation(
                history.q_final[..., profile_mask]
            ),
            "windowed_spread_means": window_means.tolist(),
            "windowed_spread_nonincreasing": bool(
                np.all(np.diff(window_means) <= 1e-12)
            ) if window_means.size else None,
        }
        if q_star is not None:
            comparison = compare_to_oracle(history, q_star)
            summary["comparison"] = {"sup": comparison.sup, "mean": comparison.mean}
        if cfg.svg:
            ks = history.ks()
            paths["consensus_svg"] = out / "consensus.svg"
            paths["consensus_svg"].write_text(svg.line_chart(
                [("max deviation from agent mean", ks.tolist(), history.spreads().tolist())],
                title=f"{cfg.name}: consensus spread",
                xlabel="step k", ylabel="spread", log_y=True,
            ))
            qbar = history.q_final.mean(axis=0)
            series = [
                (f"(s={s}, a={a})", grid.levels.tolist(), qbar[s, a].tolist())
                for s in range(game.n_states)
                for a in range(game.n_actions)
            ]
            paths["q_profile_svg"] = out / "q_profile.svg"
            paths["q_profile_svg"].write_text(svg.line_chart(
                series,
                title=f"{cfg.name}: agent-average value vs confidence level",
                xlabel="confidence level y", ylabel="value",
            ))

    paths["summary"] = out / "summary.json"
    paths["summary"].write_text(json.dumps(summary, indent=2, sort_keys=True))
    paths["config"] = out / "config.json"
    paths["config"].write_text(cfg.to_json())
    return {
        name: str(p) for name, p in paths.items()
        if Path(p).exists() and Path(p).stat().st_size > 0
    }
