"""Command-line front end: run experiment presets or JSON config files."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .harness import PRESET_NAMES, ExperimentConfig, StrictModeError, preset, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvarqd",
        description="Risk-aware distributed Q-learning experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run a preset or a JSON experiment config")
    runp.add_argument("target", help=f"preset name ({', '.join(PRESET_NAMES)}) or config path")
    runp.add_argument("--seed", type=int, help="override the experiment seed")
    runp.add_argument("--out", default="out", help="output directory (default: out)")
    runp.add_argument("--strict", action="store_true",
                      help="abort on schedule-validation failures")
    runp.add_argument("--steps", type=int, help="override total learner steps")
    runp.add_argument("--snapshot-every", type=int, help="snapshot cadence in steps")
    runp.add_argument("--no-svg", action="store_true", help="skip SVG rendering")
    return parser


def _load_config(target: str) -> ExperimentConfig:
    path = Path(target)
    if path.exists():
        return ExperimentConfig.from_json(path.read_text())
    if target in PRESET_NAMES:
        return preset(target)
    raise ValueError(f"{target!r} is neither a config file nor a preset {PRESET_NAMES}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.target)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.seed = args.seed
        if cfg.game.get("type", "random") == "random":
            cfg.game["seed"] = args.seed
    if args.steps is not None:
        cfg.total_steps = args.steps
    if args.snapshot_every is not None:
        cfg.snapshot_every = args.snapshot_every
    if args.no_svg:
        cfg.svg = False
    if args.strict:
        cfg.strict = True
    try:
        manifest = run_experiment(cfg, args.out)
    except StrictModeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for name in sorted(manifest):
        print(f"{name}: {manifest[name]}")
    return 0 if manifest else 1


if __name__ == "__main__":
    sys.exit(main())
