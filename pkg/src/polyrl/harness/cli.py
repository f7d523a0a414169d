"""Command-line entry point: ``polyrl {run,sweep,chain-stats,render,eval}``.

Exit codes: 0 success, 2 configuration error, 3 I/O or parse error.
Set ``POLYRL_LOG`` (DEBUG, INFO, WARNING, ...) to control log verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from ..errors import ConfigError, DataFormatError, DomainError
from .chainstats import chain_stats
from .config import ExperimentConfig, load_config, normalize_method
from .csvio import write_csv
from .render import render_svg
from .runner import build_learner, greedy_rollouts, run_experiment, seed_streams
from .sweep import sweep

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3
EVAL_HEADER = ["seed", "rollout", "return", "steps", "reached"]


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polyrl", description="Persistent-exploration experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def experiment_flags(sp):
        sp.add_argument("--config", type=Path, help="YAML experiment config")
        sp.add_argument("--seed", type=int, action="append", help="seed (repeatable); overrides the config")
        sp.add_argument("--out", type=Path, help="output directory; overrides the config")
        sp.add_argument("--episodes", type=int, help="training episodes; overrides the config")
        sp.add_argument("--method", choices=["polyrl", "epsilon-greedy", "uniform"], help="exploration method")

    run = sub.add_parser("run", help="train and evaluate one configuration")
    experiment_flags(run)
    run.add_argument("--svg", action="store_true", help="also render each seed's trajectory")

    sw = sub.add_parser("sweep", help="grid over theta x sigma^2 x beta")
    experiment_flags(sw)
    sw.add_argument("--theta", type=_floats, help="comma-separated theta values")
    sw.add_argument("--sigma-sq", type=_floats, help="comma-separated sigma^2 values")
    sw.add_argument("--beta", type=_floats, help="comma-separated beta values")

    cs = sub.add_parser("chain-stats", help="ideal-chain ensemble statistics")
    cs.add_argument("--model", choices=["fjc", "frc"], required=True)
    cs.add_argument("--dim", type=int, default=3)
    cs.add_argument("--n-bonds", type=int, default=100)
    cs.add_argument("--b0", type=float, default=1.0)
    cs.add_argument("--theta", type=float)
    cs.add_argument("--chains", type=int, default=10_000)
    cs.add_argument("--max-lag", type=int)
    cs.add_argument("--seed", type=int, default=0)
    cs.add_argument("--out", type=Path, default=Path("."))

    rd = sub.add_parser("render", help="render a trajectory CSV to SVG")
    rd.add_argument("trajectory", type=Path)
    rd.add_argument("--config", type=Path, help="config naming the environment")
    rd.add_argument("--out", type=Path, help="SVG path (default: next to the CSV)")
    rd.add_argument("--coverage-cell", type=float, help="draw visited cells of this size")

    ev = sub.add_parser("eval", help="reload weights and run greedy rollouts")
    ev.add_argument("--config", type=Path)
    ev.add_argument("--weights", type=Path, required=True)
    ev.add_argument("--seed", type=int, action="append")
    ev.add_argument("--episodes", type=int, default=10, help="greedy rollouts per seed")
    ev.add_argument("--out", type=Path, help="write eval.csv into this directory")
    return p


def _experiment_config(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    kw = {}
    if args.seed:
        kw["seeds"] = tuple(args.seed)
    if args.out is not None:
        kw["output_dir"] = str(args.out)
    if args.episodes is not None:
        kw["episodes"] = args.episodes
    if args.method is not None:
        kw["method"] = normalize_method(args.method)
    return replace(config, **kw) if kw else config


def cmd_run(args) -> int:
    config = _experiment_config(args)
    out = Path(config.output_dir)
    results = run_experiment(config, out)
    if args.svg and config.environment != "pointmass":
        spec = config.build_spec()
        for r in results:
            traj = out / f"trajectory_seed{r.seed}.csv"
            if traj.exists():
                render_svg(traj, spec, out / f"trajectory_seed{r.seed}.svg", config.coverage_cell)
    for r in results:
        status = "FAILED " + r.message if r.failed else "ok"
        final = r.metrics[-1] if r.metrics else None
        extra = f" eval_return={final[3]!r} coverage={final[5]!r}" if final else ""
        print(f"seed {r.seed}: {status} goal_episodes={len(r.goal_episodes)}{extra}")
    print(f"metrics: {out / 'metrics.csv'}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _experiment_config(args)
    p = config.polyrl
    rows = sweep(config, args.theta or [p.theta], args.sigma_sq or [p.sigma_sq], args.beta or [p.beta],
                 Path(config.output_dir))
    for row in rows:
        print("theta={!r} sigma_sq={!r} beta={!r}: eval_return {!r} +- {!r} ({})".format(*row[:3], row[5], row[6], row[9]))
    return EXIT_OK


def cmd_chain_stats(args) -> int:
    if args.model == "frc" and args.theta is None:
        raise ConfigError("--theta is required for the frc model")
    try:
        report = chain_stats(args.model, args.dim, args.n_bonds, args.b0, args.theta, args.chains, args.seed, args.max_lag)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    corr, summary = report.write(args.out)
    for name, value, se, ref in report.summary_rows():
        print(f"{name:>20s} {value!r:>24s} se={se!r} ref={ref!r}")
    print(f"wrote {corr} and {summary}")
    return EXIT_OK


def cmd_render(args) -> int:
    config = load_config(args.config) if args.config else ExperimentConfig()
    if config.environment == "pointmass":
        raise ConfigError("rendering needs a navigation environment")
    out = args.out or args.trajectory.with_suffix(".svg")
    render_svg(args.trajectory, config.build_spec(), out, args.coverage_cell)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    config = load_config(args.config) if args.config else ExperimentConfig()
    if config.environment == "pointmass":
        raise ConfigError("evaluation needs a navigation environment")
    spec = config.build_spec()
    q = build_learner(config, spec)
    try:
        q.load(args.weights)
    except ValueError as exc:
        raise DataFormatError(str(exc)) from exc
    rows = []
    for seed in args.seed or list(config.seeds):
        eval_rng = seed_streams(config.master_seed, seed)[1]
        for i, (ret, steps, reached) in enumerate(greedy_rollouts(q, spec, eval_rng, args.episodes)):
            rows.append((seed, i, ret, steps, reached))
            print(f"seed {seed} rollout {i}: return={ret!r} steps={steps} reached={reached}")
    if args.out is not None:
        write_csv(args.out / "eval.csv", EVAL_HEADER, rows)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "chain-stats": cmd_chain_stats,
    "render": cmd_render,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    level = os.environ.get("POLYRL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataFormatError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
