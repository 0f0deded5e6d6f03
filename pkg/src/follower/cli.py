"""Command-line interface: run scenarios, train policies, redraw heatmaps."""

import argparse
import sys
from pathlib import Path as FsPath

import numpy as np

from .errors import FollowerError, UsageError
from .grid import Grid
from .heatmap import emit_heatmap
from .scenario import (ScenarioSpec, ablation_csv, ablation_matrix,
                       log_from_json, run_scenario, write_outputs)
from .train import load_train_config, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="follower",
        description="Lifelong multi-agent pathfinding benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark scenario")
    run.add_argument("--map", required=True,
                     help="map file, gen:maze:WxH:SEED, or gen:random:WxH:DENSITY:SEED")
    run.add_argument("--agents", type=int, required=True)
    run.add_argument("--steps", type=int, required=True, help="episode length")
    run.add_argument("--solver", required=True,
                     choices=["follower", "followerlite", "norl"])
    run.add_argument("--ckpt", default=None, help="checkpoint for learnable solvers")
    run.add_argument("--no-static-cost", action="store_true",
                     help="disable the precalculated congestion penalty")
    run.add_argument("--no-dynamic-cost", action="store_true",
                     help="disable observation-count accumulation")
    run.add_argument("--greedy", action="store_true",
                     help="argmax action selection instead of sampling")
    run.add_argument("--seeds", required=True, help="comma-separated seed list")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--batched", action="store_true",
                     help="batch policy forwards across agents (faster, "
                          "coarser per-agent timing)")
    run.add_argument("--ablation", action="store_true",
                     help="also run the component-removal variants and write "
                          "ablation.csv")

    tr = sub.add_parser("train", help="train a policy")
    tr.add_argument("--config", required=True, help="flat key = value config file")

    hm = sub.add_parser("heatmap", help="regenerate heatmap files from an episode log")
    hm.add_argument("--log", required=True)
    hm.add_argument("--out", default=None, help="output directory (default: log's)")
    return parser


def _parse_seeds(text: str):
    try:
        seeds = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError as exc:
        raise UsageError(f"bad seed list {text!r}: {exc}") from exc
    if not seeds:
        raise UsageError("empty seed list")
    return seeds


def cmd_run(args) -> int:
    spec = ScenarioSpec(
        map_source=args.map, num_agents=args.agents, episode_length=args.steps,
        solver=args.solver, seeds=_parse_seeds(args.seeds), ckpt=args.ckpt,
        use_static_costs=not args.no_static_cost,
        use_dynamic_costs=not args.no_dynamic_cost,
        greedy=args.greedy, batched=args.batched)
    report, logs = run_scenario(spec)
    write_outputs(args.out, report, logs)
    print(f"mean throughput {report.mean_throughput:.4f} "
          f"(95% CI +/- {report.ci95:.4f}), total goals {report.total_goals}, "
          f"decision time {report.mean_decision_ms:.3f} ms/agent/step")
    if args.ablation:
        reports = ablation_matrix(spec)
        table = ablation_csv(reports)
        (FsPath(args.out) / "ablation.csv").write_text(table)
        print(table, end="")
    return 0


def cmd_train(args) -> int:
    config = load_train_config(args.config)
    ckpt, log = train(config)
    print(f"final checkpoint: {ckpt}")
    print(f"training log: {log}")
    return 0


def cmd_heatmap(args) -> int:
    log_path = FsPath(args.log)
    try:
        log = log_from_json(log_path.read_text())
    except OSError as exc:
        raise UsageError(f"cannot read log {args.log!r}: {exc}") from exc
    out_dir = FsPath(args.out) if args.out else log_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = Grid(np.array([[ch == "@" for ch in row] for row in log.map_rows]))
    csv_path = out_dir / f"heatmap_{log.seed}.csv"
    pnm_path = out_dir / f"heatmap_{log.seed}.pnm"
    emit_heatmap(log.visit_counts, grid, csv_path, pnm_path)
    print(f"wrote {csv_path} and {pnm_path}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": cmd_run, "train": cmd_train, "heatmap": cmd_heatmap}
    try:
        return handlers[args.command](args)
    except FollowerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
