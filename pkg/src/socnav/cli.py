"""Command-line entry points: train, eval, sweep, trace."""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .config import load_scenario
from .ddpg import TrainConfig, train, write_training_log
from .episodes import Metrics, episode_seed, intersection_suite, run_batch, run_episode
from .hybrid import PlannerMode
from .policy import save_checkpoint
from .reporting import (
    result_row,
    write_line_plot,
    write_metadata,
    write_results_csv,
    write_trace_files,
    write_trajectory_plot,
)


class CliError(RuntimeError):
    pass


def _prepare(cfg, args):
    if getattr(args, "mode", None):
        cfg = replace(cfg, mode=PlannerMode.parse(args.mode))
    if getattr(args, "policy", None):
        cfg = replace(cfg, policy=args.policy)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if cfg.policy != "scripted" and not os.path.exists(cfg.policy):
        raise CliError(f"checkpoint not found: {cfg.policy}")
    return cfg


def cmd_train(args) -> int:
    cfg = load_scenario(args.scenario)
    if cfg.agents.count > 0:
        raise CliError("training scenario must have no moving agents (static obstacles only)")
    os.makedirs(args.out, exist_ok=True)
    tc = TrainConfig(
        steps=args.steps,
        seed=args.seed if args.seed is not None else _scalar_seed(cfg.seed),
        sampling=cfg.sampling,
        sigma_lidar=cfg.sigma_lidar,
    )

    def progress(step, log):
        tail = log[-1]["episode_return"] if log else float("nan")
        print(f"step {step}/{tc.steps}  last episode return {tail:.1f}", flush=True)

    actor, critic, log = train(cfg.wmap, tc, out_dir=args.out, progress=progress)
    ckpt = os.path.join(args.out, "checkpoint.npz")
    digest = save_checkpoint(ckpt, actor, critic, {"steps": tc.steps, "seed": tc.seed})
    write_training_log(os.path.join(args.out, "training_log.csv"), log)
    write_metadata(
        os.path.join(args.out, "metadata.json"),
        {"command": "train", "scenario": args.scenario, "steps": tc.steps, "seed": tc.seed, "digest": digest},
    )
    returns = [row["episode_return"] for row in log[-20:]]
    mean_ret = sum(returns) / len(returns) if returns else float("nan")
    print(f"checkpoint {ckpt}")
    print(f"digest {digest}")
    print(f"final episode return (mean of last {len(returns)}): {mean_ret:.2f}")
    return 0


def _scalar_seed(seed) -> int:
    return int(seed[0]) if isinstance(seed, (tuple, list)) else int(seed)


def cmd_eval(args) -> int:
    cfg = _prepare(load_scenario(args.scenario), args)
    os.makedirs(args.out, exist_ok=True)
    cfg = replace(cfg, record_trace=args.emit_traces or args.emit_circles or args.emit_scans, record_scans=args.emit_scans)
    results = run_batch(cfg, args.episodes)
    metrics = Metrics.from_results(results)
    scenario_name = cfg.wmap.name
    rows = [result_row(scenario_name, cfg.mode.value, "", "", results, metrics)]
    out_csv = os.path.join(args.out, "results.csv")
    write_results_csv(out_csv, rows)
    if cfg.record_trace:
        for i, r in enumerate(results):
            write_trace_files(os.path.join(args.out, "traces"), f"ep{i:03d}", r.trace, args.emit_scans)
    write_metadata(os.path.join(args.out, "metadata.json"), vars(args) | {"command": "eval"})
    print(f"{scenario_name} {cfg.mode.value}: {metrics.line()}")
    print(f"results {out_csv}")
    return 0


def cmd_sweep(args) -> int:
    from .episodes import sweep as run_sweep

    values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    if not values:
        raise CliError("no sweep values given")
    modes = [PlannerMode.parse(m) for m in args.modes.split(",")] if args.modes else None
    cfg = _prepare(load_scenario(args.scenario), args)
    os.makedirs(args.out, exist_ok=True)
    rows = []
    series: dict[str, list] = {}
    for mode in modes or [cfg.mode]:
        mcfg = replace(cfg, mode=mode)
        table = run_sweep(args.axis, values, mcfg, episodes=args.episodes, seed=args.seed)
        pts = []
        for v, m in table:
            rows.append(
                {
                    "scenario": cfg.wmap.name,
                    "mode": mode.value,
                    "axis": args.axis,
                    "value": v,
                    "episodes": m.n,
                    "sr": m.sr,
                    "cr": m.cr,
                    "tr": m.tr,
                    "mean_steps": float("nan"),
                    "mean_min_clearance": float("nan"),
                }
            )
            pts.append((v, m.sr))
            print(f"{mode.value} {args.axis}={v:g}: {m.line()}")
        series[mode.value] = pts
    out_csv = os.path.join(args.out, "sweep.csv")
    write_results_csv(out_csv, rows)
    if args.plot:
        write_line_plot(
            os.path.join(args.out, f"sr_vs_{args.axis}.svg"),
            series,
            xlabel=args.axis,
            ylabel="success rate [%]",
            title=f"SR vs {args.axis}",
        )
    write_metadata(os.path.join(args.out, "metadata.json"), vars(args) | {"command": "sweep"})
    print(f"results {out_csv}")
    return 0


def cmd_trace(args) -> int:
    cfg = _prepare(load_scenario(args.scenario), args)
    os.makedirs(args.out, exist_ok=True)
    modes = [PlannerMode.parse(m) for m in args.modes.split(",")]
    trajectories = {}
    goal = None
    for mode in modes:
        mcfg = replace(
            cfg,
            mode=mode,
            record_trace=True,
            record_scans=args.emit_scans,
            seed=episode_seed(args.seed if args.seed is not None else cfg.seed, 0),
        )
        result = run_episode(mcfg)
        write_trace_files(os.path.join(args.out, "traces"), mode.value, result.trace, args.emit_scans)
        trajectories[mode.value] = [(x, y) for _, x, y, _, _, _ in result.trace["robot"]]
        print(f"{mode.value}: {result.outcome.value} in {result.steps_taken} steps")
    write_trajectory_plot(os.path.join(args.out, "trajectories.svg"), cfg.wmap, trajectories, goal)
    write_metadata(os.path.join(args.out, "metadata.json"), vars(args) | {"command": "trace"})
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="socnav", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train the policy on a static scenario")
    t.add_argument("--scenario", required=True)
    t.add_argument("--steps", type=int, default=100_000)
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a planner mode on a scenario")
    e.add_argument("--scenario", required=True)
    e.add_argument("--mode", default=None, help="op_ddpg|hybrid|at|arp|app|app_at")
    e.add_argument("--policy", default=None, help="'scripted' or checkpoint path")
    e.add_argument("--episodes", type=int, default=100)
    e.add_argument("--seed", type=int, default=None)
    e.add_argument("--out", required=True)
    e.add_argument("--emit-traces", action="store_true")
    e.add_argument("--emit-circles", action="store_true")
    e.add_argument("--emit-scans", action="store_true")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="sweep noise, agent count or agent velocity")
    s.add_argument("--scenario", required=True)
    s.add_argument("--axis", required=True, choices=["noise", "agents", "velocity"])
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--modes", default=None, help="comma-separated planner modes")
    s.add_argument("--policy", default=None)
    s.add_argument("--episodes", type=int, default=100)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", required=True)
    s.add_argument("--plot", action="store_true")
    s.set_defaults(func=cmd_sweep)

    tr = sub.add_parser("trace", help="dump per-step trajectories for mode comparison")
    tr.add_argument("--scenario", required=True)
    tr.add_argument("--modes", required=True, help="comma-separated planner modes")
    tr.add_argument("--policy", default=None)
    tr.add_argument("--seed", type=int, default=None)
    tr.add_argument("--out", required=True)
    tr.add_argument("--emit-circles", action="store_true")
    tr.add_argument("--emit-scans", action="store_true")
    tr.set_defaults(func=cmd_trace)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
