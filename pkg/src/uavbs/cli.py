"""Command-line entry point.

Each subcommand writes its outputs plus ``run_config.json`` (the echo of the
effective configuration) into ``--out``.  Exit codes: 0 success, 1
configuration or input error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from . import runner
from .config import RunConfig, load_config
from .errors import ConfigError, ParseError, UavbsError
from .mobility import parse_trajectory_file

log = logging.getLogger("uavbs")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _write(out_dir: str, name: str, text: str) -> str:
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def cmd_altitude_profile(cfg: RunConfig, args, out: str) -> dict:
    if args.values:
        h_values = [float(v) for v in args.values.split(",") if v.strip()]
    elif cfg.sweep.variable == "altitude":
        h_values = list(cfg.sweep.values)
    else:
        h_values = [float(h) for h in cfg.uav.search.grid()]
    rows = runner.altitude_sweep(cfg, h_values)
    _write(out, "altitude_profile.csv", runner.to_csv(rows, runner.PROFILE_COLUMNS))
    try:
        h_star, r_max = runner.stage_one(cfg)
        best = {"h_star_m": h_star, "r_max_m": r_max}
    except UavbsError as exc:
        best = {"infeasible": str(exc)}
    _write(out, "altitude_optimum.json", runner.to_json(best))
    return {"rows": len(rows), **best}


def cmd_place(cfg: RunConfig, args, out: str) -> dict:
    if args.policy:
        cfg = replace(cfg, mission=replace(cfg.mission, policy=runner.Policy.parse(args.policy)))
    ues, result = runner.run_placement(cfg)
    report = runner.placement_report(cfg, ues, result)
    _write(out, "placement.json", runner.to_json(report))
    _write(out, "placement.csv",
           runner.to_csv(runner.placement_rows(ues, result), runner.PLACEMENT_COLUMNS))
    return {"served": len(report.get("served", [])), "feasible": report["feasible"]}


def cmd_density_sweep(cfg: RunConfig, args, out: str) -> dict:
    rows = runner.density_sweep(cfg)
    _write(out, "density_sweep.csv", runner.to_csv(rows, runner.SWEEP_COLUMNS))
    meta = {"contention_threshold_n": runner.contention_threshold(cfg), "rows": len(rows)}
    _write(out, "density_sweep.json", runner.to_json(meta))
    return meta


def cmd_learn_channel(cfg: RunConfig, args, out: str) -> dict:
    _, report, table = runner.run_learning(cfg)
    _write(out, "channel_model.json", runner.to_json(report))
    _write(out, "channel_eval.csv", runner.to_csv(
        table, ("distance_m", "measured_db", "learned_db", "baseline_db")))
    return {k: report.get(k) for k in ("rmse_learned_db", "rmse_baseline_db")}


def _load_trajectories(path):
    if path is None:
        return None
    with open(path, encoding="utf-8") as fh:
        return parse_trajectory_file(fh)


def cmd_forecast(cfg: RunConfig, args, out: str) -> dict:
    train = _load_trajectories(args.train)
    test = _load_trajectories(args.test)
    report, rows = runner.run_forecast(cfg, train, test)
    _write(out, "forecast_summary.json", runner.to_json({**report, "config": cfg.echo()}))
    _write(out, "forecast.csv", runner.to_csv(rows, runner.FORECAST_COLUMNS))
    return {k: report[k] for k in ("rmse_esn_m", "rmse_persistence_m")}


def cmd_mission(cfg: RunConfig, args, out: str) -> dict:
    report = runner.run_mission(cfg)
    _write(out, "mission.csv", runner.to_csv(report.rows))
    _write(out, "mission.json", runner.to_json(report.summary()))
    return report.summary()


COMMANDS = {
    "altitude-profile": (cmd_altitude_profile, "coverage radius versus altitude"),
    "place": (cmd_place, "place one UAV over the configured crowd"),
    "density-sweep": (cmd_density_sweep, "per-level rates over crowd sizes and policies"),
    "learn-channel": (cmd_learn_channel, "fit the temporary channel model on synthetic RSS"),
    "forecast": (cmd_forecast, "ESN trajectory forecast against persistence"),
    "mission": (cmd_mission, "epoch-by-epoch service until hover endurance runs out"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run config file (section.key = value lines)")
    common.add_argument("--seed", type=int, help="override run.seed")
    common.add_argument("--out", help="output directory (default: run.out or '.')")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="uavbs", parents=[common],
                                description="UAV base station placement experiments")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    parsers = {name: sub.add_parser(name, parents=[common], help=text)
               for name, (_, text) in COMMANDS.items()}
    parsers["altitude-profile"].add_argument(
        "--values", help="comma-separated altitudes in m (default: the coarse search grid)")
    parsers["place"].add_argument("--policy", help="on-demand or max-coverage")
    parsers["forecast"].add_argument("--train", help="trajectory file for training")
    parsers["forecast"].add_argument("--test", help="trajectory file for evaluation")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        out = args.out or cfg.output_dir or "."
        os.makedirs(out, exist_ok=True)
        _write(out, "run_config.json", runner.to_json(cfg.echo()))
        fn, _ = COMMANDS[args.command]
        with np.errstate(all="ignore"):
            summary = fn(cfg, args, out)
    except (ConfigError, ParseError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (UavbsError, RuntimeError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(runner.to_json(summary), end="")
    return EXIT_OK
