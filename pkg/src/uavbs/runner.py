"""Experiment orchestration: missions, sweeps, learning and forecasting runs.

Every random draw is seeded from the run seed through ``derive_seed`` so a
single cell of any sweep can be replayed on its own.  Density-sweep crowds
are keyed by repetition only (not by ``n``), which makes the crowd for a
smaller ``n`` a prefix of the crowd for a larger one.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import zlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .altitude import coverage_profile, optimal_altitude
from .config import RunConfig
from .errors import ConfigError, InfeasibleError
from .esn import build_reservoir, predict, train_readout
from .learning import Truth, evaluate, evaluation_table, generate_samples, learn
from .mobility import Trajectory, forecast_error, persistence_forecast, synthetic_trajectories
from .placement import Policy, PlacementResult, link_efficiency, place, violations
from .scenario import UE, assign_demands, evolve_hotspots, generate_crowd

log = logging.getLogger(__name__)

SWEEP_COLUMNS = ("n_ues", "policy", "repetition", "level_id", "min_allocated_rate_bps",
                 "served", "violations", "backhaul_bps")
PROFILE_COLUMNS = ("h_m", "radius_m")
FORECAST_COLUMNS = ("traj_id", "step", "true_x", "true_y", "pred_x", "pred_y",
                    "persist_x", "persist_y")
PLACEMENT_COLUMNS = ("ue_id", "x_m", "y_m", "level_id", "served", "bandwidth_hz", "rate_bps")
SEED_MODULUS = 2 ** 63


def derive_seed(seed: int, *key) -> int:
    """``seed`` plus a CRC32 of the key's repr; stable across runs and platforms."""
    return (seed + zlib.crc32(repr(key).encode("utf-8"))) % SEED_MODULUS


def build_crowd(cfg: RunConfig, n_ues: int, crowd_seed: int, hotspots=None) -> list[UE]:
    hotspots = cfg.crowd.hotspots if hotspots is None else hotspots
    ues = generate_crowd(cfg.region, hotspots, n_ues, crowd_seed)
    return assign_demands(ues, cfg.levels, derive_seed(crowd_seed, "demands"))


def stage_one(cfg: RunConfig) -> tuple[float, float]:
    return optimal_altitude(cfg.environment, cfg.radio, cfg.uav.search)


def level_stats(result: PlacementResult | None, ues: Sequence[UE], cfg: RunConfig):
    """Per-level ``(min_rate or nan, served count, violations)``."""
    demand = {u.id: u.demand for u in ues}
    bad = violations(result, ues, cfg.levels) if result else {}
    out = {}
    for lv in cfg.levels:
        rates = [] if result is None else \
            [r for u, r in result.allocation.rate.items() if demand[u] == lv.id]
        out[lv.id] = (min(rates) if rates else math.nan, len(rates), bad.get(lv.id, 0))
    return out


def place_crowd(cfg: RunConfig, ues: Sequence[UE], policy: Policy,
                stage1: tuple[float, float] | None = None) -> PlacementResult | None:
    """Placement, or ``None`` when no UE can be served."""
    try:
        return place(policy, ues, cfg.levels, cfg.environment, cfg.radio,
                     cfg.uav.search, stage1)
    except InfeasibleError as exc:
        log.warning("placement infeasible: %s", exc)
        return None


def density_sweep(cfg: RunConfig, sweep=None) -> list[dict]:
    """Rows of ``SWEEP_COLUMNS`` sorted by (n, policy, repetition, level)."""
    sweep = sweep or cfg.sweep
    if sweep.variable != "n_ues":
        raise ConfigError("density_sweep needs sweep.variable = n_ues", key="sweep.variable")
    stage1 = stage_one(cfg)
    rows = []
    for value in sweep.values:
        n = int(value)
        if n != value or n < 0:
            raise ConfigError(f"n_ues sweep values must be non-negative integers, got {value}",
                              key="sweep.values")
        for rep in range(sweep.repetitions):
            ues = build_crowd(cfg, n, derive_seed(cfg.crowd_seed, "crowd", rep))
            for policy in sweep.policies:
                result = place_crowd(cfg, ues, policy, stage1) if ues else None
                backhaul = result.allocation.total_rate if result else 0.0
                for lv_id, (rate, served, bad) in level_stats(result, ues, cfg).items():
                    rows.append({"n_ues": n, "policy": policy.value, "repetition": rep,
                                 "level_id": lv_id, "min_allocated_rate_bps": rate,
                                 "served": served, "violations": bad,
                                 "backhaul_bps": backhaul})
    rows.sort(key=lambda r: (r["n_ues"], r["policy"], r["repetition"], r["level_id"]))
    return rows


def altitude_sweep(cfg: RunConfig, h_values: Sequence[float]) -> list[dict]:
    if len(h_values) == 0:
        raise ConfigError("altitude sweep needs at least one altitude", key="sweep.values")
    return [{"h_m": float(h), "radius_m": float(r)}
            for h, r in coverage_profile(cfg.environment, cfg.radio, list(h_values))]


def contention_threshold(cfg: RunConfig, stage1: tuple[float, float] | None = None) -> int:
    """Smallest crowd for which an equal split must violate the lowest bound.

    With n UEs each gets ``W / n`` Hz; even the best link (directly below
    the UAV at the stage-1 altitude) then carries at most ``W e_max / n``.
    """
    h1, _ = stage1 or stage_one(cfg)
    e_max = float(link_efficiency([(0.0, 0.0)], (0.0, 0.0), h1, cfg.environment, cfg.radio)[0])
    low = min(lv.min_rate for lv in cfg.levels)
    return int(math.floor(cfg.radio.bandwidth * e_max / low)) + 1


@dataclass
class MissionReport:
    rows: list[dict]
    epochs: int

    def summary(self) -> dict:
        served = [r["served"] for r in self.rows]
        return {"epochs": self.epochs,
                "served_mean": float(np.mean(served)) if served else 0.0,
                "infeasible_epochs": sum(1 for r in self.rows if not r["feasible"])}


def mission_epochs(cfg: RunConfig) -> int:
    # small slack so 600 / 60 does not lose an epoch to rounding
    return int(math.floor(cfg.uav.hover_endurance_s / cfg.mission.epoch_s + 1e-9))


def run_mission(cfg: RunConfig) -> MissionReport:
    """Serve the crowd epoch by epoch until the hover endurance runs out.

    Hotspots random-walk between epochs; the crowd is redrawn from the moved
    hotspots with the configured crowd seed, so zero drift repeats the same
    crowd and therefore the same placement.
    """
    stage1 = stage_one(cfg)
    hotspots = list(cfg.crowd.hotspots)
    rows = []
    n_epochs = mission_epochs(cfg)
    for k in range(n_epochs):
        if k:
            hotspots = evolve_hotspots(hotspots, cfg.mission.epoch_s, cfg.crowd.drift_sigma,
                                       derive_seed(cfg.seed, "evolve", k), cfg.region)
        ues = build_crowd(cfg, cfg.crowd.n_ues, cfg.crowd_seed, hotspots)
        result = place_crowd(cfg, ues, cfg.mission.policy, stage1) if ues else None
        row = {"epoch": k, "t_start_s": k * cfg.mission.epoch_s,
               "policy": cfg.mission.policy.value, "feasible": result is not None,
               "served": len(result.served) if result else 0,
               "center_x_m": result.center[0] if result else math.nan,
               "center_y_m": result.center[1] if result else math.nan,
               "altitude_m": result.altitude if result else math.nan,
               "radius_m": result.radius if result else math.nan,
               "backhaul_bps": result.allocation.total_rate if result else 0.0,
               "backhaul_utilization":
                   result.allocation.total_rate / cfg.radio.backhaul_cap if result else 0.0}
        for lv_id, (rate, _, _) in level_stats(result, ues, cfg).items():
            row[f"min_rate_level_{lv_id}_bps"] = rate
        rows.append(row)
    return MissionReport(rows, n_epochs)


def placement_report(cfg: RunConfig, ues: Sequence[UE], result: PlacementResult | None) -> dict:
    if result is None:
        return {"feasible": False, "n_ues": len(ues)}
    alloc = result.allocation
    stats = level_stats(result, ues, cfg)
    return {
        "feasible": True,
        "policy": result.policy.value,
        "n_ues": len(ues),
        "center_m": list(result.center),
        "altitude_m": result.altitude,
        "radius_m": result.radius,
        "stage1": {"altitude_m": result.stage1_altitude, "r_max_m": result.r_max},
        "served": sorted(result.served),
        "evicted": list(alloc.evicted),
        "snr_floor_evicted": list(alloc.snr_floor),
        "allocation": [{"ue": u, "bandwidth_hz": alloc.bandwidth[u], "rate_bps": alloc.rate[u]}
                       for u in sorted(alloc.rate)],
        "levels": {str(k): {"min_rate_bps": _json_num(v[0]), "served": v[1], "violations": v[2]}
                   for k, v in stats.items()},
        "diagnostics": result.diagnostics,
    }


def placement_rows(ues: Sequence[UE], result: PlacementResult | None) -> list[dict]:
    alloc = result.allocation if result else None
    return [{"ue_id": u.id, "x_m": u.position[0], "y_m": u.position[1], "level_id": u.demand,
             "served": int(alloc is not None and u.id in alloc.rate),
             "bandwidth_hz": alloc.bandwidth.get(u.id, 0.0) if alloc else 0.0,
             "rate_bps": alloc.rate.get(u.id, 0.0) if alloc else 0.0} for u in ues]


def run_placement(cfg: RunConfig) -> tuple[list[UE], PlacementResult | None]:
    ues = build_crowd(cfg, cfg.crowd.n_ues, cfg.crowd_seed)
    return ues, place_crowd(cfg, ues, cfg.mission.policy) if ues else None


def run_learning(cfg: RunConfig):
    """Train on synthetic reports from an offset truth, evaluate on fresh ones.

    Returns ``(model, report, table)`` where ``table`` holds per-sample
    held-out path losses.
    """
    lc = cfg.learning
    truth = Truth.from_environment(cfg.environment, cfg.radio.carrier,
                                   lc.los_offset_db, lc.nlos_offset_db)
    train, _ = generate_samples(cfg.environment, cfg.radio, truth, lc.n_train,
                                lc.cfg.shadowing_sigma, derive_seed(cfg.seed, "learn-train"),
                                lc.geometry)
    test, _ = generate_samples(cfg.environment, cfg.radio, truth, lc.n_test,
                               lc.cfg.shadowing_sigma, derive_seed(cfg.seed, "learn-test"),
                               lc.geometry)
    model = learn(train, lc.cfg, cfg.radio, seed=cfg.seed)
    report = {"model": model.to_dict(),
              "truth": {"a_los_db": truth.a_los, "alpha_los": truth.alpha_los,
                        "a_nlos_db": truth.a_nlos, "alpha_nlos": truth.alpha_nlos},
              "n_train": len(train), "n_test": len(test)}
    table = []
    if test:
        r_learned, r_base = evaluate(model, cfg.environment, test, cfg.radio)
        report.update(rmse_learned_db=r_learned, rmse_baseline_db=r_base)
        table = [{"distance_m": d, "measured_db": m, "learned_db": l, "baseline_db": b}
                 for d, m, l, b in evaluation_table(model, cfg.environment, test, cfg.radio)]
    return model, report, table


def run_forecast(cfg: RunConfig, train: Sequence[Trajectory] | None = None,
                 test: Sequence[Trajectory] | None = None):
    """ESN vs persistence on held-out trajectories.

    Missing trajectory sets fall back to synthetic ones.  Each test
    trajectory contributes one window: the first ``history`` points are fed
    in and the next ``horizon`` points are predicted.
    """
    ec = cfg.esn
    if train is None:
        train = synthetic_trajectories(ec.n_train, ec.steps, derive_seed(cfg.seed, "esn-train"))
    if test is None:
        test = synthetic_trajectories(ec.n_test, ec.steps, derive_seed(cfg.seed, "esn-test"))
    need = ec.history + ec.horizon
    usable = [tr for tr in test if len(tr) >= need]
    if not usable:
        raise ConfigError(f"no test trajectory has {need} points (history + horizon)",
                          key="esn.history")
    model = build_reservoir(ec.cfg, derive_seed(cfg.seed, "esn-reservoir"))
    model = train_readout(model, train, ec.cfg)
    truths, esn_preds, base_preds, rows = [], [], [], []
    for k, tr in enumerate(usable):
        hist = tr.head(ec.history)
        truth = tr.xy[ec.history:need]
        p = predict(model, hist, ec.horizon)
        q = persistence_forecast(hist, ec.horizon)
        truths.append(truth)
        esn_preds.append(p)
        base_preds.append(q)
        for s in range(ec.horizon):
            rows.append({"traj_id": k, "step": s + 1,
                         "true_x": truth[s, 0], "true_y": truth[s, 1],
                         "pred_x": p[s, 0], "pred_y": p[s, 1],
                         "persist_x": q[s, 0], "persist_y": q[s, 1]})
    report = {"n_train": len(train), "n_test": len(usable), "history": ec.history,
              "horizon": ec.horizon,
              "rmse_esn_m": forecast_error(truths, esn_preds).value,
              "rmse_persistence_m": forecast_error(truths, base_preds).value,
              "model_flags": list(model.flags)}
    return report, rows


def _json_num(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _clean(obj):
    """Replace non-finite floats by ``None`` and numpy scalars by Python ones."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    return _json_num(obj)


def to_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def to_csv(rows: Sequence[dict], columns: Sequence[str] | None = None) -> str:
    if columns is None:
        columns = list(rows[0]) if rows else []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if isinstance(v, float) and not math.isfinite(v) else v
                    for v in (r[c] for c in columns)])
    return buf.getvalue()
