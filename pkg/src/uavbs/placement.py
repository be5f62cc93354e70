"""Stage 2 of placement: horizontal position, served set and spectrum split.

Two policies share the stage-1 altitude/radius search:

* ``ON_DEMAND`` admits only UEs whose demand lower bound can be met, evicting
  the most spectrum-hungry UEs until the bandwidth and backhaul budgets hold,
  then shrinks the disk to the served set and re-tunes the altitude.
* ``MAX_COVERAGE`` serves every UE in the largest-count disk of the maximum
  radius and splits the band equally, with no rate guarantee.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .altitude import AltitudeSearchConfig, altitude_for_radius, optimal_altitude
from .channel import AtgEnvironment, RadioConfig, mean_path_loss, snr_db, spectral_efficiency
from .errors import ConfigError, InfeasibleError
from .geometry import best_disk, min_enclosing_circle
from .scenario import UE, DemandLevel

log = logging.getLogger(__name__)

EFFICIENCY_FLOOR = 1e-12  # bits/s/Hz; below this a link is treated as dead


class Policy(str, enum.Enum):
    ON_DEMAND = "on-demand"
    MAX_COVERAGE = "max-coverage"

    @classmethod
    def parse(cls, text: str) -> "Policy":
        try:
            return cls(text.strip().lower().replace("_", "-"))
        except ValueError:
            raise ConfigError(f"unknown policy {text!r}; use on-demand or max-coverage") from None


@dataclass
class Allocation:
    bandwidth: dict[int, float] = field(default_factory=dict)  # Hz
    rate: dict[int, float] = field(default_factory=dict)  # bits/s
    evicted: list[int] = field(default_factory=list)  # eviction order
    snr_floor: list[int] = field(default_factory=list)  # evicted for a dead link

    @property
    def total_bandwidth(self) -> float:
        return float(sum(self.bandwidth.values()))

    @property
    def total_rate(self) -> float:
        return float(sum(self.rate.values()))


@dataclass
class PlacementResult:
    center: tuple[float, float]
    altitude: float
    radius: float
    served: frozenset[int]
    allocation: Allocation
    policy: Policy
    r_max: float
    stage1_altitude: float
    diagnostics: dict = field(default_factory=dict)


def link_efficiency(positions: np.ndarray, center, altitude: float,
                    env: AtgEnvironment, radio: RadioConfig) -> np.ndarray:
    """Spectral efficiency (bits/s/Hz) of each ground position to the UAV."""
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    r = np.hypot(positions[:, 0] - center[0], positions[:, 1] - center[1])
    pl = np.atleast_1d(mean_path_loss(altitude, r, env, radio.carrier))
    return np.atleast_1d(spectral_efficiency(snr_db(pl, radio)))


def allocate_from_efficiency(efficiency: Mapping[int, float],
                             min_rate: Mapping[int, float],
                             radio: RadioConfig) -> tuple[Allocation, set[int]]:
    """Greedy admission and proportional split given per-UE link efficiencies.

    Each UE needs ``min_rate / efficiency`` Hz.  While the band or the backhaul
    is oversubscribed the UE with the largest need is evicted (ties: lower
    efficiency first, then higher id).  Survivors get their need scaled by a
    common factor ``>= 1`` that spends the leftover band without exceeding the
    backhaul cap.
    """
    alloc = Allocation()
    dead = sorted(u for u, e in efficiency.items() if not e > EFFICIENCY_FLOOR)
    if dead:
        log.warning("UEs %s are below the SNR floor and were evicted", dead)
    alloc.evicted.extend(dead)
    alloc.snr_floor.extend(dead)

    live = [u for u in efficiency if efficiency[u] > EFFICIENCY_FLOOR]
    need = {u: min_rate[u] / efficiency[u] for u in live}
    # eviction order is fixed up front: the largest need is always next
    order = sorted(live, key=lambda u: (-need[u], efficiency[u], -u))
    total_w = sum(need.values())
    total_r = sum(min_rate[u] for u in live)
    k = 0
    while k < len(order) and (total_w > radio.bandwidth or total_r > radio.backhaul_cap):
        u = order[k]
        total_w -= need[u]
        total_r -= min_rate[u]
        alloc.evicted.append(u)
        k += 1
    kept = set(order[k:])
    if not kept:
        return alloc, kept

    # recompute sums over survivors to shed accumulated subtraction error
    total_w = sum(need[u] for u in kept)
    total_r = sum(min_rate[u] for u in kept)
    scale = max(1.0, min(radio.bandwidth / total_w, radio.backhaul_cap / total_r))
    for u in sorted(kept):
        alloc.bandwidth[u] = need[u] * scale
        alloc.rate[u] = min_rate[u] * scale
    return alloc, kept


def allocate_bandwidth(served: Sequence[UE], center, altitude: float,
                       env: AtgEnvironment, radio: RadioConfig,
                       demand_of: Mapping[int, DemandLevel]) -> tuple[Allocation, set[int]]:
    if not served:
        raise ConfigError("allocate_bandwidth needs at least one served UE")
    eff = link_efficiency([u.position for u in served], center, altitude, env, radio)
    efficiency = {u.id: float(e) for u, e in zip(served, eff)}
    min_rate = {u.id: demand_of[u.id].min_rate for u in served}
    return allocate_from_efficiency(efficiency, min_rate, radio)


def _demand_lookup(ues: Sequence[UE], levels: Sequence[DemandLevel]) -> dict[int, DemandLevel]:
    by_id = {lv.id: lv for lv in levels}
    try:
        return {u.id: by_id[u.demand] for u in ues}
    except KeyError as exc:
        raise ConfigError(f"UE refers to unknown demand level {exc.args[0]}") from None


def _stage_one(ues, env, radio, search, stage1):
    if not ues:
        raise InfeasibleError("no placement: the UE list is empty")
    h1, r_max = stage1 if stage1 is not None else optimal_altitude(env, radio, search)
    center, covered = best_disk([u.position for u in ues], r_max, [u.id for u in ues])
    if not covered:
        raise InfeasibleError("no placement: no UE can be covered")
    return h1, r_max, center, [u for u in ues if u.id in covered]


def place_on_demand(ues: Sequence[UE], levels: Sequence[DemandLevel],
                    env: AtgEnvironment, radio: RadioConfig,
                    search: AltitudeSearchConfig | None = None,
                    stage1: tuple[float, float] | None = None) -> PlacementResult:
    """Two-stage on-demand placement.

    ``stage1`` may carry a precomputed ``(h_star, r_max)`` to skip the
    altitude search when many crowds share one channel configuration.
    """
    search = search or AltitudeSearchConfig()
    demand_of = _demand_lookup(ues, levels)
    h1, r_max, center, served = _stage_one(ues, env, radio, search, stage1)

    alloc, kept = allocate_bandwidth(served, center, h1, env, radio, demand_of)
    evicted = list(alloc.evicted)
    snr_floor = list(alloc.snr_floor)
    by_id = {u.id: u for u in served}
    while True:
        if not kept:
            raise InfeasibleError("no placement: every covered UE was evicted")
        members = [by_id[u] for u in sorted(kept)]
        center, radius = min_enclosing_circle([u.position for u in members])
        altitude = altitude_for_radius(radius, env, radio, search)
        # the new geometry changes every link, so admission is re-checked
        alloc, again = allocate_bandwidth(members, center, altitude, env, radio, demand_of)
        evicted.extend(alloc.evicted)
        snr_floor.extend(alloc.snr_floor)
        if again == kept:
            break
        kept = again

    alloc.evicted = evicted
    alloc.snr_floor = snr_floor
    return PlacementResult(
        center=(float(center[0]), float(center[1])), altitude=altitude, radius=radius,
        served=frozenset(kept), allocation=alloc, policy=Policy.ON_DEMAND,
        r_max=r_max, stage1_altitude=h1,
        diagnostics=_diagnostics(alloc, radio, covered=len(served)))


def place_max_coverage(ues: Sequence[UE], levels: Sequence[DemandLevel],
                       env: AtgEnvironment, radio: RadioConfig,
                       search: AltitudeSearchConfig | None = None,
                       stage1: tuple[float, float] | None = None) -> PlacementResult:
    search = search or AltitudeSearchConfig()
    _demand_lookup(ues, levels)
    h1, r_max, center, served = _stage_one(ues, env, radio, search, stage1)

    eff = link_efficiency([u.position for u in served], center, h1, env, radio)
    w = radio.bandwidth / len(served)
    rates = w * eff
    total = float(rates.sum())
    if total > radio.backhaul_cap:
        rates = rates * (radio.backhaul_cap / total)
    alloc = Allocation()
    for u, rate in sorted(zip((u.id for u in served), rates)):
        alloc.bandwidth[u] = w
        alloc.rate[u] = float(rate)
    return PlacementResult(
        center=(float(center[0]), float(center[1])), altitude=h1, radius=r_max,
        served=frozenset(alloc.rate), allocation=alloc, policy=Policy.MAX_COVERAGE,
        r_max=r_max, stage1_altitude=h1,
        diagnostics=_diagnostics(alloc, radio, covered=len(served)))


def place(policy: Policy, ues, levels, env, radio, search=None, stage1=None) -> PlacementResult:
    fn = place_on_demand if policy is Policy.ON_DEMAND else place_max_coverage
    return fn(ues, levels, env, radio, search, stage1)


def _diagnostics(alloc: Allocation, radio: RadioConfig, covered: int) -> dict:
    return {
        "covered": covered,
        "evicted": len(alloc.evicted),
        "snr_floor_evictions": len(alloc.snr_floor),
        "backhaul_bps": alloc.total_rate,
        "backhaul_utilization": alloc.total_rate / radio.backhaul_cap,
        "backhaul_rtt_budget_ms": radio.backhaul_rtt_budget,
    }


def violations(result: PlacementResult, ues: Sequence[UE],
               levels: Sequence[DemandLevel]) -> dict[int, int]:
    """Served UEs whose allocated rate is below their level's bound, per level."""
    demand_of = _demand_lookup(ues, levels)
    out = {lv.id: 0 for lv in levels}
    for u, rate in result.allocation.rate.items():
        lv = demand_of[u]
        if rate < lv.min_rate:
            out[lv.id] += 1
    return out
