"""Synthetic crowds: hotspot mixtures, demand levels and density maps.

Crowds are sampled UE by UE from a single generator so that, for a fixed
seed, the crowd of size ``n`` is a prefix of the crowd of size ``m > n``.
The density sweep relies on this to compare nested UE sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError

SIGMA_FLOOR = 1e-6
MAX_REJECTIONS = 1000
FRACTION_TOL = 1e-9


@dataclass(frozen=True)
class Region:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ConfigError(f"degenerate region {self}")

    def contains(self, x, y) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def clamp(self, x, y) -> tuple[float, float]:
        return (min(max(x, self.x_min), self.x_max),
                min(max(y, self.y_min), self.y_max))

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))


@dataclass(frozen=True)
class DemandLevel:
    id: int
    min_rate: float  # bits/s
    fraction: float

    def __post_init__(self):
        if not self.min_rate > 0:
            raise ConfigError(f"demand level {self.id}: min_rate must be > 0")
        if not 0 <= self.fraction <= 1:
            raise ConfigError(f"demand level {self.id}: fraction must lie in [0, 1]")


@dataclass(frozen=True)
class UE:
    id: int
    position: tuple[float, float]
    demand: int = 0


@dataclass(frozen=True)
class HotSpot:
    center: tuple[float, float]
    sigma: float
    weight: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError(f"hotspot sigma must be > 0, got {self.sigma}")
        if self.weight < 0:
            raise ConfigError(f"hotspot weight must be >= 0, got {self.weight}")


@dataclass(frozen=True)
class CrowdField:
    origin: tuple[float, float]
    cell_size: float
    counts: np.ndarray  # shape (nx, ny), counts[i][j] for x-cell i, y-cell j

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def check_levels(levels: Sequence[DemandLevel]) -> None:
    if not levels:
        raise ConfigError("at least one demand level is required")
    total = sum(lv.fraction for lv in levels)
    if abs(total - 1.0) > FRACTION_TOL:
        raise ConfigError(f"demand fractions sum to {total!r}, expected 1")
    ids = [lv.id for lv in levels]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"duplicate demand level ids: {ids}")


def check_hotspots(hotspots: Sequence[HotSpot]) -> None:
    total = sum(h.weight for h in hotspots)
    if hotspots and abs(total - 1.0) > FRACTION_TOL:
        raise ConfigError(f"hotspot weights sum to {total!r}, expected 1")


def generate_crowd(region: Region, hotspots: Sequence[HotSpot], n_ues: int,
                   seed: int) -> list[UE]:
    """Draw ``n_ues`` positions from the hotspot mixture, truncated to ``region``.

    Each UE picks a hotspot by weight, then redraws its Gaussian offset until
    the point lands inside the region (at most ``MAX_REJECTIONS`` times, after
    which the last draw is clamped).
    """
    return sample_crowd(region, hotspots, n_ues, seed)[0]


def sample_crowd(region: Region, hotspots: Sequence[HotSpot], n_ues: int,
                 seed: int) -> tuple[list[UE], list[int]]:
    """Like :func:`generate_crowd`, also returning each UE's hotspot index."""
    if n_ues < 0:
        raise ConfigError(f"n_ues must be >= 0, got {n_ues}")
    if n_ues == 0:
        return [], []
    if not hotspots:
        raise ConfigError("no hotspots configured for a non-empty crowd")
    check_hotspots(hotspots)

    rng = np.random.default_rng(seed)
    cum = np.cumsum([h.weight for h in hotspots])
    cum /= cum[-1]
    ues, comps = [], []
    for i in range(n_ues):
        k = int(np.searchsorted(cum, rng.random(), side="right"))
        k = min(k, len(hotspots) - 1)
        spot = hotspots[k]
        sigma = max(spot.sigma, SIGMA_FLOOR)
        for _ in range(MAX_REJECTIONS):
            dx, dy = rng.standard_normal(2)
            x = spot.center[0] + sigma * dx
            y = spot.center[1] + sigma * dy
            if region.contains(x, y):
                break
        else:
            x, y = region.clamp(x, y)
        ues.append(UE(i, (float(x), float(y))))
        comps.append(k)
    return ues, comps


def evolve_hotspots(hotspots: Sequence[HotSpot], dt: float, drift_sigma: float,
                    seed: int, region: Region | None = None) -> list[HotSpot]:
    """Random-walk every hotspot center by N(0, drift_sigma**2 * dt) per axis."""
    if not dt > 0:
        raise ConfigError(f"dt must be > 0, got {dt}")
    if drift_sigma == 0:
        return list(hotspots)
    rng = np.random.default_rng(seed)
    step = drift_sigma * math.sqrt(dt)
    out = []
    for h in hotspots:
        dx, dy = rng.standard_normal(2) * step
        x, y = h.center[0] + dx, h.center[1] + dy
        if region is not None:
            x, y = region.clamp(x, y)
        out.append(replace(h, center=(float(x), float(y))))
    return out


def density_map(ues: Sequence[UE], region: Region, cell_size: float) -> CrowdField:
    """Rasterize UE positions into half-open ``[low, high)`` cells.

    Points outside the grid (including the closing edge ``x_max``/``y_max``)
    are counted in the nearest edge cell so the total is always conserved.
    """
    if not cell_size > 0:
        raise ConfigError(f"cell_size must be > 0, got {cell_size}")
    nx = max(1, math.ceil((region.x_max - region.x_min) / cell_size))
    ny = max(1, math.ceil((region.y_max - region.y_min) / cell_size))
    counts = np.zeros((nx, ny), dtype=np.int64)
    for ue in ues:
        i = math.floor((ue.position[0] - region.x_min) / cell_size)
        j = math.floor((ue.position[1] - region.y_min) / cell_size)
        counts[min(max(i, 0), nx - 1), min(max(j, 0), ny - 1)] += 1
    return CrowdField((region.x_min, region.y_min), cell_size, counts)


def assign_demands(ues: Sequence[UE], levels: Sequence[DemandLevel],
                   seed: int) -> list[UE]:
    check_levels(levels)
    rng = np.random.default_rng(seed)
    cum = np.cumsum([lv.fraction for lv in levels])
    cum /= cum[-1]
    out = []
    for ue in ues:
        k = int(np.searchsorted(cum, rng.random(), side="right"))
        # side="right" skips zero-width (fraction 0) levels
        out.append(replace(ue, demand=levels[min(k, len(levels) - 1)].id))
    return out


def ues_to_records(ues: Sequence[UE]) -> list[dict]:
    return [{"id": u.id, "x": u.position[0], "y": u.position[1], "demand": u.demand}
            for u in ues]
