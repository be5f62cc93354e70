"""Stage 1 of placement: the altitude that maximizes coverage radius."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .channel import AtgEnvironment, RadioConfig, coverage_radius, mean_path_loss
from .errors import ConfigError, DomainError, InfeasibleError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
RADIUS_EQUIVALENCE = 0.2  # m; radii closer than this count as tied


@dataclass(frozen=True)
class AltitudeSearchConfig:
    h_min: float = 10.0
    h_max: float = 1000.0
    coarse_grid: int = 64
    refine_tol: float = 0.1

    def __post_init__(self):
        if not 0 < self.h_min < self.h_max:
            raise ConfigError(f"altitude bounds need 0 < h_min < h_max, got "
                              f"{self.h_min}, {self.h_max}")
        if self.coarse_grid < 8:
            raise ConfigError(f"coarse_grid must be >= 8, got {self.coarse_grid}")
        if not self.refine_tol > 0:
            raise ConfigError("refine_tol must be > 0")

    def grid(self) -> np.ndarray:
        return np.linspace(self.h_min, self.h_max, self.coarse_grid)


def golden_section_max(f: Callable[[float], float], a: float, b: float,
                       tol: float) -> float:
    """Maximizer of a unimodal ``f`` on ``[a, b]`` to within ``tol``."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def coverage_profile(env: AtgEnvironment, radio: RadioConfig,
                     h_values: Sequence[float]) -> list[tuple[float, float]]:
    for h in h_values:
        if not h > 0:
            raise DomainError(f"altitudes must be > 0, got {h}")
    return [(float(h), coverage_radius(float(h), env, radio)) for h in h_values]


def optimal_altitude(env: AtgEnvironment, radio: RadioConfig,
                     search: AltitudeSearchConfig | None = None) -> tuple[float, float]:
    """Return ``(h_star, r_max)`` maximizing coverage radius over the search box.

    A coarse grid picks the best cell, golden-section search refines inside
    the neighbouring cells, and the result is then moved down to the lowest
    altitude whose radius is within ``RADIUS_EQUIVALENCE`` of the maximum.
    """
    search = search or AltitudeSearchConfig()
    grid = search.grid()

    def radius(h):
        return coverage_radius(h, env, radio)

    radii = np.array([radius(h) for h in grid])
    if not np.any(radii > 0):
        raise InfeasibleError("no feasible altitude: coverage radius is 0 on the whole grid")

    k = int(np.argmax(radii))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    h_peak = golden_section_max(radius, lo, hi, search.refine_tol)
    r_peak = radius(h_peak)
    if radii[k] > r_peak:
        h_peak, r_peak = float(grid[k]), float(radii[k])

    # Tie-break towards lower altitude: the first grid point that is already
    # equivalent to the peak bounds the search from above.
    target = r_peak - RADIUS_EQUIVALENCE
    below = np.nonzero((grid <= h_peak) & (radii >= target))[0]
    h_star = h_peak
    if below.size:
        j = int(below[0])
        if j == 0:
            h_star = float(grid[0])
        else:
            a, b = float(grid[j - 1]), float(grid[j])
            while b - a > search.refine_tol:
                mid = 0.5 * (a + b)
                if radius(mid) >= target:
                    b = mid
                else:
                    a = mid
            h_star = b
    return h_star, radius(h_star)


def altitude_for_radius(radius: float, env: AtgEnvironment, radio: RadioConfig,
                        search: AltitudeSearchConfig | None = None) -> float:
    """Altitude minimizing the mean path loss at ground range ``radius``."""
    search = search or AltitudeSearchConfig()
    grid = search.grid()
    losses = np.array([mean_path_loss(h, radius, env, radio.carrier) for h in grid])
    k = int(np.argmin(losses))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    h = golden_section_max(lambda x: -mean_path_loss(x, radius, env, radio.carrier),
                           lo, hi, search.refine_tol)
    if mean_path_loss(h, radius, env, radio.carrier) > losses[k]:
        h = float(grid[k])
    return float(h)


def is_unimodal(values: Sequence[float], plateau_cells: int = 1) -> bool:
    """Rise-then-fall check on a sampled profile.

    Exactly flat steps are ignored.  A reversed run of at most ``plateau_cells``
    steps is tolerated at either end of the grid (e.g. a shallow dip at the
    lowest altitudes); otherwise the steps must form one rising run followed
    by one falling run, each longer than ``plateau_cells``.
    """
    diffs = np.diff(np.asarray(values, dtype=float))
    runs = []  # [sign, length]
    for d in diffs:
        if d == 0:
            continue
        s = 1 if d > 0 else -1
        if runs and runs[-1][0] == s:
            runs[-1][1] += 1
        else:
            runs.append([s, 1])
    if len(runs) > 2 and runs[0][0] == -1 and runs[0][1] <= plateau_cells:
        runs = runs[1:]
    if len(runs) > 2 and runs[-1][0] == 1 and runs[-1][1] <= plateau_cells:
        runs = runs[:-1]
    return ([r[0] for r in runs] == [1, -1]
            and all(r[1] > plateau_cells for r in runs))
