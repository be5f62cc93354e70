"""UE trajectories: file formats, synthetic generators and the RMSE metric.

Native trajectory format (UTF-8 text)::

    t_s,x_m,y_m
    0,10.0,5.0
    1,11.0,5.5

    0,300.0,40.0
    ...

A header line opens the file, one record per line follows, and a blank line
separates consecutive trajectories.  Times must strictly increase inside a
trajectory.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import DomainError, ParseError

HEADER = ("t_s", "x_m", "y_m")
EARTH_RADIUS = 6371008.8  # m, mean radius
GEOLIFE_EPOCH = datetime(1899, 12, 30)


@dataclass(frozen=True)
class Trajectory:
    points: np.ndarray  # shape (n, 3): t, x, y

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "points", pts)
        if len(pts) > 1 and not np.all(np.diff(pts[:, 0]) > 0):
            raise DomainError("trajectory times must be strictly increasing")

    def __len__(self):
        return len(self.points)

    @property
    def t(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def xy(self) -> np.ndarray:
        return self.points[:, 1:]

    @classmethod
    def from_xy(cls, xy, dt: float = 1.0, t0: float = 0.0) -> "Trajectory":
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        t = t0 + dt * np.arange(len(xy))
        return cls(np.column_stack([t, xy]))

    def head(self, n: int) -> "Trajectory":
        return Trajectory(self.points[:n])


@dataclass(frozen=True)
class RmseReport:
    n: int
    value: float


def rmse(truth, pred) -> RmseReport:
    """Root mean square error.

    1-D inputs are compared element-wise.  Inputs of shape ``(n, 2)`` are
    treated as points and the Euclidean distance per point is the error term.
    """
    a = np.asarray(truth, dtype=float)
    b = np.asarray(pred, dtype=float)
    if a.shape != b.shape:
        raise DomainError(f"rmse: shape mismatch {a.shape} vs {b.shape}")
    if a.size == 0:
        raise DomainError("rmse of zero samples")
    if a.ndim == 2:
        err2 = np.sum((a - b) ** 2, axis=1)
    elif a.ndim == 1:
        err2 = (a - b) ** 2
    else:
        raise DomainError("rmse expects 1-D values or (n, 2) points")
    return RmseReport(len(err2), float(math.sqrt(np.mean(err2))))


def parse_trajectory_file(stream: TextIO | str) -> list[Trajectory]:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    trajectories: list[Trajectory] = []
    block: list[tuple[float, float, float]] = []

    def flush():
        if block:
            trajectories.append(Trajectory(np.array(block)))
            block.clear()

    seen_header = False
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            flush()
            continue
        fields = [f.strip() for f in line.split(",")]
        if tuple(f.lower() for f in fields) == HEADER:
            if block:
                raise ParseError("header inside a trajectory block", lineno)
            seen_header = True
            continue
        if not seen_header:
            raise ParseError(f"expected header {','.join(HEADER)}", lineno)
        if len(fields) != 3:
            raise ParseError(f"expected 3 fields, got {len(fields)}", lineno)
        try:
            t, x, y = (float(f) for f in fields)
        except ValueError:
            raise ParseError(f"malformed number in {line!r}", lineno) from None
        if not all(math.isfinite(v) for v in (t, x, y)):
            raise ParseError(f"non-finite value in {line!r}", lineno)
        if block and not t > block[-1][0]:
            raise ParseError(f"time {t} does not increase (previous {block[-1][0]})", lineno)
        block.append((t, x, y))
    flush()
    return trajectories


def format_trajectories(trajectories: Iterable[Trajectory]) -> str:
    out = [",".join(HEADER)]
    for k, tr in enumerate(trajectories):
        if k:
            out.append("")
        out.extend(f"{t!r},{x!r},{y!r}" for t, x, y in tr.points.tolist())
    return "\n".join(out) + "\n"


def parse_geolife_plt(stream: TextIO | str, origin: tuple[float, float] | None = None,
                      header_lines: int = 6) -> Trajectory:
    """Convert a GeoLife ``.plt`` log into a local metric trajectory.

    Records are ``lat,lon,0,altitude_ft,days,date,time``; ``days`` counts
    days since 1899-12-30.  Positions are projected equirectangularly around
    ``origin`` (defaults to the first fix).  Repeated timestamps are dropped.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    rows = []
    for lineno, raw in enumerate(stream, start=1):
        if lineno <= header_lines or not raw.strip():
            continue
        fields = raw.strip().split(",")
        if len(fields) != 7:
            raise ParseError(f"GeoLife record needs 7 fields, got {len(fields)}", lineno)
        try:
            lat, lon, days = float(fields[0]), float(fields[1]), float(fields[4])
        except ValueError:
            raise ParseError(f"malformed GeoLife record {raw.strip()!r}", lineno) from None
        rows.append((days * 86400.0, lat, lon))
    if not rows:
        return Trajectory(np.zeros((0, 3)))
    lat0, lon0 = origin if origin is not None else (rows[0][1], rows[0][2])
    t0 = rows[0][0]
    coslat = math.cos(math.radians(lat0))
    pts = []
    for t, lat, lon in rows:
        if pts and not (t - t0) > pts[-1][0]:
            continue
        x = EARTH_RADIUS * math.radians(lon - lon0) * coslat
        y = EARTH_RADIUS * math.radians(lat - lat0)
        pts.append((t - t0, x, y))
    return Trajectory(np.array(pts))


def geolife_days(when: datetime) -> float:
    """GeoLife's fractional day count for a timestamp (for building records)."""
    return (when - GEOLIFE_EPOCH) / timedelta(days=1)


def sine_trajectory(steps: int, rng: np.random.Generator, dt: float = 1.0) -> Trajectory:
    """Constant along-track speed with a sinusoidal cross-track sway."""
    speed = rng.uniform(0.8, 1.6)
    amp = rng.uniform(5.0, 20.0)
    period = rng.uniform(40.0, 90.0)
    heading = rng.uniform(0, 2 * np.pi)
    phase = rng.uniform(0, 2 * np.pi)
    t = dt * np.arange(steps)
    along = speed * t
    across = amp * np.sin(2 * np.pi * t / period + phase)
    c, s = math.cos(heading), math.sin(heading)
    x0, y0 = rng.uniform(0, 1000, 2)
    xy = np.column_stack([x0 + c * along - s * across, y0 + s * along + c * across])
    return Trajectory.from_xy(xy, dt)


def random_waypoint_trajectory(steps: int, rng: np.random.Generator, dt: float = 1.0,
                               area: float = 1000.0, turn_rate: float = 0.15) -> Trajectory:
    """Random-waypoint walk with bounded turn rate so headings change smoothly."""
    pos = rng.uniform(0, area, 2)
    speed = rng.uniform(0.8, 1.6)
    target = rng.uniform(0, area, 2)
    heading = math.atan2(target[1] - pos[1], target[0] - pos[0])
    out = [pos.copy()]
    for _ in range(steps - 1):
        if np.hypot(*(target - pos)) < 3 * speed * dt:
            target = rng.uniform(0, area, 2)
            speed = rng.uniform(0.8, 1.6)
        want = math.atan2(target[1] - pos[1], target[0] - pos[0])
        turn = (want - heading + math.pi) % (2 * math.pi) - math.pi
        heading += max(-turn_rate, min(turn_rate, turn))
        pos = pos + speed * dt * np.array([math.cos(heading), math.sin(heading)])
        out.append(pos.copy())
    return Trajectory.from_xy(np.array(out), dt)


def synthetic_trajectories(n: int, steps: int, seed: int) -> list[Trajectory]:
    """Alternating sine-sway and random-waypoint trajectories."""
    rng = np.random.default_rng(seed)
    return [sine_trajectory(steps, rng) if k % 2 == 0 else random_waypoint_trajectory(steps, rng)
            for k in range(n)]


def persistence_forecast(history: Trajectory, horizon: int) -> np.ndarray:
    """Repeat the last observed position ``horizon`` times."""
    return np.repeat(history.xy[-1:], horizon, axis=0)


def forecast_error(truth: Sequence[np.ndarray], pred: Sequence[np.ndarray]) -> RmseReport:
    """Pooled RMSE over several forecast windows."""
    return rmse(np.vstack(truth), np.vstack(pred))
