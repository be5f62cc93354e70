"""Air-to-ground channel primitives.

Mean path loss is free-space loss plus the LoS/NLoS excess losses weighted by
an elevation-dependent sigmoid LoS probability.  All functions accept scalars
or numpy arrays unless noted otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError

SPEED_OF_LIGHT = 2.99792458e8
RADIUS_CAP = 1e6


@dataclass(frozen=True)
class AtgEnvironment:
    a: float
    b: float
    eta_los: float  # dB
    eta_nlos: float  # dB
    name: str = "custom"

    def __post_init__(self):
        if not self.b > 0:
            raise ConfigError(f"environment b must be > 0, got {self.b}")
        if not self.eta_nlos >= self.eta_los >= 0:
            raise ConfigError("environment requires eta_nlos >= eta_los >= 0")


# Sigmoid fits and excess losses from the ATG literature; configurable inputs,
# never used as ground truth in tests.
PRESETS = {
    "suburban": AtgEnvironment(4.88, 0.43, 0.1, 21.0, "suburban"),
    "urban": AtgEnvironment(9.61, 0.16, 1.0, 20.0, "urban"),
    "dense-urban": AtgEnvironment(12.08, 0.11, 1.6, 23.0, "dense-urban"),
    "high-rise": AtgEnvironment(27.23, 0.08, 2.3, 34.0, "high-rise"),
}


def preset(name: str) -> AtgEnvironment:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown environment preset {name!r}; "
                          f"choose from {sorted(PRESETS)}") from None


@dataclass(frozen=True)
class RadioConfig:
    carrier: float = 2e9  # Hz
    tx_power: float = 30.0  # dBm
    noise_power: float = -94.0  # dBm, kTB at 20 MHz plus 7 dB noise figure
    bandwidth: float = 20e6  # Hz
    pl_threshold: float = 100.0  # dB
    backhaul_cap: float = 950e6  # bits/s
    backhaul_rtt_budget: float = 5.0  # ms

    def __post_init__(self):
        for name in ("carrier", "bandwidth", "backhaul_cap"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"radio {name} must be > 0, got {getattr(self, name)}")


def elevation_angle(h, r):
    """Elevation of the UAV seen from a UE at ground distance ``r``, in degrees."""
    h = np.asarray(h, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(h < 0) or np.any(r < 0):
        raise DomainError("elevation_angle needs h >= 0 and r >= 0")
    if np.any((h == 0) & (r == 0)):
        raise DomainError("elevation angle undefined at h = r = 0")
    out = np.degrees(np.arctan2(h, r))
    return float(out) if out.ndim == 0 else out


def p_los(theta, env: AtgEnvironment):
    theta = np.asarray(theta, dtype=float)
    out = 1.0 / (1.0 + env.a * np.exp(-env.b * (theta - env.a)))
    return float(out) if out.ndim == 0 else out


def fspl(d, carrier: float):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise DomainError("free-space path loss needs d > 0")
    out = 20.0 * np.log10(4.0 * math.pi * d * carrier / SPEED_OF_LIGHT)
    return float(out) if out.ndim == 0 else out


def mean_path_loss(h, r, env: AtgEnvironment, carrier: float):
    """Expected path loss (dB) over the LoS/NLoS state at altitude h, ground range r."""
    theta = elevation_angle(h, r)
    d = np.hypot(h, r)
    p = p_los(theta, env)
    out = fspl(d, carrier) + p * env.eta_los + (1.0 - p) * env.eta_nlos
    return float(out) if np.ndim(out) == 0 else out


def snr_db(pl, radio: RadioConfig):
    out = radio.tx_power - np.asarray(pl, dtype=float) - radio.noise_power
    return float(out) if out.ndim == 0 else out


def spectral_efficiency(snr):
    """log2(1 + SNR) in bits/s/Hz for an SNR given in dB."""
    out = np.log2(1.0 + 10.0 ** (np.asarray(snr, dtype=float) / 10.0))
    return float(out) if out.ndim == 0 else out


def shannon_rate(w, snr):
    if np.any(np.asarray(w) < 0):
        raise DomainError("bandwidth must be >= 0")
    out = np.asarray(w, dtype=float) * spectral_efficiency(snr)
    return float(out) if out.ndim == 0 else out


def coverage_radius(h: float, env: AtgEnvironment, radio: RadioConfig,
                    tol: float = 1e-3) -> float:
    """Largest ground range whose mean path loss stays within ``radio.pl_threshold``.

    Bisection between a feasible and an infeasible range; the upper bracket
    is doubled from 1 m until the loss exceeds the threshold (capped at
    1e6 m).  Returns the feasible end of the final bracket, so the loss at the
    returned radius never exceeds the threshold.  Returns 0 when even the
    point directly below the UAV is out of budget.
    """
    if not h > 0:
        raise DomainError(f"coverage_radius needs h > 0, got {h}")
    thr = radio.pl_threshold

    def loss(r):
        return mean_path_loss(h, r, env, radio.carrier)

    if loss(0.0) > thr:
        return 0.0
    lo, hi = 0.0, 1.0
    while loss(hi) <= thr:
        lo = hi
        if hi >= RADIUS_CAP:
            return RADIUS_CAP
        hi = min(2.0 * hi, RADIUS_CAP)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if loss(mid) <= thr:
            lo = mid
        else:
            hi = mid
    return lo
