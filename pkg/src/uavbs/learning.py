"""Online 3D channel learning from RSS reports.

The pipeline runs in five steps over a batch (a sliding window in practice):

1. collect ``RssSample`` reports (here produced by :func:`generate_samples`),
2. drop outliers per log-distance decile (:func:`preprocess`),
3. split samples into LoS/NLoS by 2-means on excess loss (:func:`identify_states`),
4. fit one log-distance line per state plus LoS frequencies per elevation bin
   (:func:`fit_temporary_model`),
5. predict link quality from the fitted mixture (:func:`predict_link_quality`).
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import (AtgEnvironment, RadioConfig, elevation_angle, fspl,
                      mean_path_loss, p_los, shannon_rate, snr_db, SPEED_OF_LIGHT)
from .errors import ConfigError, DomainError

log = logging.getLogger(__name__)

KMEANS_RESTARTS = 10
KMEANS_ITERS = 100
KMEANS_TOL = 1e-9
N_DECILES = 10
MIN_PREPROCESS = 10
SD_FLOOR = 1e-9  # dB; spread below this is rounding noise, not scatter


class ChannelState(enum.IntEnum):
    LOS = 0
    NLOS = 1


@dataclass(frozen=True)
class RssSample:
    ue_pos: tuple[float, float]
    uav_pos: tuple[float, float, float]
    rss: float  # dBm
    t: float = 0.0

    def __post_init__(self):
        if not self.uav_pos[2] > 0:
            raise DomainError("UAV altitude must be > 0")

    @property
    def ground_range(self) -> float:
        return math.hypot(self.ue_pos[0] - self.uav_pos[0], self.ue_pos[1] - self.uav_pos[1])

    @property
    def distance(self) -> float:
        return math.hypot(self.ground_range, self.uav_pos[2])

    @property
    def elevation(self) -> float:
        return elevation_angle(self.uav_pos[2], self.ground_range)


@dataclass(frozen=True)
class LearningConfig:
    outlier_z: float = 4.0
    k_bins: int = 30
    min_samples: int = 30
    shadowing_sigma: float = 3.0  # dB, sample generator only

    def __post_init__(self):
        if not self.outlier_z > 0:
            raise ConfigError("outlier_z must be > 0")
        if self.k_bins < 3:
            raise ConfigError("k_bins must be >= 3")
        if self.min_samples < 10:
            raise ConfigError("min_samples must be >= 10")


@dataclass(frozen=True)
class Truth:
    """Per-state log-distance law used by the generator: A + 10*alpha*log10(d)."""
    a_los: float
    alpha_los: float
    a_nlos: float
    alpha_nlos: float

    @classmethod
    def from_environment(cls, env: AtgEnvironment, carrier: float,
                         los_offset: float = 0.0, nlos_offset: float = 0.0) -> "Truth":
        # free-space intercept at 1 m, alpha = 2
        a0 = 20 * math.log10(4 * math.pi * carrier / SPEED_OF_LIGHT)
        return cls(a0 + env.eta_los + los_offset, 2.0, a0 + env.eta_nlos + nlos_offset, 2.0)

    def loss(self, d, state):
        d = np.asarray(d, dtype=float)
        los = np.asarray(state) == ChannelState.LOS
        a = np.where(los, self.a_los, self.a_nlos)
        alpha = np.where(los, self.alpha_los, self.alpha_nlos)
        return a + 10 * alpha * np.log10(d)


@dataclass(frozen=True)
class SampleGeometry:
    h_range: tuple[float, float] = (50.0, 300.0)
    r_range: tuple[float, float] = (10.0, 1500.0)


@dataclass
class StateFit:
    intercept: float = float("nan")  # dB at 1 m
    slope: float = float("nan")  # alpha; loss grows 10*alpha dB per decade
    count: int = 0
    valid: bool = False

    def loss(self, d):
        return self.intercept + 10 * self.slope * np.log10(d)


@dataclass
class TemporaryChannelModel:
    los: StateFit
    nlos: StateFit
    bin_edges: np.ndarray  # degrees, k_bins + 1 edges over [0, 90]
    los_counts: np.ndarray
    nlos_counts: np.ndarray
    flags: list[str] = field(default_factory=list)

    @property
    def bin_frequency(self) -> np.ndarray:
        """LoS frequency per elevation bin; NaN where a bin saw no samples."""
        total = self.los_counts + self.nlos_counts
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(total > 0, self.los_counts / np.maximum(total, 1), np.nan)

    def to_dict(self) -> dict:
        return {
            "los": {"intercept_db": self.los.intercept, "alpha": self.los.slope,
                    "count": self.los.count, "valid": self.los.valid},
            "nlos": {"intercept_db": self.nlos.intercept, "alpha": self.nlos.slope,
                     "count": self.nlos.count, "valid": self.nlos.valid},
            "bin_edges_deg": [float(x) for x in self.bin_edges],
            "los_counts": [int(x) for x in self.los_counts],
            "nlos_counts": [int(x) for x in self.nlos_counts],
            "los_frequency": [None if np.isnan(x) else float(x) for x in self.bin_frequency],
            "flags": list(self.flags),
        }


@dataclass
class LinkPrediction:
    path_loss: float  # dB
    rate: float  # bits/s over the full band
    flags: list[str] = field(default_factory=list)

    def __iter__(self):
        yield self.path_loss
        yield self.rate


def generate_samples(env: AtgEnvironment, radio: RadioConfig, truth: Truth, n: int,
                     shadowing_sigma: float, seed: int,
                     geometry: SampleGeometry | None = None,
                     force_state: ChannelState | None = None):
    """Synthetic RSS reports; returns ``(samples, true_states)``.

    Altitude and ground range are uniform over ``geometry``; the state is
    drawn with the environment's LoS probability at the sample's elevation
    unless ``force_state`` pins it.
    """
    geometry = geometry or SampleGeometry()
    if n < 0:
        raise ConfigError("n must be >= 0")
    if n == 0:
        return [], []
    rng = np.random.default_rng(seed)
    h = rng.uniform(*geometry.h_range, n)
    r = rng.uniform(*geometry.r_range, n)
    bearing = rng.uniform(0, 2 * np.pi, n)
    u = rng.random(n)
    shadow = rng.standard_normal(n) * shadowing_sigma
    theta = np.degrees(np.arctan2(h, r))
    if force_state is None:
        states = np.where(u < p_los(theta, env), ChannelState.LOS, ChannelState.NLOS)
    else:
        states = np.full(n, force_state)
    d = np.hypot(h, r)
    rss = radio.tx_power - truth.loss(d, states) - shadow
    samples = [RssSample((float(ri * np.cos(b)), float(ri * np.sin(b))), (0.0, 0.0, float(hi)),
                         float(s), float(k))
               for k, (ri, b, hi, s) in enumerate(zip(r, bearing, h, rss))]
    return samples, [ChannelState(int(s)) for s in states]


def measured_path_loss(samples: Sequence[RssSample], radio: RadioConfig) -> np.ndarray:
    return radio.tx_power - np.array([s.rss for s in samples], dtype=float)


def excess_loss(samples: Sequence[RssSample], radio: RadioConfig) -> np.ndarray:
    d = np.array([s.distance for s in samples], dtype=float)
    return measured_path_loss(samples, radio) - fspl(d, radio.carrier)


def preprocess(samples: Sequence[RssSample], cfg: LearningConfig,
               radio: RadioConfig) -> list[RssSample]:
    """Drop samples whose excess loss is more than ``outlier_z`` standard
    deviations from the mean of their log-distance decile."""
    samples = list(samples)
    if len(samples) < MIN_PREPROCESS:
        if samples:
            log.warning("preprocess: only %d samples, returned unchanged", len(samples))
        return samples
    ex = excess_loss(samples, radio)
    logd = np.log10([s.distance for s in samples])
    edges = np.quantile(logd, np.linspace(0, 1, N_DECILES + 1))
    decile = np.clip(np.searchsorted(edges, logd, side="right") - 1, 0, N_DECILES - 1)
    keep = np.ones(len(samples), dtype=bool)
    for k in range(N_DECILES):
        idx = decile == k
        if idx.sum() < 2:
            continue
        mu, sd = ex[idx].mean(), ex[idx].std()
        if sd > SD_FLOOR:
            keep[idx] = np.abs(ex[idx] - mu) <= cfg.outlier_z * sd
    return [s for s, ok in zip(samples, keep) if ok]


def kmeans_1d(values: np.ndarray, seed: int = 0, restarts: int = KMEANS_RESTARTS,
              iters: int = KMEANS_ITERS, tol: float = KMEANS_TOL):
    """Two-cluster k-means on sorted 1-D ``values``.

    Returns ``(labels, centers, inertia)`` with cluster 0 the lower center.
    Restarts draw their initial centers from a seeded generator; the lowest
    inertia wins and ties go to the earlier restart.
    """
    v = np.asarray(values, dtype=float)
    best = None
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        i, j = rng.choice(len(v), size=2, replace=False)
        c = np.sort([v[i], v[j]])
        for _ in range(iters):
            lab = (np.abs(v - c[1]) < np.abs(v - c[0])).astype(int)
            new = np.array([v[lab == k].mean() if np.any(lab == k) else c[k] for k in (0, 1)])
            shift = np.max(np.abs(new - c))
            c = new
            if shift < tol:
                break
        lab = (np.abs(v - c[1]) < np.abs(v - c[0])).astype(int)
        inertia = float(np.sum((v - c[lab]) ** 2))
        if best is None or inertia < best[2]:
            best = (lab, c, inertia)
    lab, c, inertia = best
    if c[0] > c[1]:
        lab, c = 1 - lab, c[::-1]
    return lab, c, inertia


def identify_states(samples: Sequence[RssSample], radio: RadioConfig,
                    seed: int = 0) -> list[ChannelState]:
    """Label each sample LoS or NLoS by 2-means on its excess loss."""
    if len(samples) < 2:
        raise DomainError("identify_states needs at least 2 samples")
    ex = excess_loss(samples, radio)
    if np.all(ex == ex[0]):
        log.warning("identify_states: all excess losses identical; labelling all LoS")
        return [ChannelState.LOS] * len(samples)
    # cluster the sorted values so labels do not depend on input order
    order = np.argsort(ex, kind="stable")
    lab_sorted, _, _ = kmeans_1d(ex[order], seed=seed)
    labels = np.empty(len(ex), dtype=int)
    labels[order] = lab_sorted
    return [ChannelState.NLOS if k else ChannelState.LOS for k in labels]


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    if sxx == 0:
        return float(ym), float("nan")
    slope = np.sum((x - xm) * (y - ym)) / sxx
    return float(ym - slope * xm), float(slope)


def fit_temporary_model(samples: Sequence[RssSample], labels: Sequence[ChannelState],
                        cfg: LearningConfig, radio: RadioConfig) -> TemporaryChannelModel:
    if len(samples) != len(labels):
        raise DomainError("samples and labels differ in length")
    pl = measured_path_loss(samples, radio) if samples else np.zeros(0)
    x = 10 * np.log10([s.distance for s in samples]) if samples else np.zeros(0)
    lab = np.array([int(s) for s in labels], dtype=int)
    flags = []
    fits = []
    for state in (ChannelState.LOS, ChannelState.NLOS):
        idx = lab == state
        fit = StateFit(count=int(idx.sum()))
        if fit.count >= cfg.min_samples:
            fit.intercept, fit.slope = _ols(x[idx], pl[idx])
            fit.valid = not math.isnan(fit.slope)
        if not fit.valid:
            flags.append(f"{state.name.lower()}-fit-invalid")
        fits.append(fit)

    edges = np.linspace(0.0, 90.0, cfg.k_bins + 1)
    theta = np.array([s.elevation for s in samples], dtype=float)
    b = np.clip(np.searchsorted(edges, theta, side="right") - 1, 0, cfg.k_bins - 1)
    los_counts = np.bincount(b[lab == ChannelState.LOS], minlength=cfg.k_bins)
    nlos_counts = np.bincount(b[lab == ChannelState.NLOS], minlength=cfg.k_bins)
    return TemporaryChannelModel(fits[0], fits[1], edges, los_counts, nlos_counts, flags)


def learned_los_frequency(model: TemporaryChannelModel, theta: float) -> tuple[float, list[str]]:
    k = model.los_counts.size
    b = int(np.clip(np.searchsorted(model.bin_edges, theta, side="right") - 1, 0, k - 1))
    freq = model.bin_frequency
    if not np.isnan(freq[b]):
        return float(freq[b]), []
    filled = np.nonzero(~np.isnan(freq))[0]
    if filled.size == 0:
        return 0.5, ["no-elevation-data"]
    # nearest non-empty bin, lower bin on ties
    nearest = int(filled[np.argmin(np.abs(filled - b))])
    return float(freq[nearest]), ["empty-bin"]


def predict_link_quality(model: TemporaryChannelModel, h: float, r: float,
                         radio: RadioConfig) -> LinkPrediction:
    if not (model.los.valid or model.nlos.valid):
        raise DomainError("model has no valid state fit")
    d = math.hypot(h, r)
    f, flags = learned_los_frequency(model, elevation_angle(h, r))
    if not model.los.valid:
        f, flags = 0.0, flags + ["los-fallback-to-nlos"]
    elif not model.nlos.valid:
        f, flags = 1.0, flags + ["nlos-fallback-to-los"]
    pl_los = float(model.los.loss(d)) if model.los.valid else 0.0
    pl_nlos = float(model.nlos.loss(d)) if model.nlos.valid else 0.0
    pl = f * pl_los + (1 - f) * pl_nlos
    return LinkPrediction(pl, shannon_rate(radio.bandwidth, snr_db(pl, radio)), flags)


def rmse_db(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def filled_frequency(model: TemporaryChannelModel) -> np.ndarray:
    """Bin LoS frequencies with empty bins taken from the nearest filled bin."""
    freq = model.bin_frequency
    filled = np.nonzero(~np.isnan(freq))[0]
    if filled.size == 0:
        return np.full(freq.size, 0.5)
    # argmin picks the first (lower) bin on distance ties
    idx = np.argmin(np.abs(np.arange(freq.size)[:, None] - filled[None, :]), axis=1)
    return freq[filled[idx]]


def expected_path_loss(model: TemporaryChannelModel, h, r) -> np.ndarray:
    """Vectorized form of ``predict_link_quality(...).path_loss`` (no flags)."""
    if not (model.los.valid or model.nlos.valid):
        raise DomainError("model has no valid state fit")
    h = np.asarray(h, dtype=float)
    r = np.asarray(r, dtype=float)
    d = np.hypot(h, r)
    k = model.los_counts.size
    b = np.clip(np.searchsorted(model.bin_edges, elevation_angle(h, r), side="right") - 1,
                0, k - 1)
    f = filled_frequency(model)[b]
    if not model.los.valid:
        return model.nlos.loss(d)
    if not model.nlos.valid:
        return model.los.loss(d)
    return f * model.los.loss(d) + (1 - f) * model.nlos.loss(d)


def evaluation_table(model: TemporaryChannelModel, baseline: AtgEnvironment,
                     heldout: Sequence[RssSample], radio: RadioConfig):
    """Per-sample ``(distance, measured, learned, baseline)`` path losses."""
    if not heldout:
        return []
    measured = measured_path_loss(heldout, radio)
    h = np.array([s.uav_pos[2] for s in heldout], dtype=float)
    r = np.array([s.ground_range for s in heldout], dtype=float)
    learned = np.atleast_1d(expected_path_loss(model, h, r))
    base = np.atleast_1d(mean_path_loss(h, r, baseline, radio.carrier))
    d = np.hypot(h, r)
    return [(float(a), float(b), float(c), float(e))
            for a, b, c, e in zip(d, measured, learned, base)]


def evaluate(model: TemporaryChannelModel, baseline: AtgEnvironment,
             heldout: Sequence[RssSample], radio: RadioConfig) -> tuple[float, float]:
    """RMSE (dB) of the learned model and of the static baseline on held-out data."""
    if not heldout:
        raise DomainError("evaluate needs held-out samples")
    rows = np.array(evaluation_table(model, baseline, heldout, radio))
    return rmse_db(rows[:, 1], rows[:, 2]), rmse_db(rows[:, 1], rows[:, 3])


def learn(train: Sequence[RssSample], cfg: LearningConfig, radio: RadioConfig,
          seed: int = 0) -> TemporaryChannelModel:
    """Steps 2-4 on one batch."""
    clean = preprocess(train, cfg, radio)
    labels = identify_states(clean, radio, seed=seed)
    return fit_temporary_model(clean, labels, cfg, radio)
