"""Leaky-tanh echo state network for one-step-ahead trajectory forecasting.

The network sees normalized position increments.  At step t the input is the
increment that brought the UE to position t (zero at the first point) and the
teacher signal is the next increment.  Forecasting runs the reservoir over a
history, then feeds its own predicted increments back for ``horizon`` steps.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError, NotTrainedError
from .mobility import Trajectory

log = logging.getLogger(__name__)

NILPOTENT_RADIUS = 1e-12
MAX_REDRAWS = 5
STD_FLOOR = 1e-12
DIM = 2


@dataclass(frozen=True)
class EsnConfig:
    reservoir_size: int = 100
    spectral_radius: float = 0.9
    input_scale: float = 0.5
    leak: float = 0.5
    ridge: float = 0.1
    washout: int = 20
    connectivity: float = 0.1

    def __post_init__(self):
        if self.reservoir_size < 10:
            raise ConfigError("reservoir_size must be >= 10")
        if not 0 < self.spectral_radius < 1:
            raise ConfigError("spectral_radius must lie in (0, 1)")
        if not 0 < self.leak <= 1:
            raise ConfigError("leak must lie in (0, 1]")
        if self.ridge < 0:
            raise ConfigError("ridge must be >= 0")
        if self.washout < 0:
            raise ConfigError("washout must be >= 0")
        if not 0 < self.connectivity <= 1:
            raise ConfigError("connectivity must lie in (0, 1]")


@dataclass
class EsnModel:
    w_in: np.ndarray  # (N, 1 + d), bias column first
    w: np.ndarray  # (N, N)
    w_out: np.ndarray  # (d, N + d + 1) over [state; input; 1]
    leak: float
    washout: int
    state: np.ndarray = field(default=None)
    mean: np.ndarray = field(default_factory=lambda: np.zeros(DIM))
    std: np.ndarray = field(default_factory=lambda: np.ones(DIM))
    trained: bool = False
    flags: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.state is None:
            self.state = np.zeros(self.w.shape[0])

    @property
    def size(self) -> int:
        return self.w.shape[0]

    def step(self, state: np.ndarray, u: np.ndarray) -> np.ndarray:
        pre = self.w_in @ np.concatenate(([1.0], u)) + self.w @ state
        return (1.0 - self.leak) * state + self.leak * np.tanh(pre)

    def readout(self, state: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.w_out @ np.concatenate((state, u, [1.0]))


def spectral_radius(w: np.ndarray) -> float:
    if w.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(w))))


def scale_to_spectral_radius(w: np.ndarray, rho: float) -> np.ndarray:
    current = spectral_radius(w)
    if current < NILPOTENT_RADIUS:
        raise ConfigError("cannot rescale a matrix with zero spectral radius")
    return w * (rho / current)


def build_reservoir(cfg: EsnConfig, seed: int) -> EsnModel:
    """Random sparse reservoir scaled to ``cfg.spectral_radius``.

    A draw whose spectral radius is numerically zero (nilpotent) is replaced
    by a draw from ``seed + 1``, and so on, at most ``MAX_REDRAWS`` times.
    """
    n = cfg.reservoir_size
    flags = []
    for attempt in range(MAX_REDRAWS + 1):
        rng = np.random.default_rng(seed + attempt)
        mask = rng.random((n, n)) < cfg.connectivity
        w = np.where(mask, rng.uniform(-1.0, 1.0, (n, n)), 0.0)
        w_in = rng.uniform(-cfg.input_scale, cfg.input_scale, (n, 1 + DIM))
        if spectral_radius(w) >= NILPOTENT_RADIUS:
            break
        flags.append(f"nilpotent-redraw-{attempt}")
        log.warning("reservoir draw %d is nilpotent; redrawing", attempt)
    else:
        raise ConfigError(f"reservoir draws nilpotent {MAX_REDRAWS + 1} times; "
                          "raise connectivity or reservoir_size")
    w = scale_to_spectral_radius(w, cfg.spectral_radius)
    return EsnModel(w_in=w_in, w=w, w_out=np.zeros((DIM, n + DIM + 1)),
                    leak=cfg.leak, washout=cfg.washout, flags=flags)


def increments(tr: Trajectory) -> np.ndarray:
    """Per-point increments, the first being zero; shape (len, 2)."""
    xy = tr.xy
    out = np.zeros_like(xy)
    out[1:] = np.diff(xy, axis=0)
    return out


def collect_states(model: EsnModel, inputs: np.ndarray,
                   state: np.ndarray | None = None) -> np.ndarray:
    """Reservoir states after consuming each input row; shape (len, N)."""
    s = np.zeros(model.size) if state is None else state
    out = np.empty((len(inputs), model.size))
    for k, u in enumerate(inputs):
        s = model.step(s, u)
        out[k] = s
    return out


def design_matrix(model: EsnModel, trajectories: Sequence[Trajectory]):
    """Teacher-forced features ``[state; input; 1]`` and next-increment targets."""
    xs, ys = [], []
    for tr in trajectories:
        if len(tr) <= model.washout + 1:
            raise ConfigError(f"trajectory of length {len(tr)} is too short for "
                              f"washout {model.washout}")
        u = (increments(tr) - model.mean) / model.std
        states = collect_states(model, u[:-1])
        rows = slice(model.washout, len(tr) - 1)
        xs.append(np.hstack([states[rows], u[:-1][rows], np.ones((len(tr) - 1 - model.washout, 1))]))
        ys.append(u[1:][rows])
    return np.vstack(xs), np.vstack(ys)


def ridge_solve(x: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """Solve ``(X^T X + lam I) B = X^T Y`` and return ``B^T``."""
    a = x.T @ x + lam * np.eye(x.shape[1])
    b = x.T @ y
    if lam == 0 and np.linalg.matrix_rank(a) < a.shape[0]:
        raise ConfigError("normal matrix is singular; set a ridge penalty > 0")
    return np.linalg.solve(a, b).T


def train_readout(model: EsnModel, trajectories: Sequence[Trajectory],
                  cfg: EsnConfig) -> EsnModel:
    """Fit the readout by ridge regression; returns a new trained model.

    The increment normalizer (mean/std over all training increments) is
    stored on the returned model.
    """
    if not trajectories:
        raise ConfigError("no training trajectories")
    inc = np.vstack([increments(tr)[1:] for tr in trajectories if len(tr) > 1])
    mean = inc.mean(axis=0)
    std = inc.std(axis=0)
    std = np.where(std < STD_FLOOR, 1.0, std)
    trained = replace(model, mean=mean, std=std, state=np.zeros(model.size), flags=list(model.flags))
    x, y = design_matrix(trained, trajectories)
    trained.w_out = ridge_solve(x, y, cfg.ridge)
    trained.trained = True
    return trained


def predict(model: EsnModel, history: Trajectory, horizon: int) -> np.ndarray:
    """Free-running forecast of the next ``horizon`` positions, shape (horizon, 2)."""
    if not model.trained:
        raise NotTrainedError("train the readout before predicting")
    if horizon < 0:
        raise ConfigError("horizon must be >= 0")
    if len(history) < max(model.washout, 1):
        raise ConfigError(f"history of length {len(history)} is shorter than washout "
                          f"{model.washout}")
    if horizon == 0:
        return np.zeros((0, DIM))
    u = (increments(history) - model.mean) / model.std
    s = collect_states(model, u)[-1]
    last_u = u[-1]
    pos = history.xy[-1].copy()
    out = np.empty((horizon, DIM))
    for k in range(horizon):
        nxt = model.readout(s, last_u)
        pos = pos + nxt * model.std + model.mean
        out[k] = pos
        s = model.step(s, nxt)
        last_u = nxt
    return out


def state_distance_after(model: EsnModel, inputs: np.ndarray, s0: np.ndarray,
                         s1: np.ndarray) -> float:
    """Distance between two reservoir runs driven by the same inputs."""
    a = collect_states(model, inputs, s0)[-1]
    b = collect_states(model, inputs, s1)[-1]
    return float(np.linalg.norm(a - b))
