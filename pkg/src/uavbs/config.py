"""Run configuration: a line-oriented ``section.key = value`` format.

Example::

    # comments start with '#'
    seed = 7
    crowd.n_ues = 200
    crowd.hotspot = 400,450,80,0.5      # cx, cy, sigma, weight (repeatable)
    crowd.hotspot = 650,600,60,0.5
    demands.level = 1,1e6,0.5           # id, min_rate_bps, fraction (repeatable)
    demands.level = 2,4e6,0.5
    environment.preset = urban
    radio.pl_threshold_db = 100

Every key has a documented default (see ``SCHEMA``); unknown keys and
repeated scalar keys are errors.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Callable

from .altitude import AltitudeSearchConfig
from .channel import AtgEnvironment, RadioConfig, preset
from .errors import ConfigError
from .esn import EsnConfig
from .learning import LearningConfig, SampleGeometry
from .placement import Policy
from .scenario import DemandLevel, HotSpot, Region, check_hotspots, check_levels

DEFAULT_HOTSPOTS = (
    HotSpot((400.0, 450.0), 80.0, 0.5),
    HotSpot((650.0, 600.0), 60.0, 0.3),
    HotSpot((300.0, 700.0), 100.0, 0.2),
)
DEFAULT_LEVELS = (
    DemandLevel(1, 1e6, 0.5),
    DemandLevel(2, 2e6, 0.3),
    DemandLevel(3, 4e6, 0.2),
)


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise ValueError("must be >= 0")
    return v


def _policies(text: str) -> tuple[Policy, ...]:
    return tuple(Policy.parse(p) for p in text.split(",") if p.strip())


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _hotspot(text: str) -> HotSpot:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 4:
        raise ValueError("expected cx,cy,sigma,weight")
    cx, cy, sigma, weight = parts
    return HotSpot((cx, cy), sigma, weight)


def _level(text: str) -> DemandLevel:
    parts = [v.strip() for v in text.split(",")]
    if len(parts) != 3:
        raise ValueError("expected id,min_rate_bps,fraction")
    return DemandLevel(int(parts[0]), float(parts[1]), float(parts[2]))


def _sweep_variable(text: str) -> str:
    if text not in ("n_ues", "altitude"):
        raise ValueError("must be n_ues or altitude")
    return text


# key -> (parser, default); None default means "derived elsewhere"
SCHEMA: dict[str, tuple[Callable[[str], Any], Any]] = {
    "run.seed": (int, 0),
    "run.out": (str, None),
    "region.x_min": (float, 0.0),
    "region.x_max": (float, 1000.0),
    "region.y_min": (float, 0.0),
    "region.y_max": (float, 1000.0),
    "radio.carrier_hz": (float, 2e9),
    "radio.tx_power_dbm": (float, 30.0),
    "radio.noise_dbm": (float, -94.0),
    "radio.bandwidth_hz": (float, 20e6),
    "radio.pl_threshold_db": (float, 100.0),
    "radio.backhaul_cap_bps": (float, 950e6),
    "radio.backhaul_rtt_budget_ms": (float, 5.0),
    "environment.preset": (str, "urban"),
    "environment.a": (float, None),
    "environment.b": (float, None),
    "environment.eta_los_db": (float, None),
    "environment.eta_nlos_db": (float, None),
    "crowd.n_ues": (_positive_int, 100),
    "crowd.seed": (int, None),
    "crowd.drift_sigma": (float, 1.0),
    "uav.h_min": (float, 10.0),
    "uav.h_max": (float, 1000.0),
    "uav.hover_endurance_s": (float, 1800.0),
    "uav.coarse_grid": (int, 64),
    "uav.refine_tol": (float, 0.1),
    "mission.epoch_s": (float, 60.0),
    "mission.policy": (Policy.parse, Policy.ON_DEMAND),
    "learning.outlier_z": (float, 4.0),
    "learning.k_bins": (int, 30),
    "learning.min_samples": (int, 30),
    "learning.shadowing_sigma_db": (float, 3.0),
    "learning.n_train": (_positive_int, 10000),
    "learning.n_test": (_positive_int, 10000),
    "learning.los_offset_db": (float, 0.0),
    "learning.nlos_offset_db": (float, 6.0),
    "learning.h_min": (float, 50.0),
    "learning.h_max": (float, 300.0),
    "learning.r_min": (float, 10.0),
    "learning.r_max": (float, 1500.0),
    "esn.reservoir_size": (int, 100),
    "esn.spectral_radius": (float, 0.9),
    "esn.input_scale": (float, 0.5),
    "esn.leak": (float, 0.5),
    "esn.ridge": (float, 0.1),
    "esn.washout": (int, 20),
    "esn.connectivity": (float, 0.1),
    "esn.horizon": (_positive_int, 10),
    "esn.history": (_positive_int, 100),
    "esn.n_train": (_positive_int, 20),
    "esn.n_test": (_positive_int, 10),
    "esn.steps": (_positive_int, 300),
    "sweep.variable": (_sweep_variable, "n_ues"),
    "sweep.values": (_floats, (50.0, 100.0, 200.0, 400.0, 800.0)),
    "sweep.repetitions": (int, 5),
    "sweep.policies": (_policies, (Policy.ON_DEMAND, Policy.MAX_COVERAGE)),
}
LIST_KEYS: dict[str, Callable[[str], Any]] = {
    "crowd.hotspot": _hotspot,
    "demands.level": _level,
}
ALIASES = {"seed": "run.seed", "out": "run.out"}


@dataclass(frozen=True)
class CrowdConfig:
    n_ues: int = 100
    seed: int | None = None  # None: follow the run seed
    hotspots: tuple[HotSpot, ...] = DEFAULT_HOTSPOTS
    drift_sigma: float = 1.0  # m / sqrt(s)


@dataclass(frozen=True)
class UavConfig:
    search: AltitudeSearchConfig = AltitudeSearchConfig()
    hover_endurance_s: float = 1800.0


@dataclass(frozen=True)
class MissionConfig:
    epoch_s: float = 60.0
    policy: Policy = Policy.ON_DEMAND


@dataclass(frozen=True)
class LearningSection:
    cfg: LearningConfig = LearningConfig()
    n_train: int = 10000
    n_test: int = 10000
    los_offset_db: float = 0.0
    nlos_offset_db: float = 6.0
    geometry: SampleGeometry = SampleGeometry()


@dataclass(frozen=True)
class EsnSection:
    cfg: EsnConfig = EsnConfig()
    horizon: int = 10
    history: int = 100
    n_train: int = 20
    n_test: int = 10
    steps: int = 300


@dataclass(frozen=True)
class SweepSpec:
    variable: str = "n_ues"
    values: tuple[float, ...] = (50.0, 100.0, 200.0, 400.0, 800.0)
    repetitions: int = 5
    policies: tuple[Policy, ...] = (Policy.ON_DEMAND, Policy.MAX_COVERAGE)

    def __post_init__(self):
        if not self.values:
            raise ConfigError("sweep needs at least one value", key="sweep.values")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1", key="sweep.repetitions")
        if not self.policies:
            raise ConfigError("sweep needs at least one policy", key="sweep.policies")


@dataclass(frozen=True)
class RunConfig:
    region: Region = Region(0.0, 1000.0, 0.0, 1000.0)
    radio: RadioConfig = RadioConfig()
    environment: AtgEnvironment = preset("urban")
    levels: tuple[DemandLevel, ...] = DEFAULT_LEVELS
    crowd: CrowdConfig = CrowdConfig()
    uav: UavConfig = UavConfig()
    mission: MissionConfig = MissionConfig()
    learning: LearningSection = LearningSection()
    esn: EsnSection = EsnSection()
    sweep: SweepSpec = SweepSpec()
    seed: int = 0
    output_dir: str | None = None

    @property
    def crowd_seed(self) -> int:
        return self.seed if self.crowd.seed is None else self.crowd.seed

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=seed)

    def echo(self) -> dict:
        """Plain-data view of the configuration (stable key order)."""
        env = self.environment
        r = self.radio
        s = self.uav.search
        lc = self.learning
        ec = self.esn.cfg
        return {
            "seed": self.seed,
            "region": {"x_min": self.region.x_min, "x_max": self.region.x_max,
                       "y_min": self.region.y_min, "y_max": self.region.y_max},
            "radio": {"carrier_hz": r.carrier, "tx_power_dbm": r.tx_power,
                      "noise_dbm": r.noise_power, "bandwidth_hz": r.bandwidth,
                      "pl_threshold_db": r.pl_threshold, "backhaul_cap_bps": r.backhaul_cap,
                      "backhaul_rtt_budget_ms": r.backhaul_rtt_budget},
            "environment": {"name": env.name, "a": env.a, "b": env.b,
                            "eta_los_db": env.eta_los, "eta_nlos_db": env.eta_nlos},
            "demands": [{"id": lv.id, "min_rate_bps": lv.min_rate, "fraction": lv.fraction}
                        for lv in self.levels],
            "crowd": {"n_ues": self.crowd.n_ues, "seed": self.crowd_seed,
                      "drift_sigma": self.crowd.drift_sigma,
                      "hotspots": [{"cx": h.center[0], "cy": h.center[1], "sigma": h.sigma,
                                    "weight": h.weight} for h in self.crowd.hotspots]},
            "uav": {"h_min": s.h_min, "h_max": s.h_max, "coarse_grid": s.coarse_grid,
                    "refine_tol": s.refine_tol,
                    "hover_endurance_s": self.uav.hover_endurance_s},
            "mission": {"epoch_s": self.mission.epoch_s, "policy": self.mission.policy.value},
            "learning": {"outlier_z": lc.cfg.outlier_z, "k_bins": lc.cfg.k_bins,
                         "min_samples": lc.cfg.min_samples,
                         "shadowing_sigma_db": lc.cfg.shadowing_sigma,
                         "n_train": lc.n_train, "n_test": lc.n_test,
                         "los_offset_db": lc.los_offset_db, "nlos_offset_db": lc.nlos_offset_db,
                         "h_range": list(lc.geometry.h_range),
                         "r_range": list(lc.geometry.r_range)},
            "esn": {"reservoir_size": ec.reservoir_size, "spectral_radius": ec.spectral_radius,
                    "input_scale": ec.input_scale, "leak": ec.leak, "ridge": ec.ridge,
                    "washout": ec.washout, "connectivity": ec.connectivity,
                    "horizon": self.esn.horizon, "history": self.esn.history,
                    "n_train": self.esn.n_train, "n_test": self.esn.n_test,
                    "steps": self.esn.steps},
            "sweep": {"variable": self.sweep.variable, "values": list(self.sweep.values),
                      "repetitions": self.sweep.repetitions,
                      "policies": [p.value for p in self.sweep.policies]},
        }


@dataclass
class _Entry:
    value: Any
    line: int


def _tokenize(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = ALIASES.get(key, key)
        if not key:
            raise ConfigError("empty key", line=lineno)
        yield lineno, key, value


def parse_config(text: str) -> RunConfig:
    scalars: dict[str, _Entry] = {}
    lists: dict[str, list[_Entry]] = {k: [] for k in LIST_KEYS}
    for lineno, key, value in _tokenize(text):
        if key in LIST_KEYS:
            parser = LIST_KEYS[key]
            lists[key].append(_Entry(_convert(parser, value, key, lineno), lineno))
            continue
        if key not in SCHEMA:
            raise ConfigError("unknown key", key=key, line=lineno)
        if key in scalars:
            raise ConfigError(f"duplicate key (lines {scalars[key].line} and {lineno})",
                              key=key, line=lineno)
        scalars[key] = _Entry(_convert(SCHEMA[key][0], value, key, lineno), lineno)
    return _build(scalars, lists)


def _convert(parser, value: str, key: str, line: int):
    try:
        return parser(value)
    except ConfigError as exc:
        raise ConfigError(str(exc), key=key, line=line) from None
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad value {value!r}: {exc}", key=key, line=line) from None


def _build(scalars: dict[str, _Entry], lists: dict[str, list[_Entry]]) -> RunConfig:
    def get(key):
        e = scalars.get(key)
        return SCHEMA[key][1] if e is None else e.value

    def line_of(key):
        e = scalars.get(key)
        return None if e is None else e.line

    def section(prefix, build):
        """Run ``build`` and attach the failing section/key to config errors."""
        try:
            return build()
        except ConfigError as exc:
            if exc.key is not None:
                raise
            keys = [k for k in scalars if k.startswith(prefix)]
            key = _guess_key(str(exc), keys) or prefix.rstrip(".")
            raise ConfigError(str(exc), key=key, line=line_of(key)) from None

    region = section("region.", lambda: Region(get("region.x_min"), get("region.x_max"),
                                               get("region.y_min"), get("region.y_max")))
    radio = section("radio.", lambda: RadioConfig(
        carrier=get("radio.carrier_hz"), tx_power=get("radio.tx_power_dbm"),
        noise_power=get("radio.noise_dbm"), bandwidth=get("radio.bandwidth_hz"),
        pl_threshold=get("radio.pl_threshold_db"), backhaul_cap=get("radio.backhaul_cap_bps"),
        backhaul_rtt_budget=get("radio.backhaul_rtt_budget_ms")))

    def build_env():
        base = preset(get("environment.preset"))
        overrides = {f: get(f"environment.{k}") for f, k in
                     (("a", "a"), ("b", "b"), ("eta_los", "eta_los_db"),
                      ("eta_nlos", "eta_nlos_db"))}
        overrides = {k: v for k, v in overrides.items() if v is not None}
        if not overrides:
            return base
        return AtgEnvironment(**{**{"a": base.a, "b": base.b, "eta_los": base.eta_los,
                                    "eta_nlos": base.eta_nlos}, **overrides},
                              name=f"{base.name}+custom")
    env = section("environment.", build_env)

    levels = tuple(e.value for e in lists["demands.level"]) or DEFAULT_LEVELS
    if lists["demands.level"]:
        first = lists["demands.level"][0].line
        try:
            check_levels(levels)
        except ConfigError as exc:
            raise ConfigError(str(exc), key="demands.level", line=first) from None

    hotspots = tuple(e.value for e in lists["crowd.hotspot"]) or DEFAULT_HOTSPOTS
    if lists["crowd.hotspot"]:
        try:
            check_hotspots(hotspots)
        except ConfigError as exc:
            raise ConfigError(str(exc), key="crowd.hotspot",
                              line=lists["crowd.hotspot"][0].line) from None

    seed = get("run.seed")
    crowd_seed = get("crowd.seed")
    crowd = CrowdConfig(get("crowd.n_ues"), crowd_seed, hotspots, get("crowd.drift_sigma"))

    search = section("uav.", lambda: AltitudeSearchConfig(
        get("uav.h_min"), get("uav.h_max"), get("uav.coarse_grid"), get("uav.refine_tol")))
    endurance = get("uav.hover_endurance_s")
    if not endurance > 0:
        raise ConfigError("must be > 0", key="uav.hover_endurance_s",
                          line=line_of("uav.hover_endurance_s"))
    epoch = get("mission.epoch_s")
    if not epoch > 0:
        raise ConfigError("must be > 0", key="mission.epoch_s", line=line_of("mission.epoch_s"))
    if get("crowd.drift_sigma") < 0:
        raise ConfigError("must be >= 0", key="crowd.drift_sigma",
                          line=line_of("crowd.drift_sigma"))

    lcfg = section("learning.", lambda: LearningConfig(
        get("learning.outlier_z"), get("learning.k_bins"), get("learning.min_samples"),
        get("learning.shadowing_sigma_db")))
    for lo, hi in (("learning.h_min", "learning.h_max"), ("learning.r_min", "learning.r_max")):
        if not 0 <= get(lo) < get(hi):
            raise ConfigError(f"needs 0 <= {lo} < {hi}", key=lo, line=line_of(lo))
    if not get("learning.h_min") > 0:
        raise ConfigError("must be > 0", key="learning.h_min", line=line_of("learning.h_min"))
    learning = LearningSection(
        lcfg, get("learning.n_train"), get("learning.n_test"),
        get("learning.los_offset_db"), get("learning.nlos_offset_db"),
        SampleGeometry((get("learning.h_min"), get("learning.h_max")),
                       (get("learning.r_min"), get("learning.r_max"))))

    ecfg = section("esn.", lambda: EsnConfig(
        get("esn.reservoir_size"), get("esn.spectral_radius"), get("esn.input_scale"),
        get("esn.leak"), get("esn.ridge"), get("esn.washout"), get("esn.connectivity")))
    esn = EsnSection(ecfg, get("esn.horizon"), get("esn.history"), get("esn.n_train"),
                     get("esn.n_test"), get("esn.steps"))
    if esn.history < max(ecfg.washout, 1) or esn.steps < esn.history + esn.horizon:
        raise ConfigError("need washout <= history and history + horizon <= steps",
                          key="esn.history", line=line_of("esn.history"))

    sweep = section("sweep.", lambda: SweepSpec(
        get("sweep.variable"), tuple(get("sweep.values")), get("sweep.repetitions"),
        tuple(get("sweep.policies"))))

    return RunConfig(region=region, radio=radio, environment=env, levels=levels,
                     crowd=crowd, uav=UavConfig(search, endurance),
                     mission=MissionConfig(epoch, get("mission.policy")),
                     learning=learning, esn=esn, sweep=sweep, seed=seed,
                     output_dir=get("run.out"))


_FIELD_TO_KEY = {
    "carrier": "radio.carrier_hz", "bandwidth": "radio.bandwidth_hz",
    "backhaul_cap": "radio.backhaul_cap_bps",
}


def _guess_key(message: str, keys: list[str]) -> str | None:
    """Best-effort mapping from a validation message to the offending key."""
    for name, key in _FIELD_TO_KEY.items():
        if f" {name} " in f" {message} ":
            return key
    for key in sorted(keys, key=len, reverse=True):
        if key.split(".", 1)[1] in message:
            return key
    return None


def load_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
