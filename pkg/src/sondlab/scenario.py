"""JSON scenario files.

One object per file with a ``kind`` of ``td-benchmark``, ``adrc``, ``bode`` or
``saturated-check`` and one section per parameter record. Sections override
the built-in presets field by field; unknown keys are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from .adrc import NOMINAL_INLSEF, NOMINAL_MOTOR, NOMINAL_SMESO, IadrcConfig, InlsefParams, MotorParams, SmesoParams
from .differentiators import PRESETS, SOND_ADRC, SOND_CASE1, SondParams, default_params
from .signals import CASES, DisturbanceSchedule

KINDS = ("td-benchmark", "adrc", "bode", "saturated-check")


class ConfigError(ValueError):
    pass


def _expect_mapping(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{where}: expected an object, got {type(value).__name__}")
    return value


def _check_keys(data: dict, allowed, where: str) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {unknown}; allowed: {sorted(allowed)}")


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _record(cls, data, base, where: str):
    data = _expect_mapping(data, where)
    for k, v in data.items():
        _number(v, f"{where}.{k}")
    try:
        return cls.from_dict(data, base=base)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def load_json(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return _expect_mapping(data, str(path))


def default_adrc_path():
    return resources.files("sondlab") / "data" / "pmdc-paper.json"


def _integrator(data, defaults: dict, where: str = "integrator") -> dict:
    data = _expect_mapping(data, where)
    _check_keys(data, ("t0", "tf", "h"), where)
    out = dict(defaults)
    out.update({k: _number(v, f"{where}.{k}") for k, v in data.items()})
    if not out["h"] > 0:
        raise ConfigError(f"{where}.h: must be > 0")
    if not out["tf"] > out["t0"]:
        raise ConfigError(f"{where}.tf: must exceed t0")
    return out


def _kind(data: dict, expected: str, where: str) -> None:
    kind = data.get("kind", expected)
    if kind not in KINDS:
        raise ConfigError(f"{where}.kind: unknown scenario kind {kind!r}; expected one of {KINDS}")
    if kind != expected:
        raise ConfigError(f"{where}.kind: expected {expected!r}, got {kind!r}")


def adrc_config_from_dict(data: dict, where: str = "config") -> IadrcConfig:
    data = _expect_mapping(data, where)
    _check_keys(
        data, ("kind", "motor", "smeso", "inlsef", "sond", "reference", "disturbance", "integrator"), where
    )
    _kind(data, "adrc", where)
    motor = _record(MotorParams, data.get("motor", {}), NOMINAL_MOTOR, f"{where}.motor")
    smeso_data = dict(_expect_mapping(data.get("smeso", {}), f"{where}.smeso"))
    smeso_data.setdefault("b0", motor.b0)
    smeso = _record(SmesoParams, smeso_data, NOMINAL_SMESO, f"{where}.smeso")
    inlsef = _record(InlsefParams, data.get("inlsef", {}), NOMINAL_INLSEF, f"{where}.inlsef")
    sond = _record(SondParams, data.get("sond", {}), SOND_ADRC, f"{where}.sond")

    ref = _expect_mapping(data.get("reference", {}), f"{where}.reference")
    _check_keys(ref, ("value",), f"{where}.reference")
    reference = _number(ref.get("value", 1.0), f"{where}.reference.value")

    dist = _expect_mapping(data.get("disturbance", {"events": [{"time": 5.0, "torque": 2.0}]}),
                           f"{where}.disturbance")
    _check_keys(dist, ("events",), f"{where}.disturbance")
    events_raw = dist.get("events", [])
    if not isinstance(events_raw, list):
        raise ConfigError(f"{where}.disturbance.events: expected a list")
    events = []
    for i, ev in enumerate(events_raw):
        w = f"{where}.disturbance.events[{i}]"
        ev = _expect_mapping(ev, w)
        _check_keys(ev, ("time", "torque"), w)
        if set(ev) != {"time", "torque"}:
            raise ConfigError(f"{w}: needs both 'time' and 'torque'")
        events.append((_number(ev["time"], f"{w}.time"), _number(ev["torque"], f"{w}.torque")))
    try:
        schedule = DisturbanceSchedule(tuple(events))
    except ValueError as exc:
        raise ConfigError(f"{where}.disturbance.events: {exc}") from None

    integ = _integrator(data.get("integrator", {}), {"t0": 0.0, "tf": 10.0, "h": 0.002}, f"{where}.integrator")
    return IadrcConfig(
        motor=motor, smeso=smeso, inlsef=inlsef, sond=sond, disturbance=schedule,
        reference=reference, t0=integ["t0"], tf=integ["tf"], h=integ["h"],
    )


def load_adrc_config(path=None) -> IadrcConfig:
    if path is None:
        with resources.as_file(default_adrc_path()) as p:
            return adrc_config_from_dict(load_json(p), str(p.name))
    return adrc_config_from_dict(load_json(path), str(path))


@dataclass
class TdScenario:
    case: str = "case1"
    models: list = field(default_factory=lambda: ["sond"])
    params: dict = field(default_factory=dict)
    t0: float = 0.0
    tf: float = 2.0
    h: float = 0.002
    noise_phase: float = 0.0


def td_scenario_from_dict(data: dict, where: str = "config") -> TdScenario:
    data = _expect_mapping(data, where)
    _check_keys(data, ("kind", "case", "models", "params", "integrator", "noise_phase"), where)
    _kind(data, "td-benchmark", where)
    sc = TdScenario()
    if "case" in data:
        if data["case"] not in CASES:
            raise ConfigError(f"{where}.case: unknown case {data['case']!r}; expected one of {sorted(CASES)}")
        sc.case = data["case"]
    if "models" in data:
        if not isinstance(data["models"], list) or not all(isinstance(m, str) for m in data["models"]):
            raise ConfigError(f"{where}.models: expected a list of model labels")
        sc.models = list(data["models"])
    params = _expect_mapping(data.get("params", {}), f"{where}.params")
    for label, section in params.items():
        try:
            base = default_params(label)
        except KeyError:
            raise ConfigError(f"{where}.params: unknown model {label!r}") from None
        sc.params[label] = _record(type(base), section, base, f"{where}.params.{label}")
    integ = _integrator(data.get("integrator", {}), {"t0": 0.0, "tf": 2.0, "h": 0.002}, f"{where}.integrator")
    sc.t0, sc.tf, sc.h = integ["t0"], integ["tf"], integ["h"]
    if "noise_phase" in data:
        sc.noise_phase = _number(data["noise_phase"], f"{where}.noise_phase")
    return sc


@dataclass
class BodeScenario:
    sond: SondParams = SOND_CASE1
    omega_min: Optional[float] = None
    omega_max: Optional[float] = None
    points_per_decade: int = 20


def bode_scenario_from_dict(data: dict, where: str = "config") -> BodeScenario:
    data = _expect_mapping(data, where)
    _check_keys(data, ("kind", "preset", "sond", "omega_min", "omega_max", "points_per_decade"), where)
    _kind(data, "bode", where)
    base = SOND_CASE1
    if "preset" in data:
        base = PRESETS.get(data["preset"])
        if not isinstance(base, SondParams):
            raise ConfigError(f"{where}.preset: {data['preset']!r} is not a SOND preset")
    sc = BodeScenario(sond=_record(SondParams, data.get("sond", {}), base, f"{where}.sond"))
    for key in ("omega_min", "omega_max"):
        if key in data:
            setattr(sc, key, _number(data[key], f"{where}.{key}"))
    if "points_per_decade" in data:
        ppd = data["points_per_decade"]
        if isinstance(ppd, bool) or not isinstance(ppd, int) or ppd < 1:
            raise ConfigError(f"{where}.points_per_decade: expected a positive integer")
        sc.points_per_decade = ppd
    return sc


@dataclass
class SaturatedScenario:
    rho: float = SOND_CASE1.rho
    initial_states: list = field(default_factory=lambda: [(0.0, 0.0), (5.0, -3.0), (-2.0, 10.0)])
    tf: float = 0.5
    h: float = 1e-5


def saturated_scenario_from_dict(data: dict, where: str = "config") -> SaturatedScenario:
    data = _expect_mapping(data, where)
    _check_keys(data, ("kind", "rho", "initial_states", "tf", "h"), where)
    _kind(data, "saturated-check", where)
    sc = SaturatedScenario()
    for key in ("rho", "tf", "h"):
        if key in data:
            value = _number(data[key], f"{where}.{key}")
            if not value > 0:
                raise ConfigError(f"{where}.{key}: must be > 0")
            setattr(sc, key, value)
    if "initial_states" in data:
        states = data["initial_states"]
        if not isinstance(states, list) or not all(isinstance(s, list) and len(s) == 2 for s in states):
            raise ConfigError(f"{where}.initial_states: expected a list of [x1, x2] pairs")
        sc.initial_states = [(_number(a, where), _number(b, where)) for a, b in states]
    return sc


def scenario_kind(data: dict) -> str:
    kind = data.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"config.kind: expected one of {KINDS}, got {kind!r}")
    return kind
