"""JSON run configuration.

Parsing is strict: unknown keys are rejected so that typos never silently fall back to
defaults. Keys starting with ``_`` are comments and ignored.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from neuroplast.calibration.dataset import Chronology
from neuroplast.calibration.pipeline import CalibrationStages
from neuroplast.denervation import DenervationSchedule
from neuroplast.errors import ConfigError, ParamValidationError, ParseError, UnknownKey, ValidationError
from neuroplast.model import FIXED_DEFAULTS, FREE_PARAMS, PRESETS, ModelParams, validate_params
from neuroplast.solver import DEFAULT_H, DEFAULT_STRIDE, AxonUpdate, SolverOptions

DEFAULT_PRESET = "set1"


@dataclass(frozen=True)
class SweepAxes:
    a1_times: tuple[float, ...] = tuple(float(t) for t in range(5, 75, 5))
    a2_times: tuple[float, ...] = tuple(float(t) for t in range(5, 75, 5))
    obs_times: tuple[float, ...] = tuple(float(t) for t in range(5, 75, 5))


@dataclass(frozen=True)
class CalibrationConfig:
    stages: CalibrationStages = field(default_factory=CalibrationStages)
    chronology: Chronology = field(default_factory=Chronology)
    hypercube: tuple[tuple[str, tuple[float, float]], ...] = ()
    axon_csv: str | None = None
    cell_csv: str | None = None


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    preset: str | None = DEFAULT_PRESET
    h: float = DEFAULT_H
    horizon: float = 70.0
    schedule: DenervationSchedule = field(default_factory=DenervationSchedule)
    kill_axon_state: bool = False
    axon_update: AxonUpdate = AxonUpdate.PER_CAPITA
    stride: int = DEFAULT_STRIDE
    snapshot_times: tuple[float, ...] = ()
    sweep: SweepAxes = field(default_factory=SweepAxes)
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    outputs: tuple[tuple[str, str], ...] = ()

    @property
    def solver_options(self) -> SolverOptions:
        return SolverOptions(h=self.h, axon_update=self.axon_update, kill_axon_state=self.kill_axon_state)

    def output(self, name: str) -> str | None:
        return dict(self.outputs).get(name)


_TOP = {"preset", "params", "grid", "horizon", "schedule", "kill_axon_state", "axon_update",
        "stride", "snapshot_times", "sweep", "calibration", "outputs"}
_OUTPUT_KEYS = {"trajectory", "sweep", "collections_dir", "regime"}


def _check_keys(obj: dict, allowed: set[str], where: str) -> dict:
    if not isinstance(obj, dict):
        raise ValidationError(f"{where} must be an object")
    clean = {k: v for k, v in obj.items() if not k.startswith("_")}
    if "dt" in clean:
        raise ValidationError(f"{where}: 'dt' is derived from the CFL bound and cannot be set")
    unknown = sorted(set(clean) - allowed)
    if unknown:
        raise UnknownKey(f"{where}: unknown key(s) {unknown}")
    return clean


def _number(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"{where} must be a number")
    return float(v)


def _time_or_inf(v, where: str) -> float:
    if v is None:
        return math.inf
    t = _number(v, where)
    if t < 0:
        raise ValidationError(f"{where} must be >= 0")
    return t


def _times(v, where: str) -> tuple[float, ...]:
    if not isinstance(v, list):
        raise ValidationError(f"{where} must be a list of numbers")
    return tuple(_number(x, where) for x in v)


def config_from_dict(raw: dict[str, Any]) -> RunConfig:
    raw = _check_keys(raw, _TOP, "config")
    preset = raw.get("preset", DEFAULT_PRESET)
    if preset is not None and str(preset).lower() not in PRESETS:
        raise ValidationError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    preset = None if preset is None else str(preset).lower()
    params_raw = raw.get("params", {})
    if not isinstance(params_raw, dict):
        raise ValidationError("params must be an object")
    if "dt" in params_raw:
        raise ValidationError("params: 'dt' is derived from the CFL bound and cannot be set")

    grid = _check_keys(raw.get("grid", {}), {"L", "h"}, "grid")
    merged = dict(PRESETS[preset]) if preset else {}
    merged.update(params_raw)
    if "L" in grid:
        merged["L"] = _number(grid["L"], "grid.L")
    try:
        params = validate_params(merged)
    except ParamValidationError as exc:
        raise ValidationError(str(exc), exc.violations) from exc
    h = _number(grid.get("h", DEFAULT_H), "grid.h")

    sched = _check_keys(raw.get("schedule", {}), {"t_a1", "t_a2"}, "schedule")
    schedule = DenervationSchedule(_time_or_inf(sched.get("t_a1"), "schedule.t_a1"),
                                   _time_or_inf(sched.get("t_a2"), "schedule.t_a2"))
    try:
        axon_update = AxonUpdate(raw.get("axon_update", AxonUpdate.PER_CAPITA.value))
    except ValueError:
        raise ValidationError(f"axon_update must be one of {[a.value for a in AxonUpdate]}") from None

    stride = raw.get("stride", DEFAULT_STRIDE)
    if isinstance(stride, bool) or not isinstance(stride, int) or stride < 1:
        raise ValidationError("stride must be a positive integer")
    horizon = _number(raw.get("horizon", params.horizon_T), "horizon")
    if horizon <= 0:
        raise ValidationError("horizon must be positive")

    sw = _check_keys(raw.get("sweep", {}), {"a1_times", "a2_times", "obs_times"}, "sweep")
    default_axes = SweepAxes()
    sweep = SweepAxes(*(_times(sw[k], f"sweep.{k}") if k in sw else getattr(default_axes, k)
                        for k in ("a1_times", "a2_times", "obs_times")))

    calibration = _calibration_from_dict(raw.get("calibration", {}))
    outputs = _check_keys(raw.get("outputs", {}), _OUTPUT_KEYS, "outputs")
    kill = raw.get("kill_axon_state", False)
    if not isinstance(kill, bool):
        raise ValidationError("kill_axon_state must be true or false")
    return RunConfig(
        params=params, preset=preset, h=h, horizon=horizon, schedule=schedule,
        kill_axon_state=kill, axon_update=axon_update, stride=stride,
        snapshot_times=_times(raw.get("snapshot_times", []), "snapshot_times"),
        sweep=sweep, calibration=calibration,
        outputs=tuple(sorted((k, str(v)) for k, v in outputs.items())),
    )


_STAGE_KEYS = set(CalibrationStages.__dataclass_fields__)
_CHRONO_KEYS = set(Chronology.__dataclass_fields__)


def _calibration_from_dict(raw) -> CalibrationConfig:
    raw = _check_keys(raw, {"stages", "chronology", "hypercube", "axon_csv", "cell_csv"}, "calibration")
    st = _check_keys(raw.get("stages", {}), _STAGE_KEYS, "calibration.stages")
    for k in ("n0", "n2", "sobol_offset"):
        if k in st and (isinstance(st[k], bool) or not isinstance(st[k], int)):
            raise ValidationError(f"calibration.stages.{k} must be an integer")
    for k in ("frac1a", "frac2a", "frac1b", "frac2b", "var_floor"):
        if k in st:
            st[k] = _number(st[k], f"calibration.stages.{k}")
    try:
        stages = CalibrationStages(**st)
    except ValueError as exc:
        raise ValidationError(f"calibration.stages: {exc}") from None
    ch = _check_keys(raw.get("chronology", {}), _CHRONO_KEYS, "calibration.chronology")
    try:
        chronology = Chronology(**{k: _number(v, f"calibration.chronology.{k}") for k, v in ch.items()})
    except ValueError as exc:
        raise ValidationError(f"calibration.chronology: {exc}") from None
    cube = _check_keys(raw.get("hypercube", {}), set(FREE_PARAMS), "calibration.hypercube")
    box = []
    for k in FREE_PARAMS:
        if k in cube:
            v = cube[k]
            if not (isinstance(v, list) and len(v) == 2):
                raise ValidationError(f"calibration.hypercube.{k} must be [lo, hi]")
            lo, hi = _number(v[0], k), _number(v[1], k)
            if not lo < hi:
                raise ValidationError(f"calibration.hypercube.{k}: lo must be < hi")
            box.append((k, (lo, hi)))
    paths = {}
    for k in ("axon_csv", "cell_csv"):
        v = raw.get(k)
        if v is not None and not isinstance(v, str):
            raise ValidationError(f"calibration.{k} must be a path string")
        paths[k] = v
    return CalibrationConfig(stages, chronology, tuple(box), **paths)


def parse_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from exc
    return config_from_dict(raw)


def config_to_dict(cfg: RunConfig) -> dict[str, Any]:
    """Inverse of ``config_from_dict`` (parameters are written out in full)."""
    p = cfg.params.to_dict()
    L = p.pop("L")
    if cfg.preset is not None:
        base = validate_params(PRESETS[cfg.preset]).to_dict()
        p = {k: v for k, v in p.items() if v != base[k]}
    def t(v):
        return None if math.isinf(v) else v
    cal = cfg.calibration
    return {
        "preset": cfg.preset,
        "params": p,
        "grid": {"L": L, "h": cfg.h},
        "horizon": cfg.horizon,
        "schedule": {"t_a1": t(cfg.schedule.t_a1), "t_a2": t(cfg.schedule.t_a2)},
        "kill_axon_state": cfg.kill_axon_state,
        "axon_update": cfg.axon_update.value,
        "stride": cfg.stride,
        "snapshot_times": list(cfg.snapshot_times),
        "sweep": {"a1_times": list(cfg.sweep.a1_times), "a2_times": list(cfg.sweep.a2_times),
                  "obs_times": list(cfg.sweep.obs_times)},
        "calibration": {
            "stages": cal.stages.to_dict(),
            "chronology": dict(vars(cal.chronology)),
            "hypercube": {k: list(v) for k, v in cal.hypercube},
            "axon_csv": cal.axon_csv,
            "cell_csv": cal.cell_csv,
        },
        "outputs": dict(cfg.outputs),
    }


def default_config() -> RunConfig:
    return config_from_dict({})


def default_config_text() -> str:
    d = config_to_dict(default_config())
    annotated = {
        "_about": "neuroplast run configuration; keys starting with '_' are comments",
        "_preset": f"one of {sorted(PRESETS)} or null (then params must list all of {list(FREE_PARAMS)})",
        "_params": f"overrides on top of the preset; fixed constants {sorted(FIXED_DEFAULTS)} may be set too",
        "_schedule": "denervation times in days, null = never",
        "_dt": "the time step is derived from the CFL bound and cannot be configured",
        **d,
    }
    return json.dumps(annotated, indent=2) + "\n"
