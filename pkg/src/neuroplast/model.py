"""Model closures for the phenotype-structured cell density and the two axon densities.

Every closure is a pure function of its arguments and accepts numpy arrays for the
phenotype coordinate ``x``.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any

import numpy as np

from neuroplast.errors import ParamValidationError, Violation


class OnsetConvention(str, enum.Enum):
    """Where the progression speed switches on along the phenotype axis.

    ``LITERAL``: onset near ``x = x1_pi - L`` (the closed-form expression taken literally).
    ``MIRRORED``: onset near ``x = -x1_pi``, which puts the switch inside the initial
    cell distribution for the admissible range of ``x1_pi`` and is the convention that
    reproduces the published denervation indicators. Default.
    """

    LITERAL = "literal"
    MIRRORED = "mirrored"


# Canonical order of the calibrated dimensions; collection files use it too.
FREE_PARAMS: tuple[str, ...] = (
    "pi0",
    "x1_pi",
    "eps1_pi",
    "beta",
    "delta",
    "gamma_r",
    "s_r",
    "tau_c",
    "mu1",
    "mu2",
    "r_a1",
    "s_theta",
    "rbar_a2",
    "s_a2",
)

FREE_RANGES: dict[str, tuple[float, float]] = {
    "pi0": (0.1, 10.0),
    "x1_pi": (30.0, 49.0),
    "eps1_pi": (1e-4, 10.0),
    "beta": (1e-4, 1.0),
    "delta": (1e-4, 1.0),
    "gamma_r": (1e-2, 10.0),
    "s_r": (0.2, 10.0),
    "tau_c": (120.0, 300.0),
    "mu1": (-1.0, 1.0),
    "mu2": (1e-4, 1.0),
    "r_a1": (1e-4, 5.0),
    "s_theta": (13.0, 20.0),
    "rbar_a2": (1e-4, 5.0),
    "s_a2": (1e-4, 10.0),
}

FIXED_DEFAULTS: dict[str, float] = {
    "x2_pi": 10.0,
    "eps2_pi": 10.0,
    "a1_eq": 0.1544,
    "a1_0": 0.15445,
    "a2_0": 0.004,
    "qbar0": 100.0,
    "x_init": 40.0,
    "L": 50.0,
    "horizon_T": 70.0,
}


@dataclass(frozen=True)
class ModelParams:
    pi0: float
    x1_pi: float
    eps1_pi: float
    beta: float
    delta: float
    gamma_r: float
    s_r: float
    tau_c: float
    mu1: float
    mu2: float
    r_a1: float
    s_theta: float
    rbar_a2: float
    s_a2: float
    x2_pi: float = FIXED_DEFAULTS["x2_pi"]
    eps2_pi: float = FIXED_DEFAULTS["eps2_pi"]
    a1_eq: float = FIXED_DEFAULTS["a1_eq"]
    a1_0: float = FIXED_DEFAULTS["a1_0"]
    a2_0: float = FIXED_DEFAULTS["a2_0"]
    qbar0: float = FIXED_DEFAULTS["qbar0"]
    x_init: float = FIXED_DEFAULTS["x_init"]
    L: float = FIXED_DEFAULTS["L"]
    horizon_T: float = FIXED_DEFAULTS["horizon_T"]
    # (node, value) pairs, interpolated piecewise-linearly; None means eta == 0
    eta_profile: tuple[tuple[float, float], ...] | None = None
    pi_onset_convention: OnsetConvention = OnsetConvention.MIRRORED

    def replace(self, **changes: Any) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def free_vector(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in FREE_PARAMS], dtype=float)

    @classmethod
    def from_free_vector(cls, vec, base: "ModelParams | None" = None) -> "ModelParams":
        values = {k: float(v) for k, v in zip(FREE_PARAMS, vec)}
        if base is None:
            return cls(**values)
        return dataclasses.replace(base, **values)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, OnsetConvention):
                v = v.value
            elif f.name == "eta_profile" and v is not None:
                v = [list(pair) for pair in v]
            out[f.name] = v
        return out


# Table of published parameter sets (free dimensions only; fixed values are defaults).
PRESETS: dict[str, dict[str, float]] = {
    "set1": dict(pi0=2.005, beta=0.73, delta=0.398, gamma_r=1.50, s_r=2.68, tau_c=172.295,
                 mu1=-0.176, mu2=0.214, r_a1=0.055, rbar_a2=0.241, x1_pi=32.97,
                 eps1_pi=5.357, s_theta=15.131, s_a2=4.151),
    "set2": dict(pi0=4.589, beta=0.504, delta=0.829, gamma_r=1.160, s_r=2.775, tau_c=177.807,
                 mu1=0.609, mu2=0.139, r_a1=0.077, rbar_a2=0.928, x1_pi=34.56,
                 eps1_pi=6.555, s_theta=14.733, s_a2=1.105),
    "set3": dict(pi0=1.795, beta=0.535, delta=0.398, gamma_r=4.537, s_r=6.097, tau_c=150.576,
                 mu1=0.176, mu2=0.678, r_a1=0.032, rbar_a2=0.29, x1_pi=30.0,
                 eps1_pi=4.385, s_theta=17.609, s_a2=6.49),
}


def preset(name: str, **overrides: Any) -> ModelParams:
    key = name.lower().replace(" ", "")
    if key not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return validate_params({**PRESETS[key], **overrides})


# --- closures -------------------------------------------------------------

def pi_profile(x, p: ModelParams):
    """Basal progression speed: a tanh ramp up, a plateau at ``pi0``, a ramp down near ``L``."""
    x = np.asarray(x, dtype=float)
    if p.pi_onset_convention == OnsetConvention.LITERAL:
        onset = np.tanh(p.eps1_pi * (x + p.L - p.x1_pi))
    else:
        onset = np.tanh(p.eps1_pi * (x + p.x1_pi))
    stop = np.tanh(p.eps2_pi * (-x + p.L - p.x2_pi))
    val = p.pi0 * (onset + stop) / 2.0
    return np.maximum(val, 0.0)


def rho(a, a1_eq: float):
    a = np.asarray(a, dtype=float)
    return np.where(a <= a1_eq, 0.0, a - a1_eq)


def proliferation_profile(x, p: ModelParams):
    x = np.asarray(x, dtype=float)
    return 0.5 * p.gamma_r * (1.0 + np.tanh(p.s_r * x))


def allee_threshold(n_ratio, p: ModelParams):
    """Allee threshold of the sympathetic density as a function of N(t)/N(0)."""
    n_ratio = np.asarray(n_ratio, dtype=float)
    return p.a1_eq / 2.0 + 0.5 * np.tanh(p.s_theta * (n_ratio - 1.1)) + 0.5


def sensory_growth_rate(cancer_frac, p: ModelParams):
    return p.rbar_a2 * np.tanh(p.s_a2 * np.asarray(cancer_frac, dtype=float))


def eta_values(x, p: ModelParams):
    x = np.asarray(x, dtype=float)
    if p.eta_profile is None:
        return np.zeros_like(x)
    nodes = np.array([n for n, _ in p.eta_profile], dtype=float)
    vals = np.array([v for _, v in p.eta_profile], dtype=float)
    return np.interp(x, nodes, vals, left=0.0, right=0.0)


def transport_speed(x, a1, a2, cancer_frac, p: ModelParams):
    modulation = 1.0 - p.beta * rho(a1, p.a1_eq) + p.delta * np.asarray(a2, dtype=float)
    return pi_profile(x, p) * modulation + eta_values(x, p) * cancer_frac


def growth_value(x, q, n_total, a1, a2, p: ModelParams):
    factor = 1.0 - n_total / p.tau_c - p.mu1 * a1 + p.mu2 * a2
    return proliferation_profile(x, p) * np.asarray(q, dtype=float) * factor


def initial_density(x, p: ModelParams):
    x = np.asarray(x, dtype=float)
    return p.qbar0 * np.exp(-((x + p.x_init) ** 2) / 4.0) / math.sqrt(4.0 * math.pi)


# --- validation -------------------------------------------------------------

def _as_float(raw: Mapping[str, Any], key: str, violations: list[Violation]):
    try:
        v = float(raw[key])
    except (TypeError, ValueError):
        violations.append(Violation("NotANumber", key, raw[key], message=f"{key} is not a number"))
        return None
    if not math.isfinite(v):
        violations.append(Violation("NotANumber", key, v, message=f"{key} is not finite"))
        return None
    return v


def _parse_eta(raw_eta, violations: list[Violation]):
    if raw_eta is None:
        return None
    try:
        pairs = tuple((float(n), float(v)) for n, v in raw_eta)
    except (TypeError, ValueError):
        violations.append(Violation("BadEtaProfile", "eta_profile", message="eta_profile must be [[x, value], ...]"))
        return None
    nodes = [n for n, _ in pairs]
    if len(pairs) < 2 or any(b <= a for a, b in zip(nodes, nodes[1:])):
        violations.append(Violation("BadEtaProfile", "eta_profile",
                                    message="eta_profile needs >= 2 strictly increasing nodes"))
    if any(v < 0 for _, v in pairs):
        violations.append(Violation("BadEtaProfile", "eta_profile", message="eta_profile must be nonnegative"))
    return pairs


def validate_params(raw: Mapping[str, Any] | ModelParams) -> ModelParams:
    """Build a ``ModelParams`` from a mapping, enforcing the admissible ranges.

    All free dimensions are required. Fixed constants may be overridden; they are
    then only sanity checked. Raises ``ParamValidationError`` carrying every
    violation found, not just the first.
    """
    if isinstance(raw, ModelParams):
        raw = raw.to_dict()
    violations: list[Violation] = []
    known = set(FREE_PARAMS) | set(FIXED_DEFAULTS) | {"eta_profile", "pi_onset_convention"}
    for key in raw:
        if key not in known:
            violations.append(Violation("UnknownField", key, message=f"unknown parameter {key!r}"))

    values: dict[str, Any] = {}
    for key in FREE_PARAMS:
        if key not in raw:
            violations.append(Violation("MissingField", key))
            continue
        v = _as_float(raw, key, violations)
        if v is None:
            continue
        lo, hi = FREE_RANGES[key]
        if not lo <= v <= hi:
            violations.append(Violation("OutOfRange", key, v, (lo, hi)))
        values[key] = v

    for key, default in FIXED_DEFAULTS.items():
        v = _as_float(raw, key, violations) if key in raw else default
        if v is not None:
            values[key] = v

    for key in ("L", "qbar0", "horizon_T", "a1_eq", "a1_0", "a2_0", "eps2_pi"):
        if key in values and values[key] <= 0:
            violations.append(Violation("OutOfRange", key, values[key], (0.0, math.inf)))
    for key in ("a1_0", "a2_0", "a1_eq"):
        if key in values and values[key] >= 1:
            violations.append(Violation("OutOfRange", key, values[key], (0.0, 1.0)))

    if "beta" in values and "a1_eq" in values and values["beta"] * (1.0 - values["a1_eq"]) >= 1.0:
        violations.append(Violation("NonnegativityViolation", "beta", values["beta"],
                                    message="beta*(1 - a1_eq) must be < 1 for a nonnegative speed"))
    if "qbar0" in values and "tau_c" in values and values["qbar0"] > values["tau_c"]:
        violations.append(Violation("OutOfRange", "tau_c", values["tau_c"], (values["qbar0"], math.inf)))

    eta = _parse_eta(raw.get("eta_profile"), violations)
    conv = raw.get("pi_onset_convention", OnsetConvention.MIRRORED)
    try:
        conv = OnsetConvention(conv)
    except ValueError:
        violations.append(Violation("BadConvention", "pi_onset_convention", conv,
                                    message=f"pi_onset_convention must be one of "
                                            f"{[c.value for c in OnsetConvention]}"))
        conv = OnsetConvention.MIRRORED

    if violations:
        raise ParamValidationError(violations)
    return ModelParams(**values, eta_profile=eta, pi_onset_convention=conv)
