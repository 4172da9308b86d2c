"""In-silico denervation: scheduled knockout of axon coupling and the invasive-potential indicator.

Denervating the sympathetic axons sets ``beta = mu1 = 0`` from ``t_a1`` on; denervating
the sensory axons sets ``delta = mu2 = 0`` from ``t_a2`` on. The axon densities keep
evolving unless ``SolverOptions.kill_axon_state`` freezes them at the knockout value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from neuroplast.model import ModelParams
from neuroplast.parallel import parallel_map
from neuroplast.solver import (
    Discretization,
    SolverOptions,
    Trajectory,
    horizon_steps,
    simulate_branches,
)

INF = math.inf


@dataclass(frozen=True)
class DenervationSchedule:
    t_a1: float = INF
    t_a2: float = INF

    def __post_init__(self):
        for name in ("t_a1", "t_a2"):
            v = getattr(self, name)
            if math.isnan(v) or v < 0:
                raise ValueError(f"{name} must be >= 0 or inf, got {v!r}")

    @classmethod
    def sympathetic(cls, t: float) -> "DenervationSchedule":
        return cls(t_a1=t)

    @classmethod
    def sensory(cls, t: float) -> "DenervationSchedule":
        return cls(t_a2=t)

    @classmethod
    def both(cls, t: float) -> "DenervationSchedule":
        return cls(t_a1=t, t_a2=t)

    @property
    def is_null(self) -> bool:
        return math.isinf(self.t_a1) and math.isinf(self.t_a2)


NO_DENERVATION = DenervationSchedule()


def apply_schedule(p: ModelParams, s: DenervationSchedule | None, t: float) -> ModelParams:
    """Parameters in effect at time ``t``."""
    if s is None:
        return p
    changes = {}
    if t >= s.t_a1:
        changes.update(beta=0.0, mu1=0.0)
    if t >= s.t_a2:
        changes.update(delta=0.0, mu2=0.0)
    return p.replace(**changes) if changes else p


def time_average_percent(p_den: np.ndarray, p_ctrl: np.ndarray, dt: float, T: float) -> float:
    diff = np.trapezoid(p_den, dx=dt) - np.trapezoid(p_ctrl, dx=dt)
    return float(100.0 / T * diff)


def _indicator(control: Trajectory, treated: Trajectory, T: float) -> float:
    n = horizon_steps(T, control.dt) + 1
    return time_average_percent(treated.p[:n], control.p[:n], control.dt, T)


def invasive_potential(p: ModelParams, s: DenervationSchedule, T: float,
                       options: SolverOptions | None = None,
                       disc: Discretization | None = None) -> float:
    """Time-averaged gain of cancer proportion due to denervation, in percent.

    Positive values mean the denervation favours the tumour.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    if s.is_null:
        return 0.0
    control, (treated,) = simulate_branches(p, [s], T, options, disc)
    return _indicator(control, treated, T)


TABLE_COLUMNS: tuple[tuple[str, str, float], ...] = (
    ("A1@28", "sympathetic", 28.0),
    ("A1@50", "sympathetic", 50.0),
    ("A2@28", "sensory", 28.0),
    ("A2@50", "sensory", 50.0),
    ("both@28", "both", 28.0),
    ("both@50", "both", 50.0),
)


def standard_schedules() -> list[DenervationSchedule]:
    return [getattr(DenervationSchedule, kind)(t) for _, kind, t in TABLE_COLUMNS]


def indicator_table(p: ModelParams, T: float = 70.0,
                    options: SolverOptions | None = None) -> dict[str, float]:
    """Indicator for the six standard knockouts (each axon and both, at 28 and 50 days)."""
    scheds = standard_schedules()
    control, treated = simulate_branches(p, scheds, T, options)
    return {name: _indicator(control, tr, T) for (name, _, _), tr in zip(TABLE_COLUMNS, treated)}


@dataclass
class SweepResult:
    obs_times: np.ndarray
    a1_times: np.ndarray
    a2_times: np.ndarray
    values: np.ndarray   # shape (len(obs), len(a1), len(a2)); NaN where absent

    def defined(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def long_rows(self):
        for k, s in enumerate(self.obs_times):
            for i, a in enumerate(self.a1_times):
                for j, b in enumerate(self.a2_times):
                    v = self.values[k, i, j]
                    if not np.isnan(v):
                        yield float(s), float(a), float(b), float(v)

    def write_csv(self, path) -> None:
        lines = ["s_obs,t_a1,t_a2,indicator_pct"]
        lines += [",".join(_fmt(x) for x in row) for row in self.long_rows()]
        Path(path).write_text("\n".join(lines) + "\n")

    def write_matrices(self, stem) -> list[Path]:
        """One dense matrix per observation time: rows are t_a1, columns t_a2, NA when absent."""
        stem = Path(stem)
        paths = []
        for k, s in enumerate(self.obs_times):
            path = stem.with_name(f"{stem.stem}_s{_fmt(s)}.csv")
            lines = ["t_a1\\t_a2," + ",".join(_fmt(b) for b in self.a2_times)]
            for i, a in enumerate(self.a1_times):
                cells = ["NA" if np.isnan(v) else _fmt(v) for v in self.values[k, i]]
                lines.append(_fmt(a) + "," + ",".join(cells))
            path.write_text("\n".join(lines) + "\n")
            paths.append(path)
        return paths


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _sweep_one(args):
    p, pairs, obs, options = args
    t_end = max(obs)
    scheds = [DenervationSchedule(a, b) for a, b in pairs]
    control, treated = simulate_branches(p, scheds, t_end, options)
    out = {}
    for (a, b), tr in zip(pairs, treated):
        for s in obs:
            if a <= s and b <= s:
                out[(a, b, s)] = _indicator(control, tr, s)
    return out


def sweep_invasive_potential(p: ModelParams, a1_times: Sequence[float], a2_times: Sequence[float],
                             obs_times: Sequence[float], options: SolverOptions | None = None,
                             threads: int = 1) -> SweepResult:
    """Indicator for every (observation time, t_a1, t_a2) triple with both knockouts <= s.

    One control run is shared by every cell; each treated run forks from it at its
    earliest knockout. Entries are bit-identical to ``invasive_potential``.
    """
    for name, seq in (("a1_times", a1_times), ("a2_times", a2_times), ("obs_times", obs_times)):
        if list(seq) != sorted(seq):
            raise ValueError(f"{name} must be sorted")
    obs = [float(s) for s in obs_times]
    pairs = [(float(a), float(b)) for a in a1_times for b in a2_times if min(a, b) <= max(obs)]
    pairs = [(a, b) for a, b in pairs if any(a <= s and b <= s for s in obs)]

    # chunk the pairs by t_a1 row; each chunk repeats the (cheap) control prefix
    chunks = {}
    for a, b in pairs:
        chunks.setdefault(a, []).append((a, b))
    jobs = [(p, chunk, obs, options) for chunk in chunks.values()]
    results = parallel_map(_sweep_one, jobs, threads=threads)

    values = np.full((len(obs), len(a1_times), len(a2_times)), np.nan)
    merged = {}
    for r in results:
        merged.update(r)
    for k, s in enumerate(obs):
        for i, a in enumerate(a1_times):
            for j, b in enumerate(a2_times):
                key = (float(a), float(b), s)
                if key in merged:
                    values[k, i, j] = merged[key]
    return SweepResult(np.array(obs), np.asarray(a1_times, float), np.asarray(a2_times, float), values)
