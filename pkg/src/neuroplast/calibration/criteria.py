"""The two calibration criteria.

G1 is a mean squared misfit: cell proportions against the model around the PDAC time,
axon densities against the model around each sample's stage time, each averaged over its
window. G2 is the mean cancer proportion before the early-PDAC time and penalises
parametrizations where cancer appears too soon.
"""

from __future__ import annotations

import numpy as np

from neuroplast.calibration.dataset import CalibrationDataset, Chronology
from neuroplast.denervation import DenervationSchedule
from neuroplast.model import ModelParams
from neuroplast.solver import SolverOptions, Trajectory, simulate_branches


def window_mean(t: np.ndarray, f: np.ndarray, lo: float, hi: float) -> float:
    """Trapezoid mean of ``f`` over the samples of ``t`` inside [lo, hi]."""
    mask = (t >= lo - 1e-9) & (t <= hi + 1e-9)
    ts, fs = t[mask], f[mask]
    if ts.size == 0:
        raise ValueError(f"no samples inside [{lo}, {hi}]")
    if ts.size == 1:
        return float(fs[0])
    return float(np.trapezoid(fs, ts) / (ts[-1] - ts[0]))


def g1_from_trajectories(d: CalibrationDataset, aa: Trajectory, ohda: Trajectory) -> float:
    c = d.chronology
    lo, hi = c.window(c.t_pdac)
    cell_term = 0.0
    if d.cell_samples:
        for s in d.cell_samples:
            traj = aa if s.treatment == "AA" else ohda
            cell_term += window_mean(traj.t, (s.value - traj.p) ** 2, lo, hi)
        cell_term *= 2.0 / len(d.cell_samples)

    fitted = d.fitted_axon_samples
    axon_term = 0.0
    if fitted:
        for s in fitted:
            a = aa.A1 if s.axon == "sympathetic" else aa.A2
            wlo, whi = c.window(c.stage_time(s.stage))
            axon_term += window_mean(aa.t, (s.value - a) ** 2, wlo, whi)
        axon_term /= len(fitted)
    return cell_term + axon_term


def g2_from_trajectory(aa: Trajectory, c: Chronology) -> float:
    mask = aa.t <= c.t_pdac_early + 1e-9
    ts = aa.t[mask]
    return float(np.trapezoid(aa.p[mask], ts) / c.t_pdac_early)


def criterion_runs(p: ModelParams, c: Chronology,
                   options: SolverOptions | None = None) -> tuple[Trajectory, Trajectory]:
    """Untreated run and the OHDA run (sympathetic knockout at ``c.ohda_time``)."""
    horizon = max(c.horizon, c.t_pdac_early)
    aa, (ohda,) = simulate_branches(p, [DenervationSchedule(t_a1=c.ohda_time)], horizon, options)
    return aa, ohda


def evaluate_criteria(p: ModelParams, d: CalibrationDataset,
                      options: SolverOptions | None = None) -> tuple[float, float]:
    aa, ohda = criterion_runs(p, d.chronology, options)
    return g1_from_trajectories(d, aa, ohda), g2_from_trajectory(aa, d.chronology)


def criterion_g1(p: ModelParams, d: CalibrationDataset, options: SolverOptions | None = None) -> float:
    return evaluate_criteria(p, d, options)[0]


def criterion_g2(p: ModelParams, c: Chronology | None = None,
                 options: SolverOptions | None = None) -> float:
    c = c or Chronology()
    aa, _ = criterion_runs(p, c, options)
    return g2_from_trajectory(aa, c)


class CriterionCache:
    """Memoizes (G1, G2) per parameter vector."""

    def __init__(self, d: CalibrationDataset, options: SolverOptions | None = None):
        self.dataset = d
        self.options = options
        self._cache: dict[bytes, tuple[float, float]] = {}

    def __call__(self, p: ModelParams) -> tuple[float, float]:
        key = np.asarray(p.free_vector()).tobytes()
        hit = self._cache.get(key)
        if hit is None:
            hit = evaluate_criteria(p, self.dataset, self.options)
            self._cache[key] = hit
        return hit

    def __len__(self) -> int:
        return len(self._cache)
