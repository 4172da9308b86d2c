"""Regime classification from support geometry, and bounds on the first-cancer-cell time.

Profiles built from tanh never vanish, so "support" here means the smallest interval of
grid centres where a profile exceeds ``threshold_frac`` times its maximum.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from neuroplast import model
from neuroplast.errors import HypothesisViolated, Unclassifiable
from neuroplast.model import ModelParams
from neuroplast.solver import SimGrid, Trajectory

DEFAULT_THRESHOLD = 1e-6
DEFAULT_EPS_C = 1e-3


@dataclass(frozen=True)
class Interval:
    lo: float = math.nan
    hi: float = math.nan

    @property
    def empty(self) -> bool:
        return math.isnan(self.lo)

    def intersects(self, other: "Interval") -> bool:
        if self.empty or other.empty:
            return False
        return self.lo <= other.hi and other.lo <= self.hi

    def intersection(self, other: "Interval") -> "Interval":
        if not self.intersects(other):
            return EMPTY
        return Interval(max(self.lo, other.lo), min(self.hi, other.hi))

    def __str__(self) -> str:
        return "empty" if self.empty else f"[{self.lo:.6g}, {self.hi:.6g}]"


EMPTY = Interval()


def numeric_support(values, centers, threshold_frac: float = DEFAULT_THRESHOLD) -> Interval:
    values = np.asarray(values, dtype=float)
    if not 0 < threshold_frac < 1:
        raise ValueError("threshold_frac must lie in (0, 1)")
    vmax = values.max(initial=0.0)
    if vmax <= 0:
        return EMPTY
    idx = np.nonzero(values > threshold_frac * vmax)[0]
    if idx.size == 0:   # only possible when every value equals the max and threshold ~ 1
        idx = np.nonzero(values == vmax)[0]
    return Interval(float(centers[idx[0]]), float(centers[idx[-1]]))


class Regime(str, enum.Enum):
    STATIONARY = "Stationary"
    BIMODAL = "Bimodal"
    PATHOLOGICAL = "Pathological"


@dataclass
class RegimeReport:
    regime: Regime
    threshold_frac: float
    supports: dict[str, Interval]
    evidence: dict[str, bool]

    def as_text(self) -> str:
        lines = [f"regime: {self.regime.value}", f"support threshold: {self.threshold_frac:g} of max"]
        for k, v in self.supports.items():
            lines.append(f"supp({k}): {v}")
        for k, v in self.evidence.items():
            lines.append(f"{k}: {'yes' if v else 'no'}")
        lines.append("note: labels near the threshold depend on it")
        return "\n".join(lines) + "\n"

    def as_kv(self) -> dict[str, str]:
        out = {"regime": self.regime.value, "threshold_frac": repr(self.threshold_frac)}
        for k, v in self.supports.items():
            out[f"supp_{k}_lo"] = repr(v.lo)
            out[f"supp_{k}_hi"] = repr(v.hi)
        for k, v in self.evidence.items():
            out[k] = str(v).lower()
        return out


def _profiles(p: ModelParams, grid: SimGrid) -> dict[str, np.ndarray]:
    x = grid.centers
    return {
        "Q0": model.initial_density(x, p),
        "pi": model.pi_profile(x, p),
        "eta": model.eta_values(x, p),
        "r": model.proliferation_profile(x, p),
    }


def classify_regime(p: ModelParams, grid: SimGrid,
                    threshold_frac: float = DEFAULT_THRESHOLD) -> RegimeReport:
    sup = {k: numeric_support(v, grid.centers, threshold_frac) for k, v in _profiles(p, grid).items()}
    if sup["Q0"].empty or sup["pi"].empty:
        raise Unclassifiable(f"empty numeric support: Q0 {sup['Q0']}, pi {sup['pi']}")
    q0_pi = sup["Q0"].intersects(sup["pi"])
    q0_eta = sup["Q0"].intersects(sup["eta"])
    pi_eta = sup["pi"].intersects(sup["eta"])
    evidence = {"Q0_meets_pi": q0_pi, "Q0_meets_eta": q0_eta, "pi_meets_eta": pi_eta}
    if not q0_pi and not q0_eta:
        regime = Regime.STATIONARY
    elif pi_eta and (q0_pi or q0_eta):
        regime = Regime.PATHOLOGICAL
    elif q0_pi:
        regime = Regime.BIMODAL
    else:
        raise Unclassifiable("Q0 meets eta but neither meets pi")
    return RegimeReport(regime, threshold_frac, sup, evidence)


@dataclass(frozen=True)
class TstarBounds:
    m1: float
    m2: float
    M0: float
    r0: float
    interval: tuple[float, float] = field(default=(math.nan, math.nan))

    def contains(self, t: float) -> bool:
        return self.interval[0] <= t <= self.interval[1]

    def as_text(self) -> str:
        lo, hi = self.interval
        return (f"M0: {self.M0:.6g}\nr0: {self.r0:.6g}\nm1: {self.m1:.6g}\nm2: {self.m2:.6g}\n"
                f"t* interval: [{lo:.6g}, {hi:.6g}] days\n")

    def as_kv(self) -> dict[str, str]:
        return {"M0": repr(self.M0), "r0": repr(self.r0), "m1": repr(self.m1), "m2": repr(self.m2),
                "tstar_lo": repr(self.interval[0]), "tstar_hi": repr(self.interval[1])}


def tstar_bounds(p: ModelParams, grid: SimGrid,
                 threshold_frac: float = DEFAULT_THRESHOLD) -> TstarBounds:
    """Bounds on the time the first cell reaches the proliferative zone.

    M0 is the right end of supp(Q0) within supp(pi), r0 the left end of supp(r); the
    slowest admissible speed at M0 is pi(M0)(1 - beta(1 - a1_eq)) and the fastest is
    max(pi)(1 + delta).
    """
    prof = _profiles(p, grid)
    sup = {k: numeric_support(v, grid.centers, threshold_frac) for k, v in prof.items()}
    if sup["Q0"].intersects(sup["r"]):
        raise HypothesisViolated("Q0_disjoint_from_r", f"supp(Q0) {sup['Q0']} meets supp(r) {sup['r']}")
    overlap = sup["Q0"].intersection(sup["pi"])
    if overlap.empty:
        raise HypothesisViolated("Q0_meets_pi", f"supp(Q0) {sup['Q0']} misses supp(pi) {sup['pi']}")
    M0 = overlap.hi
    r0 = sup["r"].lo
    pi_M0 = float(model.pi_profile(M0, p))
    # nondecreasing rather than strictly increasing: a saturated plateau is flat in floating point
    if not (pi_M0 > 0 and float(model.pi_profile(M0 + grid.h, p)) >= pi_M0):
        raise HypothesisViolated("pi_increasing_at_M0", f"pi not increasing at M0={M0:.6g}")
    slow = 1.0 - p.beta * (1.0 - p.a1_eq)
    if slow <= 0:
        raise HypothesisViolated("positive_speed", "beta (1 - a1_eq) >= 1")
    if r0 <= M0:
        raise HypothesisViolated("r0_right_of_M0", f"r0={r0:.6g} <= M0={M0:.6g}")
    m1 = pi_M0 * slow
    m2 = float(prof["pi"].max()) * (1.0 + p.delta)
    if p.eta_profile is not None:
        m2 += max(v for _, v in p.eta_profile)
    dist = r0 - M0
    return TstarBounds(m1=m1, m2=m2, M0=M0, r0=r0, interval=(dist / m2, dist / m1))


def detect_tstar(traj: Trajectory, eps_c: float = DEFAULT_EPS_C) -> float:
    """First sampled time with N_c/N above ``eps_c``; ``inf`` when it never happens."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    hit = np.nonzero(traj.p > eps_c)[0]
    return float(traj.t[hit[0]]) if hit.size else math.inf


def support_arrival_time(p: ModelParams, target: float, horizon: float,
                         threshold_frac: float = DEFAULT_THRESHOLD, check_every: int = 10,
                         options=None) -> float:
    """First time (checked every ``check_every`` steps) the numeric support of Q reaches ``target``.

    Tracks the support front itself rather than a mass fraction; ``inf`` if never.
    """
    from neuroplast.solver import Integrator, horizon_steps

    integ = Integrator(p, options)
    K = horizon_steps(horizon, integ.dt)
    big = np.iinfo(np.int64).max
    cp = integ.start()
    centers = integ.grid.centers
    while cp.k < K:
        cp, _ = integ.advance(cp, min(K, cp.k + check_every), big, big, copy=False)
        sup = numeric_support(cp.Q, centers, threshold_frac)
        if not sup.empty and sup.hi >= target:
            return cp.k * integ.dt
    return math.inf
