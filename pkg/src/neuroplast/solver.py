"""Finite-volume integration of the coupled cell-density / axon system.

Transport uses first-order upwinding on a uniform cell-centred grid, growth is explicit
Euler, and both axon densities are advanced in log space so they stay positive. Totals
N and N_c use the trapezoid rule over cell centres. Coupling is fully explicit: every
update at step n reads (Q^n, A1^n, A2^n, N^n, N_c^n).

The hot loop lives in a numba kernel that advances an in-place state between two step
indices. Because the state (Q, A1, A2, N(0)) is complete, a run can be stopped and
resumed without changing a single bit, which the denervation and calibration code use
to share the common prefix of control and treated runs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from neuroplast import model
from neuroplast.errors import CflViolation, NonIntegralCellCount, NumericError
from neuroplast.model import ModelParams

DT_CAP = 0.005
CFL_TARGET = 0.9
DEFAULT_H = 0.05
DEFAULT_STRIDE = 200


class AxonUpdate(str, enum.Enum):
    """How the log-space axon update reads the ODE right-hand side.

    ``PER_CAPITA``: log A^{n+1} = log A^n + dt * G(A^n) / A^n, i.e. explicit Euler on
    d(log A)/dt. Consistent with the axon ODEs and the default.
    ``FULL_RHS``: log A^{n+1} = log A^n + dt * G(A^n), the update with G not divided by
    A. Kept for comparison only; it integrates a different ODE.
    """

    PER_CAPITA = "per_capita"
    FULL_RHS = "full_rhs"


@dataclass(frozen=True)
class SimGrid:
    L: float
    h: float
    p: int
    centers: np.ndarray = field(repr=False, compare=False)
    faces: np.ndarray = field(repr=False, compare=False)

    @property
    def n_cells(self) -> int:
        return 2 * self.p

    @property
    def zero_index(self) -> int:
        """Array index of the first cell with a nonnegative centre (cell i = 0)."""
        return self.p


def build_grid(L: float = 50.0, h: float = DEFAULT_H) -> SimGrid:
    if L <= 0 or h <= 0:
        raise NonIntegralCellCount(f"L and h must be positive (L={L}, h={h})")
    ratio = L / h
    p = int(round(ratio))
    if p < 1 or abs(ratio - p) > 1e-9 * max(1.0, ratio):
        raise NonIntegralCellCount(f"L/h = {ratio!r} is not an integer")
    i = np.arange(-p, p)
    centers = (i + 0.5) * h
    faces = np.arange(-p, p + 1) * h
    return SimGrid(L=float(L), h=float(h), p=p, centers=centers, faces=faces)


def cfl_time_step(params: ModelParams, h: float = DEFAULT_H) -> float:
    """Largest admissible time step: CFL number 0.9 against the worst-case speed, capped at 0.005."""
    speed = params.pi0 * (1.0 + params.delta)
    if params.eta_profile is not None:
        speed += max(v for _, v in params.eta_profile)
    if speed <= 0:
        return DT_CAP
    return min(CFL_TARGET * h / speed, DT_CAP)


@dataclass(frozen=True)
class MacroTotals:
    N: float
    Nc: float


def macro_totals(Q: np.ndarray, grid: SimGrid) -> MacroTotals:
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (grid.n_cells,):
        raise ValueError(f"Q has shape {Q.shape}, expected ({grid.n_cells},)")
    h = grid.h
    N = h / 2.0 * (Q[0] + 2.0 * Q[1:-1].sum() + Q[-1])
    qc = Q[grid.zero_index:]
    if qc.size == 1:
        Nc = h / 2.0 * 2.0 * qc[0]
    else:
        Nc = h / 2.0 * (qc[0] + 2.0 * qc[1:-1].sum() + qc[-1])
    return MacroTotals(float(N), float(Nc))


@dataclass(frozen=True)
class Discretization:
    """Closures sampled on the grid. Tests may build one by hand to switch terms off."""

    grid: SimGrid
    pi_faces: np.ndarray
    eta_faces: np.ndarray
    r_centers: np.ndarray
    q0: np.ndarray


def discretize(params: ModelParams, grid: SimGrid) -> Discretization:
    return Discretization(
        grid=grid,
        pi_faces=np.ascontiguousarray(model.pi_profile(grid.faces, params)),
        eta_faces=np.ascontiguousarray(model.eta_values(grid.faces, params)),
        r_centers=np.ascontiguousarray(model.proliferation_profile(grid.centers, params)),
        q0=np.ascontiguousarray(model.initial_density(grid.centers, params)),
    )


@dataclass
class SimState:
    t: float
    Q: np.ndarray
    A1: float
    A2: float
    n0: float


def initial_state(params: ModelParams, disc: Discretization) -> SimState:
    q = disc.q0.copy()
    n0 = macro_totals(q, disc.grid).N
    return SimState(t=0.0, Q=q, A1=params.a1_0, A2=params.a2_0, n0=n0)


# --- reference single step (plain numpy) ------------------------------------

def step(state: SimState, params: ModelParams, dt: float, grid: SimGrid,
         disc: Discretization | None = None,
         axon_update: AxonUpdate = AxonUpdate.PER_CAPITA) -> SimState:
    """Advance one time step. ``params`` are the effective (post-denervation) parameters.

    Straight numpy transcription of the scheme; the compiled kernel is checked
    against it.
    """
    if disc is None:
        disc = discretize(params, grid)
    Q = state.Q
    h = grid.h
    tot = macro_totals(Q, grid)
    N, Nc = tot.N, tot.Nc
    frac = Nc / N if N > 0 else 0.0
    A1, A2 = state.A1, state.A2

    mod = 1.0 - params.beta * float(model.rho(A1, params.a1_eq)) + params.delta * A2
    speed = disc.pi_faces[1:-1] * mod + disc.eta_faces[1:-1] * frac   # interior faces
    courant = dt / h * float(speed.max(initial=0.0))
    if courant > 1.0:
        raise CflViolation(int(round(state.t / dt)), courant)

    flux = np.zeros(grid.n_cells + 1)   # flux[j] through face j; both boundary faces stay 0
    flux[1:-1] = speed * Q[:-1]
    growth = disc.r_centers * Q * (1.0 - N / params.tau_c - params.mu1 * A1 + params.mu2 * A2)
    Q_new = Q - dt / h * (flux[1:] - flux[:-1]) + dt * growth

    theta = float(model.allee_threshold(N / state.n0, params))
    g1 = params.r_a1 * A1 * (A1 / theta - 1.0) * (1.0 - A1)
    g2 = float(model.sensory_growth_rate(frac, params)) * A2 * (1.0 - A2)
    if axon_update == AxonUpdate.PER_CAPITA:
        g1, g2 = g1 / A1, g2 / A2
    return SimState(
        t=state.t + dt,
        Q=Q_new,
        A1=A1 * math.exp(dt * g1),
        A2=A2 * math.exp(dt * g2),
        n0=state.n0,
    )


# --- compiled kernel ------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _trapezoid_totals(Q, h, iz):
    n = Q.size
    s = 0.0
    for i in range(1, n - 1):
        s += Q[i]
    N = h / 2.0 * (Q[0] + 2.0 * s + Q[n - 1])
    sc = 0.0
    for i in range(iz + 1, n - 1):
        sc += Q[i]
    Nc = h / 2.0 * (Q[iz] + 2.0 * sc + Q[n - 1])
    return N, Nc


@numba.njit(cache=True, nogil=True)
def _advance(Q, W, axons, n0, pi_f, eta_f, r_c, coef, dt, h, iz, k0, k1,
             na1, na2, freeze1, freeze2, per_capita, has_eta,
             rec_N, rec_Nc, rec_A1, rec_A2, diag):
    """Advance Q (in place, W is scratch of the same size) and axons[0:2] from step k0 to k1.

    coef = (beta, delta, mu1, mu2, tau_c, a1_eq, r_a1, s_theta, rbar_a2, s_a2).
    Records the state at steps k0..k1 into rec_*[0 : k1-k0+1].
    diag = [min Q seen, max courant, failing step (-1 if none)].
    Returns 0 on success, 1 on a CFL violation, 2 on a negative transport speed.

    Each cell update is the upwind flux difference written per cell,
    Q_i (1 - lam F_{i+1/2} + dt r_i g) + lam F_{i-1/2} Q_{i-1},
    with both boundary fluxes zero.
    """
    beta, delta, mu1, mu2, tau_c, a1_eq, r_a1, s_theta, rbar_a2, s_a2 = (
        coef[0], coef[1], coef[2], coef[3], coef[4], coef[5], coef[6], coef[7], coef[8], coef[9])
    n = Q.size
    lam = dt / h
    A1 = axons[0]
    A2 = axons[1]
    N, Nc = _trapezoid_totals(Q, h, iz)
    qmin = diag[0]
    cmax = diag[1]
    status = 0
    pimax = 0.0
    for i in range(1, n):
        if pi_f[i] > pimax:
            pimax = pi_f[i]
    src = Q
    dst = W
    for k in range(k0, k1 + 1):
        j = k - k0
        rec_N[j] = N
        rec_Nc[j] = Nc
        rec_A1[j] = A1
        rec_A2[j] = A2
        if k == k1:
            break
        b = beta
        m1 = mu1
        d = delta
        m2 = mu2
        if k >= na1:
            b = 0.0
            m1 = 0.0
        if k >= na2:
            d = 0.0
            m2 = 0.0
        frac = Nc / N if N > 0.0 else 0.0
        rho = A1 - a1_eq if A1 > a1_eq else 0.0
        mod = 1.0 - b * rho + d * A2
        gd = dt * (1.0 - N / tau_c - m1 * A1 + m2 * A2)
        if mod < 0.0:
            diag[2] = k
            status = 2
            break

        # exact max face speed over the interior faces
        if has_eta:
            fmax = 0.0
            for i in range(1, n):
                F = pi_f[i] * mod + eta_f[i] * frac
                if F > fmax:
                    fmax = F
        else:
            fmax = pimax * mod
        courant = lam * fmax
        if courant > cmax:
            cmax = courant
        if courant > 1.0:
            diag[2] = k
            status = 1
            break

        lm = lam * mod
        if has_eta:
            lf = lam * frac
            dst[0] = src[0] * (1.0 - (lm * pi_f[1] + lf * eta_f[1]) + gd * r_c[0])
            for i in range(1, n - 1):
                dst[i] = (src[i] * (1.0 - (lm * pi_f[i + 1] + lf * eta_f[i + 1]) + gd * r_c[i])
                          + (lm * pi_f[i] + lf * eta_f[i]) * src[i - 1])
            dst[n - 1] = src[n - 1] * (1.0 + gd * r_c[n - 1]) + (lm * pi_f[n - 1] + lf * eta_f[n - 1]) * src[n - 2]
        else:
            dst[0] = src[0] * (1.0 - lm * pi_f[1] + gd * r_c[0])
            for i in range(1, n - 1):
                dst[i] = src[i] * (1.0 - lm * pi_f[i + 1] + gd * r_c[i]) + lm * pi_f[i] * src[i - 1]
            dst[n - 1] = src[n - 1] * (1.0 + gd * r_c[n - 1]) + lm * pi_f[n - 1] * src[n - 2]

        theta = a1_eq / 2.0 + 0.5 * np.tanh(s_theta * (N / n0 - 1.1)) + 0.5
        g1 = r_a1 * A1 * (A1 / theta - 1.0) * (1.0 - A1)
        g2 = rbar_a2 * np.tanh(s_a2 * frac) * A2 * (1.0 - A2)
        if per_capita:
            g1 = g1 / A1
            g2 = g2 / A2
        if not (freeze1 and k >= na1):
            A1 = A1 * np.exp(dt * g1)
        if not (freeze2 and k >= na2):
            A2 = A2 * np.exp(dt * g2)

        sa = 0.0
        sc = 0.0
        for i in range(1, iz + 1):
            q = dst[i]
            sa += q
            qmin = min(qmin, q)
        for i in range(iz + 1, n - 1):
            q = dst[i]
            sa += q
            sc += q
            qmin = min(qmin, q)
        qmin = min(qmin, min(dst[0], dst[n - 1]))
        # summation order matches _trapezoid_totals, so a resumed run sees identical totals
        N = h / 2.0 * (dst[0] + 2.0 * sa + dst[n - 1])
        Nc = h / 2.0 * (dst[iz] + 2.0 * sc + dst[n - 1])
        tmp = src
        src = dst
        dst = tmp
    if src is not Q:
        Q[:] = src
    axons[0] = A1
    axons[1] = A2
    diag[0] = qmin
    diag[1] = cmax
    return status


def step_index(t: float, dt: float) -> int:
    """First step index whose time k*dt is >= t (inf maps to a never-reached index)."""
    if not math.isfinite(t):
        return np.iinfo(np.int64).max
    return max(0, int(math.ceil(t / dt - 1e-9)))


def horizon_steps(horizon: float, dt: float) -> int:
    return max(1, int(math.ceil(horizon / dt - 1e-9)))


@dataclass
class _Records:
    N: np.ndarray
    Nc: np.ndarray
    A1: np.ndarray
    A2: np.ndarray

    @classmethod
    def empty(cls, n: int) -> "_Records":
        return cls(np.empty(n), np.empty(n), np.empty(n), np.empty(n))

    def concat(self, other: "_Records", skip_first: bool = True) -> "_Records":
        s = 1 if skip_first else 0
        return _Records(*(np.concatenate([a, b[s:]]) for a, b in
                          ((self.N, other.N), (self.Nc, other.Nc), (self.A1, other.A1), (self.A2, other.A2))))

    def head(self, n: int) -> "_Records":
        return _Records(self.N[:n], self.Nc[:n], self.A1[:n], self.A2[:n])


@dataclass
class Checkpoint:
    """Full solver state at step ``k``; resuming from it is bit-identical to not stopping."""

    k: int
    Q: np.ndarray
    A1: float
    A2: float


@dataclass(frozen=True)
class SolverOptions:
    h: float = DEFAULT_H
    dt: float | None = None
    axon_update: AxonUpdate = AxonUpdate.PER_CAPITA
    kill_axon_state: bool = False


class Integrator:
    """Holds the discretised closures of one parameter vector and runs the kernel."""

    def __init__(self, params: ModelParams, options: SolverOptions | None = None,
                 disc: Discretization | None = None):
        self.params = params
        self.options = options or SolverOptions()
        grid = disc.grid if disc is not None else build_grid(params.L, self.options.h)
        self.grid = grid
        self.disc = disc if disc is not None else discretize(params, grid)
        self.dt = self.options.dt if self.options.dt is not None else cfl_time_step(params, grid.h)
        self.n0 = macro_totals(self.disc.q0, grid).N
        p = params
        self._coef = np.array([p.beta, p.delta, p.mu1, p.mu2, p.tau_c, p.a1_eq,
                               p.r_a1, p.s_theta, p.rbar_a2, p.s_a2], dtype=float)
        self.q_min = math.inf
        self.max_courant = 0.0
        self._work = np.empty(grid.n_cells)
        self._has_eta = bool(np.any(self.disc.eta_faces != 0.0))

    def start(self) -> Checkpoint:
        return Checkpoint(0, self.disc.q0.copy(), self.params.a1_0, self.params.a2_0)

    def advance(self, cp: Checkpoint, k_end: int, na1: int, na2: int,
                copy: bool = True) -> tuple[Checkpoint, _Records]:
        Q = cp.Q.copy() if copy else cp.Q
        axons = np.array([cp.A1, cp.A2])
        n = k_end - cp.k + 1
        rec = _Records.empty(n)
        diag = np.array([math.inf, 0.0, -1.0])
        big = np.iinfo(np.int64).max
        status = _advance(Q, self._work, axons, self.n0, self.disc.pi_faces, self.disc.eta_faces,
                          self.disc.r_centers, self._coef, self.dt, self.grid.h,
                          self.grid.zero_index, cp.k, k_end, min(na1, big), min(na2, big),
                          self.options.kill_axon_state, self.options.kill_axon_state,
                          self.options.axon_update == AxonUpdate.PER_CAPITA, self._has_eta,
                          rec.N, rec.Nc, rec.A1, rec.A2, diag)
        self.q_min = min(self.q_min, diag[0])
        self.max_courant = max(self.max_courant, diag[1])
        if status == 1:
            raise CflViolation(int(diag[2]), float(diag[1]))
        if status == 2:
            raise NumericError(f"negative transport speed at step {int(diag[2])}")
        if not np.all(np.isfinite(rec.N)):
            raise NumericError("non-finite total population")
        return Checkpoint(k_end, Q, float(axons[0]), float(axons[1])), rec


@dataclass
class Trajectory:
    t: np.ndarray
    N: np.ndarray
    Nc: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    dt: float
    snapshots: dict[float, np.ndarray] = field(default_factory=dict)
    grid: SimGrid | None = None
    q_min: float = math.inf

    @property
    def p(self) -> np.ndarray:
        return np.where(self.N > 0, self.Nc / np.where(self.N > 0, self.N, 1.0), 0.0)

    def __len__(self) -> int:
        return self.t.size

    def rows(self) -> np.ndarray:
        return np.column_stack([self.t, self.N, self.Nc, self.p, self.A1, self.A2])

    def thin(self, stride: int) -> "Trajectory":
        """Every ``stride``-th row plus the last one."""
        idx = _sample_index(len(self) - 1, stride)
        return Trajectory(self.t[idx], self.N[idx], self.Nc[idx], self.A1[idx], self.A2[idx],
                          self.dt, dict(self.snapshots), self.grid, self.q_min)


def _sample_index(K: int, stride: int) -> np.ndarray:
    idx = np.arange(0, K + 1, stride)
    if idx[-1] != K:
        idx = np.append(idx, K)
    return idx


def _assemble(rec: _Records, dt: float, stride: int, grid: SimGrid, q_min: float,
              snapshots: dict[float, np.ndarray] | None = None) -> Trajectory:
    idx = _sample_index(rec.N.size - 1, stride)
    return Trajectory(t=idx * dt, N=rec.N[idx].copy(), Nc=rec.Nc[idx].copy(),
                      A1=rec.A1[idx].copy(), A2=rec.A2[idx].copy(), dt=dt,
                      snapshots=snapshots or {}, grid=grid, q_min=q_min)


def simulate(params: ModelParams, schedule=None, horizon: float | None = None,
             stride: int = DEFAULT_STRIDE, snapshot_times: Sequence[float] = (),
             options: SolverOptions | None = None,
             disc: Discretization | None = None) -> Trajectory:
    """Integrate from the initial condition up to ``horizon`` (default ``params.horizon_T``).

    ``schedule`` is a ``DenervationSchedule`` (or None for the control run). Rows are kept
    every ``stride`` steps plus the final step; ``snapshot_times`` are rounded to the
    nearest step and stored as copies of Q.
    """
    if horizon is None:
        horizon = params.horizon_T
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    integ = Integrator(params, options, disc)
    dt = integ.dt
    K = horizon_steps(horizon, dt)
    na1, na2 = _knockout_steps(schedule, dt)

    snap_steps = sorted({min(K, max(0, int(round(s / dt)))) for s in snapshot_times})
    snaps_by_step: dict[int, np.ndarray] = {}
    cp = integ.start()
    rec: _Records | None = None
    for ks in snap_steps + [K]:
        if ks > cp.k or rec is None:
            cp, seg = integ.advance(cp, max(ks, cp.k), na1, na2, copy=False)
            rec = seg if rec is None else rec.concat(seg)
        if ks in snap_steps:
            snaps_by_step[ks] = cp.Q.copy()
    snapshots = {float(s): snaps_by_step[min(K, max(0, int(round(s / dt))))] for s in snapshot_times}
    return _assemble(rec, dt, stride, integ.grid, integ.q_min, snapshots)


def _knockout_steps(schedule, dt: float) -> tuple[int, int]:
    if schedule is None:
        big = np.iinfo(np.int64).max
        return big, big
    return step_index(schedule.t_a1, dt), step_index(schedule.t_a2, dt)


def simulate_branches(params: ModelParams, schedules: Sequence, horizon: float,
                      options: SolverOptions | None = None,
                      disc: Discretization | None = None) -> tuple[Trajectory, list[Trajectory]]:
    """Control run plus one run per schedule, all at stride 1.

    Each treated run is resumed from the control state at its first knockout step, so
    it is bit-identical to a run started from t = 0.
    """
    integ = Integrator(params, options, disc)
    dt = integ.dt
    K = horizon_steps(horizon, dt)
    big = np.iinfo(np.int64).max
    forks = sorted({min(_knockout_steps(s, dt)) for s in schedules if min(_knockout_steps(s, dt)) < K})

    cp = integ.start()
    rec: _Records | None = None
    checkpoints: dict[int, Checkpoint] = {}
    for kf in forks + [K]:
        if rec is None or kf > cp.k:
            cp, seg = integ.advance(cp, kf, big, big, copy=False)
            rec = seg if rec is None else rec.concat(seg)
        if kf in forks:
            checkpoints[kf] = Checkpoint(cp.k, cp.Q.copy(), cp.A1, cp.A2)
    control_rec = rec
    control = _assemble(control_rec, dt, 1, integ.grid, integ.q_min)

    treated = []
    for s in schedules:
        na1, na2 = _knockout_steps(s, dt)
        kf = min(na1, na2)
        if kf >= K:
            treated.append(control)
            continue
        start = checkpoints[kf]
        _, seg = integ.advance(start, K, na1, na2, copy=True)
        treated.append(_assemble(control_rec.head(kf + 1).concat(seg), dt, 1, integ.grid, integ.q_min))
    return control, treated
