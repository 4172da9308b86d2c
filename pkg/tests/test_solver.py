from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neuroplast import model
from neuroplast.denervation import DenervationSchedule
from neuroplast.errors import CflViolation, NonIntegralCellCount
from neuroplast.model import FREE_PARAMS, FREE_RANGES, ModelParams, preset
from neuroplast.solver import (
    Integrator,
    SimState,
    SolverOptions,
    build_grid,
    cfl_time_step,
    discretize,
    initial_state,
    macro_totals,
    simulate,
    simulate_branches,
    step,
)
from oracles import (
    allee_oracle,
    conservation_error,
    custom_disc,
    is_monotone,
    logistic_oracle,
    n_bound,
    transport_l1_error,
    within_axon_range,
)


# --- grid and time step -----------------------------------------------------

def test_build_grid_default():
    g = build_grid(50, 0.05)
    assert g.n_cells == 2000
    assert g.faces[-1] == 50.0 and g.faces[0] == -50.0
    assert np.all(np.diff(g.centers) > 0)


def test_build_grid_small():
    g = build_grid(1, 0.5)
    np.testing.assert_array_equal(g.centers, [-0.75, -0.25, 0.25, 0.75])
    assert g.centers[g.zero_index] == 0.25


def test_build_grid_non_integral():
    with pytest.raises(NonIntegralCellCount):
        build_grid(50, 0.03)
    with pytest.raises(NonIntegralCellCount):
        build_grid(0, 0.05)


def test_cfl_time_step_examples():
    assert cfl_time_step(preset("set1"), 0.05) == 0.005
    assert 0.9 * 0.05 / (2.005 * 1.398) == pytest.approx(0.016053, abs=2e-6)
    fast = preset("set1", pi0=10.0, delta=1.0)
    assert cfl_time_step(fast, 0.05) == pytest.approx(0.00225, rel=1e-12)
    assert cfl_time_step(preset("set1").replace(pi0=1e-9, delta=0.0), 0.05) == 0.005


def test_cfl_time_step_counts_eta():
    p = preset("set1", pi0=10.0, delta=1.0, eta_profile=[[-10, 5.0], [0, 0.0]])
    assert cfl_time_step(p, 0.05) == pytest.approx(0.045 / 25)


# --- macro totals -------------------------------------------------------------

def test_macro_totals_constant():
    g = build_grid(50, 0.05)
    t = macro_totals(np.ones(g.n_cells), g)
    assert t.N == pytest.approx(99.95, rel=1e-12)
    assert t.Nc == pytest.approx(49.95, rel=1e-12)
    assert macro_totals(np.zeros(g.n_cells), g) == type(t)(0.0, 0.0)


def test_macro_totals_initial_gaussian(grid):
    q0 = model.initial_density(grid.centers, preset("set1"))
    t = macro_totals(q0, grid)
    assert t.N == pytest.approx(100.0, rel=1e-6)
    assert t.Nc < 1e-50


def test_macro_totals_shape_check(grid):
    with pytest.raises(ValueError):
        macro_totals(np.ones(3), grid)


# --- single step ------------------------------------------------------------

def test_step_frozen_pde():
    p = preset("set1").replace(beta=0.0, delta=0.0)
    disc = custom_disc(p, pi=0.0, r=0.0)
    s0 = initial_state(p, disc)
    s1 = step(s0, p, 0.005, disc.grid, disc)
    np.testing.assert_array_equal(s1.Q, s0.Q)
    theta = float(model.allee_threshold(1.0, p))
    g1 = p.r_a1 * (p.a1_0 / theta - 1) * (1 - p.a1_0)
    assert s1.A1 == pytest.approx(p.a1_0 * np.exp(0.005 * g1), rel=1e-14)
    assert s1.A2 == s0.A2   # no cancer fraction, no sensory growth


def test_step_hand_computation_six_cells():
    p = preset("set1").replace(beta=0.0, delta=0.0)
    grid = build_grid(0.15, 0.05)
    assert grid.n_cells == 6
    c, dt, h = 2.0, 0.01, 0.05
    q = np.array([1.0, 3.0, 2.0, 5.0, 4.0, 0.5])
    disc = custom_disc(p, grid=grid, pi=c, r=0.0, q0=q)
    s1 = step(SimState(0.0, q.copy(), p.a1_0, p.a2_0, 1.0), p, dt, grid, disc)
    lam = c * dt / h
    expected = q.copy()
    expected[1:-1] = q[1:-1] - lam * (q[1:-1] - q[:-2])
    expected[0] = q[0] - lam * q[0]
    expected[-1] = q[-1] + lam * q[-2]
    np.testing.assert_allclose(s1.Q, expected, rtol=1e-14)
    assert s1.Q.sum() == pytest.approx(q.sum(), rel=1e-14)


@pytest.mark.parametrize("name", ["set1", "set2", "set3"])
def test_step_conserves_mass_without_growth(name):
    p = preset(name)
    disc = custom_disc(p, r=0.0, q0=model.initial_density(build_grid().centers, p.replace(x_init=10.0)))
    s = initial_state(p, disc)
    dt = cfl_time_step(p)
    for _ in range(20):
        s2 = step(s, p, dt, disc.grid, disc)
        assert abs(s2.Q.sum() - s.Q.sum()) <= 1e-12 * s.Q.sum()
        s = s2


def test_step_cfl_violation():
    p = preset("set1").replace(beta=0.0, delta=0.0)
    disc = custom_disc(p, pi=20.0)
    with pytest.raises(CflViolation):
        step(initial_state(p, disc), p, 0.005, disc.grid, disc)


def test_kernel_cfl_violation():
    p = preset("set1")
    with pytest.raises(CflViolation):
        simulate(p, horizon=1.0, options=SolverOptions(dt=0.05))


def test_kernel_matches_reference_step():
    p = preset("set2", x_init=5.0)
    grid = build_grid(50, 0.5)
    disc = discretize(p, grid)
    dt = 0.005
    integ = Integrator(p, SolverOptions(h=0.5, dt=dt), disc)
    big = np.iinfo(np.int64).max
    cp, rec = integ.advance(integ.start(), 300, big, big)
    s = initial_state(p, disc)
    for _ in range(300):
        s = step(s, p, dt, grid, disc)
    np.testing.assert_allclose(cp.Q, s.Q, rtol=1e-9, atol=1e-300)
    assert cp.A1 == pytest.approx(s.A1, rel=1e-12)
    assert cp.A2 == pytest.approx(s.A2, rel=1e-12)
    assert rec.N[-1] == pytest.approx(macro_totals(s.Q, grid).N, rel=1e-12)


def test_kernel_matches_reference_step_with_knockout_and_eta():
    p = preset("set3", x_init=5.0, eta_profile=[[-20, 1.0], [-5, 0.5]])
    grid = build_grid(50, 0.5)
    disc = discretize(p, grid)
    dt = 0.005
    integ = Integrator(p, SolverOptions(h=0.5, dt=dt), disc)
    cp, _ = integ.advance(integ.start(), 200, 100, 150)
    s = initial_state(p, disc)
    for k in range(200):
        eff = p.replace(**({"beta": 0.0, "mu1": 0.0} if k >= 100 else {}),
                        **({"delta": 0.0, "mu2": 0.0} if k >= 150 else {}))
        s = step(s, eff, dt, grid, disc)
    np.testing.assert_allclose(cp.Q, s.Q, rtol=1e-9, atol=1e-300)
    assert cp.A1 == pytest.approx(s.A1, rel=1e-12)


# --- resumption and sampling ---------------------------------------------------

def test_resume_is_bit_identical():
    p = preset("set2")
    opts = SolverOptions(h=0.5)
    big = np.iinfo(np.int64).max
    integ = Integrator(p, opts)
    full, rec_full = integ.advance(integ.start(), 4000, big, big)
    integ2 = Integrator(p, opts)
    mid, _ = integ2.advance(integ2.start(), 1500, big, big)
    end, rec_tail = integ2.advance(mid, 4000, big, big)
    assert np.array_equal(full.Q, end.Q)
    assert (full.A1, full.A2) == (end.A1, end.A2)
    assert np.array_equal(rec_full.N[1500:], rec_tail.N)


def test_branches_match_direct_runs():
    p = preset("set2")
    opts = SolverOptions(h=0.5)
    scheds = [DenervationSchedule.sympathetic(10.0), DenervationSchedule.both(20.0),
              DenervationSchedule()]
    control, treated = simulate_branches(p, scheds, 30.0, opts)
    direct_ctrl = simulate(p, horizon=30.0, stride=1, options=opts)
    assert np.array_equal(control.p, direct_ctrl.p)
    for s, tr in zip(scheds, treated):
        direct = simulate(p, s, horizon=30.0, stride=1, options=opts)
        assert np.array_equal(tr.p, direct.p)
        assert np.array_equal(tr.A1, direct.A1)


def test_simulate_stride_and_snapshots():
    p = preset("set1")
    traj = simulate(p, horizon=10.0, stride=300, snapshot_times=[2.0, 10.0],
                    options=SolverOptions(h=0.5))
    steps = np.round(traj.t / traj.dt).astype(int)
    assert steps[0] == 0 and steps[-1] == 2000
    assert np.all(np.diff(steps[:-1]) == 300)
    assert traj.A1[0] == p.a1_0 and traj.A2[0] == p.a2_0
    assert set(traj.snapshots) == {2.0, 10.0}
    assert macro_totals(traj.snapshots[10.0], traj.grid).N == pytest.approx(traj.N[-1], rel=1e-14)


def test_simulate_is_deterministic():
    p = preset("set3")
    a = simulate(p, horizon=20.0, options=SolverOptions(h=0.25))
    b = simulate(p, horizon=20.0, options=SolverOptions(h=0.25))
    assert a.rows().tobytes() == b.rows().tobytes()


def test_simulate_rejects_bad_arguments():
    with pytest.raises(ValueError):
        simulate(preset("set1"), horizon=0.0)
    with pytest.raises(ValueError):
        simulate(preset("set1"), horizon=1.0, stride=0)


def test_kill_axon_state_freezes_axons():
    p = preset("set2")
    opts = SolverOptions(h=0.5, kill_axon_state=True)
    traj = simulate(p, DenervationSchedule.both(10.0), horizon=20.0, stride=1, options=opts)
    k = int(round(10.0 / traj.dt))
    assert np.all(traj.A1[k:] == traj.A1[k])
    assert np.all(traj.A2[k:] == traj.A2[k])


# --- qualitative runs -----------------------------------------------------------

@pytest.fixture(scope="module")
def set2_control():
    return simulate(preset("set2"), horizon=70.0, stride=1)


def test_set2_sympathetic_bump(set2_control):
    a1 = set2_control.A1
    assert a1.max() > a1[0]
    assert a1[-1] < a1[0]
    assert np.argmax(a1) < len(a1) - 1


def test_set2_cancer_fraction_timing(set2_control):
    t, p = set2_control.t, set2_control.p
    # the 0.05 level is crossed near 26 d on this grid
    assert np.all(p[t < 25] < 0.05)
    assert p[np.searchsorted(t, 30.0)] < 0.15
    assert p[np.searchsorted(t, 45.0)] > 0.2


def test_stationary_config_has_no_cancer():
    from neuroplast.scenarios import stationary
    p = stationary()
    traj = simulate(p, stride=1, options=SolverOptions(h=0.5))
    assert traj.Nc.max() < 1e-30
    assert traj.A2.max() - traj.A2.min() < 1e-12


# --- oracles --------------------------------------------------------------------

def test_logistic_oracle():
    _, n, exact = logistic_oracle(dt=1e-3)
    assert np.max(np.abs(n - exact) / exact) <= 1e-3


@pytest.mark.parametrize("a1_0,to_one", [(0.2, True), (0.15, True), (0.1, False), (0.05, False)])
def test_allee_oracle(a1_0, to_one):
    _, a1, ref, theta = allee_oracle(a1_0)
    assert (a1_0 > theta) == to_one
    assert is_monotone(a1, increasing=to_one)
    assert np.max(np.abs(a1 - ref)) < 2e-3
    assert (a1[-1] > 0.99) if to_one else (a1[-1] < 0.01)


def test_allee_oracle_converges_in_dt():
    errs = [np.max(np.abs(a1 - ref)) for _, a1, ref, _ in
            (allee_oracle(0.2, horizon=20.0, dt=dt) for dt in (2e-3, 1e-3))]
    assert 1.7 < errs[0] / errs[1] < 2.3


def test_first_order_convergence():
    ratio = transport_l1_error(0.1) / transport_l1_error(0.05)
    assert 1.7 <= ratio <= 2.3


@pytest.mark.parametrize("name", ["set1", "set2", "set3"])
def test_mass_conservation_full_horizon(name):
    assert conservation_error(name) <= 1e-9


# --- properties over the free-parameter box ------------------------------------

def params_strategy():
    return st.fixed_dictionaries(
        {k: st.floats(*FREE_RANGES[k], allow_nan=False) for k in FREE_PARAMS}
    ).map(lambda d: ModelParams(**d))


@settings(max_examples=25)
@given(params_strategy())
def test_positivity_and_bounds(p):
    traj = simulate(p, stride=1, options=SolverOptions(h=0.5))
    assert traj.q_min >= 0.0
    assert within_axon_range(traj.A1) and within_axon_range(traj.A2)
    assert np.all(traj.N <= n_bound(p))
    assert np.all((traj.p >= 0) & (traj.p <= 1))
