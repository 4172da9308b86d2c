"""Synthetic parametrizations for the three qualitative regimes, and a generator of
configurations satisfying the hypotheses behind the first-cancer-time bounds."""

from __future__ import annotations

import numpy as np

from neuroplast.model import FREE_PARAMS, FREE_RANGES, ModelParams, OnsetConvention, validate_params

_BASE = dict(pi0=1.0, x1_pi=40.0, eps1_pi=10.0, beta=0.5, delta=0.5, gamma_r=1.0, s_r=10.0,
             tau_c=200.0, mu1=0.0, mu2=0.1, r_a1=0.05, s_theta=15.0, rbar_a2=0.5, s_a2=5.0)


def stationary() -> ModelParams:
    """Progression switches on near x = -1 (printed convention), far right of Q0."""
    return validate_params({**_BASE, "x1_pi": 49.0, "pi_onset_convention": "literal"})


def bimodal() -> ModelParams:
    """Progression switches on at x = -40, inside the initial distribution."""
    return validate_params(dict(_BASE))


def pathological(eta0: float = 5.0) -> ModelParams:
    """Bimodal setup plus a cancer-driven drift covering the healthy mode and the onset."""
    eta = [[-50.0, eta0], [-38.0, eta0], [-37.0, 0.0]]
    return validate_params({**_BASE, "eta_profile": eta})


def prop1_configs(n: int, seed: int = 0, max_upper: float = 150.0) -> list[ModelParams]:
    """Uniform draws from the parameter box that pass the first-cancer-time hypothesis checks.

    Draws whose upper time bound exceeds ``max_upper`` days are skipped to bound runtime.
    """
    from neuroplast.errors import HypothesisViolated
    from neuroplast.regime import tstar_bounds
    from neuroplast.solver import build_grid

    rng = np.random.default_rng(seed)
    grid = build_grid()
    out = []
    while len(out) < n:
        raw = {k: rng.uniform(*FREE_RANGES[k]) for k in FREE_PARAMS}
        p = ModelParams(**raw, pi_onset_convention=OnsetConvention.MIRRORED)
        try:
            b = tstar_bounds(p, grid)
        except HypothesisViolated:
            continue
        if b.interval[1] <= max_upper:
            out.append(p)
    return out
