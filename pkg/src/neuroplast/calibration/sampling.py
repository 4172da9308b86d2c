"""Quasi-Monte Carlo sampling of the parameter box."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc, truncnorm

from neuroplast.errors import TooFewRows, UnsupportedDimension
from neuroplast.model import FREE_PARAMS, FREE_RANGES

MAX_SOBOL_DIM = 32


@dataclass(frozen=True)
class Hypercube:
    names: tuple[str, ...]
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        if len(self.names) != len(self.lo) or len(self.lo) != len(self.hi):
            raise ValueError("names, lo and hi must have equal length")
        if np.any(self.lo >= self.hi):
            bad = [n for n, a, b in zip(self.names, self.lo, self.hi) if a >= b]
            raise ValueError(f"empty range for {bad}")

    @classmethod
    def default(cls, overrides: dict[str, tuple[float, float]] | None = None) -> "Hypercube":
        ranges = dict(FREE_RANGES)
        for k, v in (overrides or {}).items():
            if k not in ranges:
                raise KeyError(f"unknown dimension {k!r}")
            ranges[k] = (float(v[0]), float(v[1]))
        return cls(FREE_PARAMS, np.array([ranges[k][0] for k in FREE_PARAMS]),
                   np.array([ranges[k][1] for k in FREE_PARAMS]))

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def dim(self) -> int:
        return len(self.names)

    def contains(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.all((X >= self.lo) & (X <= self.hi), axis=1)


def sobol_points(dim: int, n: int, offset: int = 1) -> np.ndarray:
    """Points ``offset .. offset+n-1`` of the unscrambled Sobol sequence (offset 1 skips the origin)."""
    if not 1 <= dim <= MAX_SOBOL_DIM:
        raise UnsupportedDimension(f"Sobol dimension must be in [1, {MAX_SOBOL_DIM}], got {dim}")
    if n < 1 or offset < 0:
        raise ValueError("n must be >= 1 and offset >= 0")
    eng = qmc.Sobol(d=dim, scramble=False)
    if offset:
        eng.fast_forward(offset)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)   # balance warning for n not a power of 2
        return eng.random(n)


def map_to_box(u, box: Hypercube) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return box.lo + u * box.width


@dataclass(frozen=True)
class GaussianSummary:
    names: tuple[str, ...]
    mean: np.ndarray
    var: np.ndarray

    @property
    def sd(self) -> np.ndarray:
        return np.sqrt(self.var)

    def to_dict(self) -> dict:
        return {n: {"mean": float(m), "var": float(v)} for n, m, v in zip(self.names, self.mean, self.var)}


def fit_diagonal_gaussian(X, box: Hypercube, var_floor: float = 1e-6) -> GaussianSummary:
    """Per-dimension mean and unbiased variance, with variance floored at ``var_floor * width**2``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 2:
        raise TooFewRows(f"need at least 2 rows, got {X.shape[0]}")
    mean = X.mean(axis=0)
    var = X.var(axis=0, ddof=1)
    var = np.maximum(var, var_floor * box.width ** 2)
    return GaussianSummary(box.names, mean, var)


def truncated_normal_ppf(u, mean, sd, lo, hi) -> np.ndarray:
    a = (lo - mean) / sd
    b = (hi - mean) / sd
    x = truncnorm.ppf(u, a, b, loc=mean, scale=sd)
    return np.clip(x, lo, hi)   # guards against last-ulp excursions


def sample_truncated_gaussian_qmc(g: GaussianSummary, box: Hypercube, n: int,
                                  offset: int = 1) -> np.ndarray:
    """``n`` points from the box-truncated diagonal Gaussian, via inverse CDF of Sobol points."""
    u = sobol_points(box.dim, n, offset)
    return truncated_normal_ppf(u, g.mean, g.sd, box.lo, box.hi)
