"""Step-wise QMC calibration: uniform sample, double filter, Gaussian resample, double filter."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from neuroplast.calibration.criteria import evaluate_criteria
from neuroplast.calibration.dataset import CalibrationDataset
from neuroplast.calibration.sampling import (
    GaussianSummary,
    Hypercube,
    fit_diagonal_gaussian,
    map_to_box,
    sample_truncated_gaussian_qmc,
    sobol_points,
)
from neuroplast.errors import EmptyResult, ParseError
from neuroplast.model import FREE_PARAMS, ModelParams
from neuroplast.parallel import parallel_map
from neuroplast.solver import SolverOptions


@dataclass
class ParamCollection:
    X: np.ndarray        # (rows, 14) in canonical order
    g1: np.ndarray
    g2: np.ndarray
    stage: str

    def __len__(self) -> int:
        return self.X.shape[0]

    def take(self, idx, stage: str | None = None) -> "ParamCollection":
        idx = np.asarray(idx, dtype=int)
        return ParamCollection(self.X[idx], self.g1[idx], self.g2[idx], stage or self.stage)

    def best(self) -> int:
        """Row index with the smallest G1 (first one on ties)."""
        return int(np.argmin(self.g1))

    def to_csv_text(self) -> str:
        lines = [",".join(FREE_PARAMS + ("g1", "g2", "stage"))]
        for row, a, b in zip(self.X, self.g1, self.g2):
            lines.append(",".join(f"{v:.17g}" for v in (*row, a, b)) + f",{self.stage}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv_text())

    @classmethod
    def read_csv(cls, path) -> "ParamCollection":
        lines = Path(path).read_text().splitlines()
        header = tuple(lines[0].split(","))
        if header != FREE_PARAMS + ("g1", "g2", "stage"):
            raise ParseError("unexpected collection header", 1)
        rows, stage = [], ""
        for lineno, line in enumerate(lines[1:], start=2):
            cells = line.split(",")
            if len(cells) != len(header):
                raise ParseError(f"expected {len(header)} columns", lineno)
            try:
                rows.append([float(c) for c in cells[:-1]])
            except ValueError:
                raise ParseError("bad number", lineno) from None
            stage = cells[-1]
        arr = np.array(rows, dtype=float).reshape(-1, len(header) - 1)
        n = len(FREE_PARAMS)
        return cls(arr[:, :n].copy(), arr[:, n].copy(), arr[:, n + 1].copy(), stage)


def keep_count(frac: float, n: int) -> int:
    return int(math.floor(frac * n + 1e-9))


def double_filter(coll: ParamCollection, frac1: float, frac2: float,
                  stage: str | None = None) -> ParamCollection:
    """Best ``frac1`` by G1, then best ``frac2`` of those by G2; ties go to the lower row index.

    The survivors keep their original relative order.
    """
    if not (0 < frac1 <= 1 and 0 < frac2 <= 1):
        raise ValueError("fractions must lie in (0, 1]")
    n1 = keep_count(frac1, len(coll))
    if n1 == 0:
        raise EmptyResult(f"first filter keeps floor({frac1}*{len(coll)}) = 0 rows")
    first = np.sort(np.argsort(coll.g1, kind="stable")[:n1])
    n2 = keep_count(frac2, n1)
    if n2 == 0:
        raise EmptyResult(f"second filter keeps floor({frac2}*{n1}) = 0 rows")
    second = np.sort(first[np.argsort(coll.g2[first], kind="stable")[:n2]])
    return coll.take(second, stage)


@dataclass(frozen=True)
class CalibrationStages:
    n0: int = 2 ** 18
    frac1a: float = 0.002
    frac2a: float = 0.2
    n2: int = 2 ** 18
    frac1b: float = 0.007
    frac2b: float = 0.5
    var_floor: float = 1e-6
    sobol_offset: int = 1

    def __post_init__(self):
        if self.n0 < 1 or self.n2 < 1:
            raise ValueError("stage sizes must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CalibrationResult:
    J0: ParamCollection
    J1: ParamCollection
    J2: ParamCollection
    J3: ParamCollection
    gaussian: GaussianSummary
    stages: CalibrationStages = field(default_factory=CalibrationStages)

    def collections(self) -> dict[str, ParamCollection]:
        return {"J0": self.J0, "J1": self.J1, "J2": self.J2, "J3": self.J3}

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, coll in self.collections().items():
            path = out / f"{name}.csv"
            coll.write_csv(path)
            paths.append(path)
        summary = {"stages": self.stages.to_dict(), "gaussian_J1": self.gaussian.to_dict(),
                   "sizes": {k: len(v) for k, v in self.collections().items()}}
        path = out / "summary.json"
        path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        paths.append(path)
        return paths


def evaluate_collection(X: np.ndarray, d: CalibrationDataset, stage: str, base: ModelParams | None = None,
                        options: SolverOptions | None = None, threads: int = 1) -> ParamCollection:
    def one(row):
        return evaluate_criteria(ModelParams.from_free_vector(row, base), d, options)

    results = parallel_map(one, list(X), threads=threads)
    g = np.array(results, dtype=float).reshape(-1, 2)
    return ParamCollection(np.array(X, dtype=float), g[:, 0].copy(), g[:, 1].copy(), stage)


def calibrate(d: CalibrationDataset, box: Hypercube | None = None,
              stages: CalibrationStages | None = None, base: ModelParams | None = None,
              options: SolverOptions | None = None, threads: int = 1) -> CalibrationResult:
    """Run the four-stage pipeline. No random numbers are drawn anywhere.

    ``base`` supplies the non-calibrated fields (fixed constants, onset convention).
    The second-stage Sobol points start right after the first-stage ones.
    """
    box = box or Hypercube.default()
    st = stages or CalibrationStages()
    X0 = map_to_box(sobol_points(box.dim, st.n0, st.sobol_offset), box)
    J0 = evaluate_collection(X0, d, "J0", base, options, threads)
    J1 = double_filter(J0, st.frac1a, st.frac2a, "J1")
    gauss = fit_diagonal_gaussian(J1.X, box, st.var_floor)
    X2 = sample_truncated_gaussian_qmc(gauss, box, st.n2, offset=st.sobol_offset + st.n0)
    J2 = evaluate_collection(X2, d, "J2", base, options, threads)
    J3 = double_filter(J2, st.frac1b, st.frac2b, "J3")
    return CalibrationResult(J0, J1, J2, J3, gauss, st)
