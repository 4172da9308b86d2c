"""Biological measurements used for calibration and the stage chronology they map onto."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path

from neuroplast.errors import EmptyCategory, ParseError, RangeError

AXONS = ("sympathetic", "sensory")
STAGES = ("ASYMP", "ADM", "PANIN", "PDAC", "PDAC_ADV")
TREATMENTS = ("AA", "OHDA")

DATA_ENV = "NEUROPLAST_DATA_DIR"


@dataclass(frozen=True)
class Chronology:
    t_asymp: float = 7.0
    t_adm: float = 17.0
    t_panin: float = 24.5
    t_pdac_early: float = 35.0
    t_pdac: float = 45.0
    t_pdac_adv: float = 56.0
    half_window: float = 3.0
    ohda_time: float = 28.0

    def __post_init__(self):
        times = [self.t_asymp, self.t_adm, self.t_panin, self.t_pdac_early, self.t_pdac, self.t_pdac_adv]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("stage times must be strictly increasing")
        if self.half_window <= 0:
            raise ValueError("half_window must be positive")
        if not self.t_panin < self.ohda_time < self.t_pdac_early:
            raise ValueError("ohda_time must lie between the PanIN and early PDAC times")

    def stage_time(self, stage: str) -> float:
        return {
            "ASYMP": self.t_asymp,
            "ADM": self.t_adm,
            "PANIN": self.t_panin,
            "PDAC": self.t_pdac,
            "PDAC_ADV": self.t_pdac_adv,
        }[stage]

    def window(self, center: float) -> tuple[float, float]:
        return center - self.half_window, center + self.half_window

    @property
    def horizon(self) -> float:
        """Latest time any criterion needs."""
        return max(self.t_pdac, self.t_pdac_adv) + self.half_window


@dataclass(frozen=True)
class AxonSample:
    axon: str
    stage: str
    value: float


@dataclass(frozen=True)
class CellSample:
    treatment: str
    value: float


@dataclass
class CalibrationDataset:
    cell_samples: list[CellSample]
    axon_samples: list[AxonSample]
    chronology: Chronology = field(default_factory=Chronology)

    @property
    def fitted_axon_samples(self) -> list[AxonSample]:
        """Axon samples entering the criterion (healthy-tissue samples only fix a1_eq)."""
        return [a for a in self.axon_samples if a.stage != "ASYMP"]

    @property
    def empirical_a1_eq(self) -> float | None:
        vals = [a.value for a in self.axon_samples if a.axon == "sympathetic" and a.stage == "ASYMP"]
        return sum(vals) / len(vals) if vals else None

    def count(self, treatment: str) -> int:
        return sum(1 for c in self.cell_samples if c.treatment == treatment)


def _read_rows(path: Path, header: tuple[str, ...]):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    reader = csv.reader(text.splitlines())
    rows = []
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row) or row[0].lstrip().startswith("#"):
            continue
        cells = [c.strip() for c in row]
        if not rows and tuple(c.lower() for c in cells) == header:
            rows.append(None)   # header marker
            continue
        if len(cells) != len(header):
            raise ParseError(f"expected {len(header)} columns, got {len(cells)}", lineno)
        rows.append((lineno, cells))
    return [r for r in rows if r is not None]


def _value(cell: str, lineno: int) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise ParseError(f"not a number: {cell!r}", lineno) from None
    if not 0.0 < v < 1.0:
        raise RangeError(f"line {lineno}: value {v} outside (0, 1)")
    return v


def load_axon_csv(path) -> list[AxonSample]:
    out = []
    for lineno, (axon, stage, value) in _read_rows(path, ("axon", "stage", "value")):
        axon, stage = axon.lower(), stage.upper()
        if axon not in AXONS:
            raise ParseError(f"unknown axon type {axon!r}", lineno)
        if stage not in STAGES:
            raise ParseError(f"unknown stage {stage!r}", lineno)
        out.append(AxonSample(axon, stage, _value(value, lineno)))
    return out


def load_cell_csv(path) -> list[CellSample]:
    out = []
    for lineno, (treatment, value) in _read_rows(path, ("treatment", "value")):
        treatment = treatment.upper()
        if treatment not in TREATMENTS:
            raise ParseError(f"unknown treatment {treatment!r}", lineno)
        out.append(CellSample(treatment, _value(value, lineno)))
    return out


def load_dataset(axon_csv, cell_csv, chronology: Chronology | None = None) -> CalibrationDataset:
    axons = load_axon_csv(axon_csv)
    cells = load_cell_csv(cell_csv)
    if not cells:
        raise EmptyCategory("no cell samples")
    if not any(a.stage != "ASYMP" for a in axons):
        raise EmptyCategory("no axon samples outside ASYMP")
    return CalibrationDataset(cells, axons, chronology or Chronology())


def data_dir() -> Path:
    env = os.environ.get(DATA_ENV)
    if env:
        return Path(env)
    return Path(__file__).resolve().parent.parent / "data"


def load_bundled(chronology: Chronology | None = None) -> CalibrationDataset:
    d = data_dir()
    return load_dataset(d / "axons.csv", d / "cells.csv", chronology)
