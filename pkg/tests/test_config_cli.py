from __future__ import annotations

import io as _io
import json
import math

import numpy as np
import pytest

from neuroplast import io
from neuroplast.cli import build_parser, run_cli
from neuroplast.config import (
    config_from_dict,
    config_to_dict,
    default_config,
    default_config_text,
    parse_config,
)
from neuroplast.errors import ConfigError, ParseError, UnknownKey, ValidationError
from neuroplast.model import preset
from neuroplast.solver import SolverOptions, simulate

SET1 = {"pi0": 2.005, "beta": 0.73, "delta": 0.398, "gamma_r": 1.50, "s_r": 2.68, "tau_c": 172.295,
        "mu1": -0.176, "mu2": 0.214, "r_a1": 0.055, "rbar_a2": 0.241, "x1_pi": 32.97,
        "eps1_pi": 5.357, "s_theta": 15.131, "s_a2": 4.151}


def cli(*argv):
    out, err = _io.StringIO(), _io.StringIO()
    code = run_cli(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


# --- config ---------------------------------------------------------------------

def test_default_config_round_trip(tmp_path):
    path = tmp_path / "default.json"
    path.write_text(default_config_text())
    assert parse_config(path) == default_config()
    assert config_from_dict(config_to_dict(default_config())) == default_config()


def test_round_trip_with_overrides():
    raw = {"preset": "set3", "params": {"pi0": 3.0}, "grid": {"h": 0.1}, "horizon": 50,
           "schedule": {"t_a1": 28}, "stride": 10, "snapshot_times": [5, 10],
           "calibration": {"stages": {"n0": 64}, "hypercube": {"pi0": [1, 2]}},
           "outputs": {"trajectory": "t.csv"}}
    cfg = config_from_dict(raw)
    assert cfg.params.pi0 == 3.0 and cfg.h == 0.1 and cfg.schedule.t_a2 == math.inf
    assert config_from_dict(config_to_dict(cfg)) == cfg


def test_explicit_set1_params_match_preset():
    cfg = config_from_dict({"preset": None, "params": SET1})
    assert cfg.params == preset("set1")


def test_dt_is_rejected():
    for raw in ({"dt": 0.1}, {"params": {"dt": 0.1}}, {"grid": {"dt": 0.1}}):
        with pytest.raises(ValidationError):
            config_from_dict(raw)


def test_unknown_keys_and_comments():
    with pytest.raises(UnknownKey):
        config_from_dict({"horizn": 70})
    with pytest.raises(UnknownKey):
        config_from_dict({"schedule": {"t_a3": 1}})
    assert config_from_dict({"_note": "ignored"}) == default_config()


@pytest.mark.parametrize("raw", [
    {"preset": "set9"},
    {"params": {"pi0": 0.0}},
    {"horizon": -1},
    {"stride": 0},
    {"stride": 1.5},
    {"schedule": {"t_a1": -3}},
    {"axon_update": "sideways"},
    {"kill_axon_state": "yes"},
    {"sweep": {"a1_times": "5:70:5"}},
    {"calibration": {"stages": {"n0": 1.5}}},
    {"calibration": {"chronology": {"t_adm": 1}}},
    {"calibration": {"hypercube": {"pi0": [2, 1]}}},
])
def test_invalid_values(raw):
    with pytest.raises(ValidationError):
        config_from_dict(raw)


def test_param_violations_are_carried():
    with pytest.raises(ValidationError) as ei:
        config_from_dict({"params": {"pi0": 0.0, "beta": 5.0}})
    assert {v.field for v in ei.value.violations} >= {"pi0", "beta"}


def test_parse_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "preset": "set1",\n  oops\n}')
    with pytest.raises(ParseError) as ei:
        parse_config(bad)
    assert ei.value.line == 3


# --- file emission ---------------------------------------------------------------

def test_trajectory_csv_daily_rows(tmp_path):
    traj = simulate(preset("set1"), stride=200)
    path = io.write_trajectory_csv(traj, tmp_path / "t.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "t,N,Nc,p,A1,A2"
    assert len(lines) == 72
    assert float(lines[-1].split(",")[0]) == pytest.approx(70.0)
    again = io.write_trajectory_csv(simulate(preset("set1"), stride=200), tmp_path / "u.csv")
    assert path.read_bytes() == again.read_bytes()


def test_fmt_round_trips_doubles():
    for x in (1 / 3, 1e-300, 123456.789, -0.0):
        assert float(io.fmt(x)) == x


def test_snapshot_files(tmp_path):
    traj = simulate(preset("set1"), horizon=2.0, snapshot_times=[1.0], options=SolverOptions(h=0.5))
    (path,) = io.write_snapshots(traj, tmp_path / "run.csv")
    assert path.name == "run_t1.csv"
    lines = path.read_text().splitlines()
    assert lines[0] == "x,Q" and len(lines) == 201
    assert io.snapshot_path("a/b.csv", 12.5).name == "b_t12.5.csv"


def test_write_kv(tmp_path):
    p = io.write_kv({"a": "1", "b": "x"}, tmp_path / "r.txt")
    assert p.read_text() == "a=1\nb=x\n"


# --- CLI -------------------------------------------------------------------------

def test_help_lists_every_flag():
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    for name, p in sub.choices.items():
        text = p.format_help()
        for action in p._actions:
            for opt in action.option_strings:
                assert opt in text, (name, opt)
        code, out, _ = cli(name, "--help")
        assert code == 0


def test_top_level_help_and_usage_errors():
    assert cli("--help")[0] == 0
    assert cli()[0] == 1
    assert cli("frobnicate")[0] == 1
    assert cli("simulate", "--horizon", "abc")[0] == 1
    assert cli("simulate", "--preset", "set1", "--config", "x.json")[0] == 1
    assert cli("simulate", "--horizon", "-1")[0] == 1
    assert cli("denervate", "--preset", "set1")[0] == 1
    assert cli("sweep", "--a1-times", "9:1:0")[0] == 1


def test_simulate_writes_trajectory_and_snapshots(tmp_path):
    out = tmp_path / "traj.csv"
    code, _, err = cli("simulate", "--preset", "set2", "--out", str(out), "--snapshot", "28")
    assert code == 0, err
    lines = out.read_text().splitlines()
    assert len(lines) == 72
    t = np.array([float(r.split(",")[0]) for r in lines[1:]])
    assert t[0] == 0.0 and t[-1] == pytest.approx(70.0)
    assert (tmp_path / "traj_t28.csv").exists()


def test_simulate_to_stdout():
    code, out, _ = cli("simulate", "--preset", "set1", "--horizon", "1", "--stride", "100")
    assert code == 0
    assert out.splitlines()[0] == "t,N,Nc,p,A1,A2" and len(out.splitlines()) == 4
    assert cli("simulate", "--preset", "set1", "--horizon", "1", "--snapshot", "1")[0] == 1


def test_denervate_prints_indicator(tmp_path):
    code, out, _ = cli("denervate", "--preset", "set2", "--t-a1", "28", "--horizon", "70",
                       "--out", str(tmp_path / "d.csv"))
    assert code == 0
    value = float(out.strip().split("=")[1])
    assert value == pytest.approx(5.893, abs=1.0)
    assert (tmp_path / "d_control.csv").exists() and (tmp_path / "d_denervated.csv").exists()


def test_sweep_cli(tmp_path):
    out = tmp_path / "s.csv"
    code, _, _ = cli("sweep", "--preset", "set1", "--a1-times", "10,20", "--a2-times", "10:20:10",
                     "--obs-times", "20", "--threads", "2", "--out", str(out), "--emit-matrix")
    assert code == 0
    assert len(out.read_text().splitlines()) == 5
    assert (tmp_path / "s_s20.csv").exists()


def test_regime_cli(tmp_path):
    cfg = write_json(tmp_path / "c.json", {"preset": "set1", "params": {"x1_pi": 40.0}})
    code, out, _ = cli("regime", "--config", cfg, "--out", str(tmp_path / "r.txt"))
    assert code == 0 and out.startswith("regime: ")
    kv = dict(line.split("=", 1) for line in (tmp_path / "r.txt").read_text().splitlines())
    assert kv["regime"] in {"Stationary", "Bimodal", "Pathological"}
    assert cli("regime", "--preset", "set1", "--threshold", "2")[0] == 1


def test_validate_cli(tmp_path):
    assert cli("validate", "--preset", "set3")[0] == 0
    bad = write_json(tmp_path / "b.json", {"params": {"pi0": 0.0}})
    code, _, err = cli("validate", "--config", bad)
    assert code == 2 and "pi0" in err


def test_data_error_exit_codes(tmp_path):
    assert cli("simulate", "--config", str(tmp_path / "missing.json"))[0] == 2
    assert cli("simulate", "--preset", "set7")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli("simulate", "--config", str(bad))[0] == 2
    cells = tmp_path / "cells.csv"
    cells.write_text("AA,1.5\n")
    assert cli("calibrate", "--cell-csv", str(cells), "--out", str(tmp_path / "o"))[0] == 2


def test_numeric_error_exit_code(tmp_path):
    # default filter fractions keep zero rows of a four-point sample
    code, _, err = cli("calibrate", "--n0", "4", "--n2", "4", "--out", str(tmp_path / "o"))
    assert code == 3 and "numeric error" in err


def test_calibrate_cli(tmp_path):
    cfg = write_json(tmp_path / "c.json", {
        "grid": {"h": 0.5},
        "calibration": {"stages": {"n0": 4, "n2": 2, "frac1a": 1, "frac2a": 1, "frac1b": 1, "frac2b": 1}},
    })
    code, out, err = cli("calibrate", "--config", cfg, "--out", str(tmp_path / "o"))
    assert code == 0, err
    names = sorted(p.name for p in (tmp_path / "o").iterdir())
    assert names == ["J0.csv", "J1.csv", "J2.csv", "J3.csv", "summary.json"]
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["sizes"] == {"J0": 4, "J1": 4, "J2": 2, "J3": 2}


def test_emit_default_config(tmp_path):
    path = tmp_path / "d.json"
    assert cli("--emit-default-config", str(path))[0] == 0
    assert parse_config(path) == default_config()
    assert cli("validate", "--config", str(path))[0] == 0
