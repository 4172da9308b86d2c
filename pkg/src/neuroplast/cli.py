"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 bad input data or config, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from neuroplast import io
from neuroplast.errors import DataError, NumericError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _time_list(text: str) -> list[float]:
    """Parse ``"5,10,20"`` or ``"start:stop:step"`` (stop inclusive)."""
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9))
            return [start + i * step for i in range(n + 1)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad time list {text!r}") from None


def _add_model_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", help="published parameter set: set1, set2 or set3")
    src.add_argument("--config", help="JSON run configuration")
    p.add_argument("--convention", choices=["mirrored", "literal"],
                   help="where the progression speed switches on (overrides the config)")


def _add_sim_args(p: argparse.ArgumentParser, schedule: bool = True) -> None:
    p.add_argument("--horizon", type=float, help="final time in days (default 70)")
    if schedule:
        p.add_argument("--t-a1", type=float, dest="t_a1", help="sympathetic knockout time (days)")
        p.add_argument("--t-a2", type=float, dest="t_a2", help="sensory knockout time (days)")
    p.add_argument("--kill-axon-state", action="store_true",
                   help="freeze a denervated axon density at its knockout value")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="neuroplast", description=__doc__.splitlines()[0])
    parser.add_argument("--emit-default-config", metavar="PATH",
                        help="write an annotated default configuration and exit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="integrate one run and write its trajectory")
    _add_model_args(p)
    _add_sim_args(p)
    p.add_argument("--stride", type=int, help="keep every STRIDE-th step (default 200)")
    p.add_argument("--snapshot", type=float, action="append", default=[],
                   help="also write Q(x) at this time (days); repeatable")
    p.add_argument("--out", help="trajectory CSV path (default: stdout)")

    p = sub.add_parser("denervate", help="control vs denervated run and the invasive potential")
    _add_model_args(p)
    _add_sim_args(p)
    p.add_argument("--stride", type=int, help="row stride of the written trajectories")
    p.add_argument("--out", help="path stem; writes <stem>_control.csv and <stem>_denervated.csv")

    p = sub.add_parser("sweep", help="invasive potential over a grid of knockout times")
    _add_model_args(p)
    p.add_argument("--a1-times", type=_time_list, help="sympathetic knockout times, '5:70:5' or '5,10'")
    p.add_argument("--a2-times", type=_time_list, help="sensory knockout times")
    p.add_argument("--obs-times", type=_time_list, help="observation times")
    p.add_argument("--kill-axon-state", action="store_true")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="long-form heatmap CSV (default: stdout)")
    p.add_argument("--emit-matrix", action="store_true",
                   help="also write one dense matrix per observation time next to --out")

    p = sub.add_parser("regime", help="classify the regime and bound the first cancer time")
    _add_model_args(p)
    p.add_argument("--threshold", type=float, default=1e-6, help="relative support threshold")
    p.add_argument("--out", help="also write a key=value report here")

    p = sub.add_parser("calibrate", help="run the QMC calibration pipeline")
    p.add_argument("--config", help="JSON run configuration (calibration section)")
    p.add_argument("--convention", choices=["mirrored", "literal"])
    p.add_argument("--axon-csv")
    p.add_argument("--cell-csv")
    p.add_argument("--n0", type=int, help="first-stage sample size")
    p.add_argument("--n2", type=int, help="second-stage sample size")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True, help="directory for J0..J3 and summary.json")

    p = sub.add_parser("validate", help="check a parameter set and report every violation")
    _add_model_args(p)
    return parser


def _load_config(args):
    from neuroplast.config import config_from_dict, parse_config

    if getattr(args, "config", None):
        cfg = parse_config(args.config)
    else:
        raw = {}
        if getattr(args, "preset", None):
            raw["preset"] = args.preset
        cfg = config_from_dict(raw)
    changes = {}
    conv = getattr(args, "convention", None)
    if conv:
        changes["params"] = cfg.params.replace(pi_onset_convention=conv_enum(conv))
    if getattr(args, "horizon", None) is not None:
        if args.horizon <= 0:
            raise UsageError("--horizon must be positive")
        changes["horizon"] = args.horizon
    if getattr(args, "stride", None) is not None:
        if args.stride < 1:
            raise UsageError("--stride must be >= 1")
        changes["stride"] = args.stride
    if getattr(args, "kill_axon_state", False):
        changes["kill_axon_state"] = True
    if changes:
        import dataclasses
        cfg = dataclasses.replace(cfg, **changes)
    return cfg


def conv_enum(name: str):
    from neuroplast.model import OnsetConvention
    return OnsetConvention(name)


def _schedule(args, cfg):
    from neuroplast.denervation import DenervationSchedule

    t1 = args.t_a1 if args.t_a1 is not None else cfg.schedule.t_a1
    t2 = args.t_a2 if args.t_a2 is not None else cfg.schedule.t_a2
    try:
        return DenervationSchedule(t1, t2)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _cmd_simulate(args, out) -> int:
    from neuroplast.solver import simulate

    cfg = _load_config(args)
    sched = _schedule(args, cfg)
    snaps = list(cfg.snapshot_times) + list(args.snapshot)
    if snaps and not (args.out or cfg.output("trajectory")):
        raise UsageError("--snapshot needs --out to name the snapshot files")
    traj = simulate(cfg.params, None if sched.is_null else sched, cfg.horizon, cfg.stride,
                    snaps, cfg.solver_options)
    target = args.out or cfg.output("trajectory")
    if target:
        io.write_trajectory_csv(traj, target)
        if snaps:
            io.write_snapshots(traj, target)
    else:
        out.write(io.trajectory_csv_text(traj))
    return EXIT_OK


def _cmd_denervate(args, out) -> int:
    from neuroplast.denervation import time_average_percent
    from neuroplast.solver import simulate_branches

    cfg = _load_config(args)
    sched = _schedule(args, cfg)
    if sched.is_null:
        raise UsageError("give --t-a1 and/or --t-a2 (or a schedule in the config)")
    control, (treated,) = simulate_branches(cfg.params, [sched], cfg.horizon, cfg.solver_options)
    value = time_average_percent(treated.p, control.p, control.dt, cfg.horizon)
    if args.out:
        stem = Path(args.out)
        for tag, tr in (("control", control), ("denervated", treated)):
            thin = tr.thin(cfg.stride)
            io.write_trajectory_csv(thin, stem.with_name(f"{stem.stem}_{tag}.csv"))
    out.write(f"invasive_potential_pct={value:.17g}\n")
    return EXIT_OK


def _cmd_sweep(args, out) -> int:
    from neuroplast.denervation import sweep_invasive_potential

    cfg = _load_config(args)
    a1 = args.a1_times if args.a1_times is not None else list(cfg.sweep.a1_times)
    a2 = args.a2_times if args.a2_times is not None else list(cfg.sweep.a2_times)
    obs = args.obs_times if args.obs_times is not None else list(cfg.sweep.obs_times)
    if not (a1 and a2 and obs):
        raise UsageError("time axes must be nonempty")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    try:
        res = sweep_invasive_potential(cfg.params, a1, a2, obs, cfg.solver_options, args.threads)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    target = args.out or cfg.output("sweep")
    if target:
        res.write_csv(target)
        if args.emit_matrix:
            res.write_matrices(target)
    else:
        if args.emit_matrix:
            raise UsageError("--emit-matrix needs --out")
        out.write("s_obs,t_a1,t_a2,indicator_pct\n")
        for row in res.long_rows():
            out.write(",".join(io.fmt(v) for v in row) + "\n")
    return EXIT_OK


def _cmd_regime(args, out) -> int:
    from neuroplast.errors import HypothesisViolated
    from neuroplast.regime import classify_regime, tstar_bounds
    from neuroplast.solver import build_grid

    cfg = _load_config(args)
    if not 0 < args.threshold < 1:
        raise UsageError("--threshold must lie in (0, 1)")
    grid = build_grid(cfg.params.L, cfg.h)
    rep = classify_regime(cfg.params, grid, args.threshold)
    out.write(rep.as_text())
    kv = rep.as_kv()
    try:
        b = tstar_bounds(cfg.params, grid, args.threshold)
        out.write(b.as_text())
        kv.update(b.as_kv())
    except HypothesisViolated as exc:
        out.write(f"t* bounds unavailable: {exc}\n")
        kv["tstar_bounds"] = f"unavailable ({exc.which})"
    target = args.out or cfg.output("regime")
    if target:
        io.write_kv(kv, target)
    return EXIT_OK


def _cmd_calibrate(args, out) -> int:
    import dataclasses

    from neuroplast.calibration import Hypercube, calibrate, load_dataset
    from neuroplast.calibration.dataset import data_dir
    from neuroplast.model import validate_params

    cfg = _load_config(args)
    cal = cfg.calibration
    stages = cal.stages
    if args.n0 is not None:
        stages = dataclasses.replace(stages, n0=args.n0)
    if args.n2 is not None:
        stages = dataclasses.replace(stages, n2=args.n2)
    if stages.n0 < 1 or stages.n2 < 1:
        raise UsageError("--n0 and --n2 must be >= 1")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    axon = args.axon_csv or cal.axon_csv or data_dir() / "axons.csv"
    cell = args.cell_csv or cal.cell_csv or data_dir() / "cells.csv"
    d = load_dataset(axon, cell, cal.chronology)
    box = Hypercube.default(dict(cal.hypercube))
    base = validate_params(cfg.params)
    res = calibrate(d, box, stages, base, cfg.solver_options, args.threads)
    for path in res.write(args.out):
        out.write(f"wrote {path}\n")
    best = res.J3.best()
    out.write(f"J3 rows: {len(res.J3)}; best g1={res.J3.g1[best]:.6g} g2={res.J3.g2[best]:.6g}\n")
    return EXIT_OK


def _cmd_validate(args, out) -> int:
    cfg = _load_config(args)
    out.write(f"ok: {cfg.preset or 'custom'} parameters valid "
              f"(onset convention {cfg.params.pi_onset_convention.value})\n")
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "denervate": _cmd_denervate,
    "sweep": _cmd_sweep,
    "regime": _cmd_regime,
    "calibrate": _cmd_calibrate,
    "validate": _cmd_validate,
}


def run_cli(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.emit_default_config:
            from neuroplast.config import default_config_text
            Path(args.emit_default_config).write_text(default_config_text())
            return EXIT_OK
        if args.command is None:
            raise UsageError("neuroplast: a subcommand is required (see --help)")
        return _COMMANDS[args.command](args, out)
    except UsageError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_USAGE
    except DataError as exc:
        err.write(f"data error: {exc}\n")
        return EXIT_DATA
    except NumericError as exc:
        err.write(f"numeric error: {exc}\n")
        return EXIT_NUMERIC
    except OSError as exc:
        err.write(f"io error: {exc}\n")
        return EXIT_DATA
    except SystemExit as exc:   # --help / --version
        return int(exc.code or 0)


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
