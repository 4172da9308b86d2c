"""CSV emission for trajectories, snapshots and key-value reports."""

from __future__ import annotations

from pathlib import Path

from neuroplast.solver import Trajectory

TRAJECTORY_HEADER = "t,N,Nc,p,A1,A2"


def fmt(x: float) -> str:
    return f"{x:.17g}"


def trajectory_csv_text(traj: Trajectory) -> str:
    lines = [TRAJECTORY_HEADER]
    lines += [",".join(fmt(v) for v in row) for row in traj.rows()]
    return "\n".join(lines) + "\n"


def write_trajectory_csv(traj: Trajectory, path) -> Path:
    path = Path(path)
    path.write_text(trajectory_csv_text(traj))
    return path


def snapshot_path(base, t: float) -> Path:
    base = Path(base)
    return base.with_name(f"{base.stem}_t{t:g}.csv")


def write_snapshots(traj: Trajectory, base) -> list[Path]:
    """One ``x,Q`` file per stored snapshot, named ``<stem>_t<days>.csv``."""
    if traj.grid is None:
        raise ValueError("trajectory carries no grid")
    paths = []
    for t, q in sorted(traj.snapshots.items()):
        path = snapshot_path(base, t)
        lines = ["x,Q"] + [f"{fmt(x)},{fmt(v)}" for x, v in zip(traj.grid.centers, q)]
        path.write_text("\n".join(lines) + "\n")
        paths.append(path)
    return paths


def write_kv(pairs: dict[str, str], path) -> Path:
    path = Path(path)
    path.write_text("".join(f"{k}={v}\n" for k, v in pairs.items()))
    return path
