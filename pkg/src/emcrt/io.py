"""CSV output and gnuplot helpers.

Floats are written with ``repr`` so any emitted file parses back to the
same bits, independent of locale.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .problem import Problem


class OutputError(OSError):
    pass


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_rows(path, header, rows) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as err:
        raise OutputError(f"cannot write {path}: {err.strerror or err}") from err
    return path


def read_csv(path):
    """Header list and float array (one row per line)."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as err:
        raise OutputError(f"cannot read {path}: {err.strerror or err}") from err
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(len(body), len(header))
    return header, data


def snapshot_table(problem: Problem, snap, groups: bool = False):
    m = problem.mesh
    if m.dim == 1:
        header = ["x_center", "T_material", "T_radiation"]
        cols = [m.x_center, snap.T, snap.T_rad]
    else:
        header = ["x", "y", "T_material", "T_radiation"]
        cols = [m.x_center, m.y_center, snap.T, snap.T_rad]
    if groups:
        header += [f"rho_{g}" for g in range(problem.G)]
        cols += [snap.rho[:, g] for g in range(problem.G)]
    return header, np.column_stack(cols)


def write_snapshot(path, problem: Problem, snap, groups: bool = False) -> Path:
    header, table = snapshot_table(problem, snap, groups)
    return write_rows(path, header, table.tolist())


def lineout_row(problem: Problem, y: float) -> np.ndarray:
    """Cells of the mesh row whose y-range holds ``y``; the top edge maps to the last row."""
    m = problem.mesh
    if m.dim != 2:
        raise ValueError("lineouts need a 2D mesh")
    ye = m.y_edges
    if not ye[0] <= y <= ye[-1]:
        raise ValueError(f"lineout y = {y} outside [{ye[0]}, {ye[-1]}]")
    j = min(int(np.searchsorted(ye, y, side="right")) - 1, m.ny - 1)
    return j * m.nx + np.arange(m.nx)


def write_lineout(path, problem: Problem, snap, y: float) -> Path:
    cells = lineout_row(problem, y)
    rows = zip(problem.mesh.x_center[cells], snap.T[cells], snap.T_rad[cells])
    return write_rows(path, ["x", "T_material", "T_radiation"], rows)


def write_diagnostics(path, records) -> Path:
    header = ["step", "time", "dt", "picard_iterations", "sampled", "absorbed", "census", "leaked",
              "injected", "emitted", "conservation_error", "floored", "particles", "wall"]

    def tot(a):
        return 0.0 if a is None else float(np.sum(a))

    rows = ([r.step, r.time, r.dt, r.picard_iterations, tot(r.sampled), tot(r.absorbed),
             tot(r.census), tot(r.leaked), r.injected, r.emitted, r.conservation_error(),
             r.floored, sum(r.particles.values()), r.wall] for r in records)
    return write_rows(path, header, rows)


def write_picard_log(path, entries) -> Path:
    return write_rows(path, ["step", "iteration", "increment_l1"], entries)


def write_tallies(path, E_I, E_A) -> Path:
    n, G = E_I.shape
    rows = ((i, g, E_I[i, g], E_A[i, g]) for i in range(n) for g in range(G))
    return write_rows(path, ["cell", "group", "E_I", "E_A"], rows)


def write_gnuplot(prefix, problem: Problem, snap, title: str = "") -> tuple[Path, Path]:
    """Data file plus a gnuplot script that plots it."""
    prefix = Path(prefix)
    data = write_snapshot(prefix.with_suffix(".csv"), problem, snap)
    script = prefix.with_suffix(".gp")
    name = data.name
    if problem.mesh.dim == 1:
        body = (f"set datafile separator ','\nset key autotitle columnhead\n"
                f"set xlabel 'x [cm]'\nset ylabel 'T [keV]'\nset title '{title}'\n"
                f"plot '{name}' using 1:2 with lines, '' using 1:3 with lines\n")
    else:
        body = (f"set datafile separator ','\nset view map\nset xlabel 'x [cm]'\n"
                f"set ylabel 'y [cm]'\nset title '{title}'\n"
                f"splot '{name}' every ::1 using 1:2:3 with points pointtype 5 palette notitle\n")
    try:
        script.write_text(body)
    except OSError as err:
        raise OutputError(f"cannot write {script}: {err.strerror or err}") from err
    return data, script
