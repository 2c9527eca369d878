"""Command line: ``emcrt run | preset | fom | compare``.

Exit codes: 0 success, 1 configuration error, 2 solver failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .driver import run
from .harness import compare, fom_harness
from .io import OutputError, write_diagnostics, write_gnuplot, write_lineout, write_picard_log, write_snapshot
from .mesh import MeshError
from .presets import PRESETS, preset

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2


def _write_run(res, out: Path, groups: bool) -> None:
    p = res.problem
    for snap in res.snapshots:
        write_snapshot(out / f"snapshot_{snap.step:06d}.csv", p, snap, groups)
        for y in res.config.lineouts:
            write_lineout(out / f"lineout_y{y:g}_{snap.step:06d}.csv", p, snap, y)
    write_diagnostics(out / "diagnostics.csv", res.records)
    if res.picard_log:
        write_picard_log(out / "picard.csv", res.picard_log)
    write_gnuplot(out / "final", p, res.final, title=f"{res.config.name} t = {res.final.time:g} ns")


def _report(res) -> None:
    iters = max((r.picard_iterations for r in res.records), default=0)
    print(f"{res.config.name}: solver={res.config.solver} cells={res.problem.n_cells} "
          f"groups={res.problem.G} steps={len(res.records)} CFL={res.cfl:.4g}")
    print(f"  t_end={res.final.time:g} ns  wall={res.wall:.3f} s  max picard iterations={iters}")


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    res = run(cfg)
    _report(res)
    if args.out:
        _write_run(res, Path(args.out), args.groups)
    return EXIT_OK


def cmd_preset(args) -> int:
    cfg = preset(args.name, desk=args.desk)
    if args.solver:
        cfg = cfg.replace(solver=args.solver)
    if args.write:
        cfg.save(args.write)
    elif not args.run:
        sys.stdout.write(cfg.dump())
    if args.run:
        res = run(cfg)
        _report(res)
        if args.out:
            _write_run(res, Path(args.out), args.groups)
    return EXIT_OK


def cmd_fom(args) -> int:
    if args.replicas < 2:
        raise ConfigError("--replicas must be at least 2")
    cfg = load_config(args.config)
    rep = fom_harness(cfg, args.replicas)
    print(f"replicas={rep.replicas} wall={rep.wall:.3f} s  "
          f"var_Tm={rep.mean_var_Tm:.6g} var_Tr={rep.mean_var_Tr:.6g}  "
          f"FOM_Tm={rep.fom_Tm:.6g} FOM_Tr={rep.fom_Tr:.6g}")
    if args.out:
        rep.write(args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    a, b = load_config(args.config_a), load_config(args.config_b)
    cmp_ = compare(a, b)
    print(f"wall A={cmp_.wall_a:.3f} s  wall B={cmp_.wall_b:.3f} s  ratio A/B={cmp_.wall_ratio:.4g}")
    print(f"L1(T_m)={cmp_.l1_Tm:.6g}  L1(T_r)={cmp_.l1_Tr:.6g}  relative L1(T_m)={cmp_.rel_l1_Tm:.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="emcrt", description="Frequency-dependent thermal radiative transfer")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a configuration file")
    r.add_argument("config")
    r.add_argument("--out", help="directory for CSV output")
    r.add_argument("--groups", action="store_true", help="add per-group rho columns")
    r.set_defaults(func=cmd_run)

    p = sub.add_parser("preset", help="print, write or run a benchmark preset")
    p.add_argument("name", choices=PRESETS)
    p.add_argument("--desk", action="store_true", help="desk-scale profile")
    p.add_argument("--solver", choices=("emc", "imc", "diffusion"))
    p.add_argument("--write", help="save the configuration to this file")
    p.add_argument("--run", action="store_true")
    p.add_argument("--out")
    p.add_argument("--groups", action="store_true")
    p.set_defaults(func=cmd_preset)

    f = sub.add_parser("fom", help="figure of merit over independent replicas")
    f.add_argument("config")
    f.add_argument("--replicas", type=int, required=True)
    f.add_argument("--out", help="FOM report CSV")
    f.set_defaults(func=cmd_fom)

    c = sub.add_parser("compare", help="run two configurations and compare")
    c.add_argument("config_a")
    c.add_argument("config_b")
    c.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, MeshError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OutputError as err:
        print(f"output error: {err}", file=sys.stderr)
        return EXIT_SOLVER
    except (RuntimeError, ArithmeticError, ValueError) as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
