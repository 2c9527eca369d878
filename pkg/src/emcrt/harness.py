"""Figure-of-merit replicas, run comparison and the optically thick scaling."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .driver import run
from .io import write_rows
from .physics import PhysicalConstants
from .problem import Problem, Region

INF = math.inf


@dataclass
class FomReport:
    var_Tm: np.ndarray           # per-cell variance across replicas
    var_Tr: np.ndarray
    wall: float                  # mean wall time of one replica [s]
    replicas: int

    @property
    def mean_var_Tm(self) -> float:
        return float(np.mean(self.var_Tm))

    @property
    def mean_var_Tr(self) -> float:
        return float(np.mean(self.var_Tr))

    @property
    def fom_Tm(self) -> float:
        return fom(self.mean_var_Tm, self.wall)

    @property
    def fom_Tr(self) -> float:
        return fom(self.mean_var_Tr, self.wall)

    def write(self, path):
        rows = [[i, a, b, "", "", ""] for i, (a, b) in enumerate(zip(self.var_Tm, self.var_Tr))]
        rows.append(["summary", self.mean_var_Tm, self.mean_var_Tr, self.wall, self.fom_Tm,
                     self.fom_Tr])
        return write_rows(path, ["cell", "var_Tm", "var_Tr", "wall", "fom_Tm", "fom_Tr"], rows)


def fom(var: float, wall: float) -> float:
    """1 / (Var t); zero variance gives the infinity sentinel."""
    if var == 0.0:
        return INF
    return 1.0 / (var * wall)


def fom_harness(cfg: RunConfig, replicas: int, seeds=None) -> FomReport:
    if replicas < 2:
        raise ValueError("the FOM harness needs at least 2 replicas")
    seeds = list(seeds) if seeds is not None else [cfg.seed + r for r in range(replicas)]
    if len(seeds) != replicas:
        raise ValueError("one seed per replica")
    Tm, Tr, walls = [], [], []
    for s in seeds:
        res = run(cfg.replace(seed=int(s)))
        Tm.append(res.final.T)
        Tr.append(res.final.T_rad)
        walls.append(res.wall)
    return FomReport(np.var(Tm, axis=0, ddof=1), np.var(Tr, axis=0, ddof=1),
                     float(np.mean(walls)), replicas)


@dataclass
class Comparison:
    wall_a: float
    wall_b: float
    l1_Tm: float                  # volume-weighted mean |dT|
    l1_Tr: float
    rel_l1_Tm: float

    @property
    def wall_ratio(self) -> float:
        return self.wall_a / self.wall_b if self.wall_b > 0 else INF


def l1_difference(a, b, volume) -> float:
    return float(np.sum(np.abs(a - b) * volume) / np.sum(volume))


def relative_l1(a, ref, volume) -> float:
    return float(np.sum(np.abs(a - ref) * volume) / np.sum(np.abs(ref) * volume))


def compare(cfg_a: RunConfig, cfg_b: RunConfig) -> Comparison:
    ra, rb = run(cfg_a), run(cfg_b)
    ma, mb = ra.problem.mesh, rb.problem.mesh
    if ma != mb:
        raise ValueError("compare needs identical meshes")
    V = ma.volume
    fa, fb = ra.final, rb.final
    return Comparison(ra.wall, rb.wall, l1_difference(fa.T, fb.T, V),
                      l1_difference(fa.T_rad, fb.T_rad, V), relative_l1(fa.T, fb.T, V))


@dataclass(frozen=True)
class ScaledOpacity:
    """An opacity model multiplied by a constant factor."""
    base: object
    factor: float

    def group_average(self, grid, T):
        return self.factor * self.base.group_average(grid, T)


def scaled_problem(problem: Problem, eps: float) -> Problem:
    """Thick-limit scaling: sigma -> sigma/eps, c -> c/eps, C_v -> eps C_v.

    The emission term keeps the unscaled light speed, so phi = a c T^4 is
    unchanged.
    """
    k = problem.consts
    consts = PhysicalConstants(k.c / eps, k.a, c_planck=k.cp)
    regions = [Region(r.name, ScaledOpacity(r.opacity, 1.0 / eps), eps * r.cv, r.boxes)
               for r in problem.regions]
    return Problem(problem.mesh, problem.grid, regions, dict(problem.boundaries), consts)


__all__ = ["FomReport", "fom", "fom_harness", "Comparison", "compare", "l1_difference",
           "relative_l1", "ScaledOpacity", "scaled_problem", "INF"]
