"""Time loop over any of the three solvers."""
from __future__ import annotations

import logging
import math
import time as _time
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .diffusion import DiffusionSolver
from .emc import EMCSolver
from .imc import IMCSolver
from .problem import Problem

log = logging.getLogger(__name__)


@dataclass
class Snapshot:
    step: int
    time: float
    T: np.ndarray
    T_rad: np.ndarray
    rho: np.ndarray             # (cells, groups)


@dataclass
class RunResult:
    config: RunConfig
    problem: Problem
    snapshots: list = field(default_factory=list)
    records: list = field(default_factory=list)
    picard_log: list = field(default_factory=list)
    wall: float = 0.0
    cfl: float = 0.0
    initial_energy: float = 0.0
    final_energy: float = 0.0

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    def energy_ledger_error(self) -> float:
        """Relative mismatch of initial + injected - leaked vs final total energy."""
        inj = sum(r.injected for r in self.records)
        leak = sum(float(np.sum(r.leaked)) for r in self.records if r.leaked is not None)
        fix = sum(r.floor_energy + r.roulette_energy for r in self.records)
        lhs = self.initial_energy + inj - leak + fix
        scale = max(abs(self.initial_energy), abs(inj), abs(self.final_energy), 1e-300)
        return abs(lhs - self.final_energy) / scale


def cfl_number(problem: Problem, dt: float) -> float:
    m = problem.mesh
    h = m.dx.min() if m.dim == 1 else min(m.dx.min(), m.dy.min())
    return problem.consts.c * dt / h


def make_solver(cfg: RunConfig, problem: Problem | None = None):
    problem = problem or cfg.problem()
    settings = cfg.settings()
    if cfg.solver == "emc":
        return EMCSolver(problem, settings)
    if cfg.solver == "imc":
        return IMCSolver(problem, settings)
    return DiffusionSolver(problem, settings, cfg.diffusion_scheme)


def step_times(dt: float, t_end: float) -> np.ndarray:
    """Step end times n*dt, the last one clipped to t_end."""
    n = max(0, math.ceil(t_end / dt - 1e-9))
    t = dt * np.arange(1, n + 1, dtype=float)
    if n:
        t[-1] = t_end
    return t


def _total_energy(problem: Problem, state) -> float:
    return float(state.census_energy(problem).sum()) + state.material_energy(problem)


def snapshot_of(problem: Problem, state) -> Snapshot:
    return Snapshot(state.step, state.time, state.T.copy(), state.radiation_temperature(problem),
                    state.rho(problem))


def run(cfg: RunConfig, on_snapshot=None, on_step=None) -> RunResult:
    """Advance from t = 0 to t_end, collecting snapshots every ``snapshot_every`` steps."""
    if cfg.threads:
        import numba
        numba.set_num_threads(int(cfg.threads))
    problem = cfg.problem()
    solver = make_solver(cfg, problem)
    res = RunResult(cfg, problem, cfl=cfl_number(problem, cfg.dt))
    log.info("%s: %s solver, %d cells, %d groups, CFL %.3g", cfg.name, cfg.solver,
             problem.n_cells, problem.G, res.cfl)
    t_wall = _time.perf_counter()
    state = solver.initial_state(cfg.initial_temperature)
    res.initial_energy = _total_energy(problem, state)

    def emit(st):
        snap = snapshot_of(problem, st)
        res.snapshots.append(snap)
        if on_snapshot:
            on_snapshot(snap)

    emit(state)
    times = step_times(cfg.dt, cfg.t_end)
    for k, t1 in enumerate(times):
        dt = cfg.dt if k < len(times) - 1 else t1 - state.time
        state, rec = solver.step(state, dt=dt, t_end=float(t1))
        res.records.append(rec)
        if on_step:
            on_step(rec)
        last = k == len(times) - 1
        if last or (cfg.snapshot_every and (k + 1) % cfg.snapshot_every == 0):
            emit(state)
    res.wall = _time.perf_counter() - t_wall
    res.final_energy = _total_energy(problem, state)
    res.picard_log = list(solver.picard_log)
    return res
