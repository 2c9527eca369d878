"""Efficient Monte Carlo time stepping."""
from __future__ import annotations

import logging
import time as _time

import numpy as np

from . import rng as rngmod
from .macro import T_FLOOR, FluxTallies, MacroSolver, boundary_closure
from .particles import (BOUNDARY, CENSUS, EMISSION, GHOST_BOUNDARY, GHOST_CENSUS, ParticleBank,
                        class_counts, roulette, sample_surface, sample_volume, tilt_fields)
from .physics import group_planck
from .problem import Problem
from .settings import Settings
from .state import SimState, StepRecord
from .transport import boundary_kinds, track

log = logging.getLogger(__name__)


class StepError(RuntimeError):
    def __init__(self, step: int, err: Exception):
        super().__init__(f"step {step}: {err}")
        self.step = step
        self.__cause__ = err


def census_energy_field(problem: Problem, T) -> np.ndarray:
    """E^I = 4 pi B_g(T) dV / c per (cell, group)."""
    T = np.asarray(T, dtype=float)
    out = np.zeros((T.size, problem.G))
    hot = T > 0
    if hot.any():
        B = group_planck(problem.grid, T[hot], consts=problem.consts)
        out[hot] = 4 * np.pi * B * problem.mesh.volume[hot, None] / problem.consts.c
    return out


def sample_initial_census(problem: Problem, T0, n: int, seed: int) -> ParticleBank:
    E = census_energy_field(problem, T0)
    g = rngmod.stream(seed, 0, rngmod.CENSUS_INIT)
    return sample_volume(problem.mesh, E, n, g, 0.0, None, CENSUS)


def planck_surface_energy(problem: Problem, faces, B, dt: float) -> np.ndarray:
    """pi dt B_g |S| per (face, group)."""
    area = problem.mesh.face_area[faces]
    return np.pi * dt * B * area[:, None]


class EMCSolver:
    name = "emc"

    def __init__(self, problem: Problem, settings: Settings):
        self.p = problem
        self.s = settings
        self.bc_kinds = boundary_kinds(problem.boundaries)
        self._macro = {}
        self.picard_log: list = []

    def macro(self, dt: float) -> MacroSolver:
        if dt not in self._macro:
            s = self.s
            self._macro[dt] = MacroSolver(self.p, dt, s.theta_form, s.gamma, s.max_iter)
        return self._macro[dt]

    def initial_state(self, T0) -> SimState:
        T0 = np.broadcast_to(np.asarray(T0, dtype=float), (self.p.n_cells,)).copy()
        n0 = self.s.budget if self.s.census_particles is None else self.s.census_particles
        census = sample_initial_census(self.p, T0, n0, self.s.seed)
        return SimState(0.0, 0, T0, census)

    def step(self, state: SimState, dt: float | None = None, t_end: float | None = None):
        try:
            return self._step(state, dt, t_end)
        except Exception as err:   # attach the step index
            if isinstance(err, StepError):
                raise
            raise StepError(state.step, err) from err

    def _step(self, state: SimState, dt, t_end):
        t_wall = _time.perf_counter()
        p, s = self.p, self.s
        m = p.mesh
        dt = s.dt if dt is None else float(dt)
        t0 = state.time
        t1 = t0 + dt if t_end is None else float(t_end)
        n = state.step
        c = p.consts.c
        V = m.volume
        T_n = state.T
        G = p.G

        # (1) opacities and Planck fields at t^n
        sig_n = p.sigma(T_n)
        B_n = group_planck(p.grid, T_n, consts=p.consts)
        bc = boundary_closure(p, T_n)

        # (2) sources
        pf = p.planck_faces()
        if pf.size:
            Tbc = np.array([p.boundaries[int(sd)].T_bc for sd in m.face_side[pf]])
            E_bnd = planck_surface_energy(p, pf, group_planck(p.grid, Tbc, consts=p.consts), dt)
        else:
            E_bnd = np.zeros((0, G))
        E_gc = 4 * np.pi * B_n * V[:, None] / c
        E_gb = planck_surface_energy(p, bc.faces, bc.B, dt) if bc.faces.size else np.zeros((0, G))
        E_em_est = 4 * np.pi * sig_n * B_n * V[:, None] * dt
        counts = class_counts([E_bnd.sum(), E_gc.sum(), E_gb.sum(), E_em_est.sum()], s.budget)

        bnd, bnd_face = sample_surface(m, pf, E_bnd, counts[0],
                                       rngmod.stream(s.seed, n, rngmod.BOUNDARY), t0, t1, BOUNDARY)
        ghc = sample_volume(m, E_gc, counts[1], rngmod.stream(s.seed, n, rngmod.GHOST_CENSUS),
                            t0, None, GHOST_CENSUS)
        ghb, _ = sample_surface(m, bc.faces, E_gb, counts[2],
                                rngmod.stream(s.seed, n, rngmod.GHOST_BOUNDARY), t0, t1,
                                GHOST_BOUNDARY)
        census = state.census
        E_census0 = census.energy(p.n_cells, G)
        bank = ParticleBank.concat([census, bnd, ghc, ghb])

        # (3) track census, boundary and ghost particles with sigma(T^n)
        tal, alive = track(bank, m, sig_n, t1, c, self.bc_kinds, seed=s.seed, step=n,
                           n_chunks=s.chunks)
        # boundary births cross the boundary face inward
        if len(bnd):
            sign = np.where(m.face_hi[bnd_face] >= 0, 1.0, -1.0)
            np.add.at(tal.flux, (bnd_face, bnd.group), sign * bnd.w)
        fluxes = FluxTallies(tal.flux / dt, tal.ghost_plus / dt, tal.ghost_minus / dt)

        # (4) macroscopic solve
        rho_n = c * E_census0 / V[:, None]
        plog: list = []
        res = self.macro(dt).solve(T_n, rho_n, fluxes, bc, log=plog)
        self.picard_log.extend((n, it, inc) for it, inc in plog)

        # (5)-(7) emission from the macro temperature
        sig_1 = p.sigma(res.T)
        B_1 = group_planck(p.grid, res.T, consts=p.consts)
        E_R = 4 * np.pi * sig_1 * B_1 * V[:, None] * dt
        slopes = tilt_fields(m, B_1) if s.tilt else None
        n_em = counts[3] if E_R.sum() > 0 else 0
        if E_R.sum() > 0 and n_em == 0 and s.budget > 0:
            n_em = 1
        emi = sample_volume(m, E_R, n_em, rngmod.stream(s.seed, n, rngmod.EMISSION), t0, t1,
                            EMISSION, slopes)
        E_emitted = emi.energy(p.n_cells, G)

        # (8) track emission with sigma(T^{n+1})
        tal2, alive2 = track(emi, m, sig_1, t1, c, self.bc_kinds, seed=s.seed, step=n,
                             n_chunks=s.chunks)

        # (9) update from tallies
        absorbed = tal.absorbed + tal.cut + tal2.absorbed + tal2.cut
        T_new = T_n + np.sum(absorbed - E_emitted, axis=1) / (p.cv * V)
        low = T_new < T_FLOOR
        floor_energy = float(np.sum((T_FLOOR - T_new[low]) * p.cv[low] * V[low]))
        if low.any():
            log.warning("step %d: %d cells below the temperature floor", n, int(low.sum()))
            T_new[low] = T_FLOOR
        new_census = ParticleBank.concat([bank.take(alive), emi.take(alive2)])
        E_census1 = tal.census + tal2.census
        roulette_energy = 0.0
        if s.roulette and len(new_census) > 4 * max(s.budget, 1):
            before = new_census.w.sum()
            new_census = roulette(new_census, p.n_cells, G, 2 * s.budget,
                                  rngmod.stream(s.seed, n, rngmod.ROULETTE))
            roulette_energy = float(new_census.w.sum() - before)

        sampled = E_census0.sum(axis=0) + _by_group(bnd, G) + _by_group(emi, G)
        rec = StepRecord(
            step=n, time=t1, dt=t1 - t0, picard_iterations=res.iterations,
            increments=res.increments, sampled=sampled, absorbed=absorbed.sum(axis=0),
            census=E_census1.sum(axis=0),
            leaked=tal.leak.sum(axis=0) + tal2.leak.sum(axis=0),
            injected=float(_by_group(bnd, G).sum()), emitted=float(E_emitted.sum()),
            deposited=float(absorbed.sum()), floor_energy=floor_energy,
            roulette_energy=roulette_energy, floored=int(low.sum()) + res.floored,
            particles={"census": len(census), "boundary": len(bnd), "ghost_census": len(ghc),
                       "ghost_boundary": len(ghb), "emission": len(emi)},
            wall=_time.perf_counter() - t_wall)
        return SimState(t1, n + 1, T_new, new_census), rec


def _by_group(bank: ParticleBank, G: int) -> np.ndarray:
    return np.bincount(bank.group, weights=bank.w0, minlength=G)
