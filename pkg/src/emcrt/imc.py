"""Fleck-Cummings implicit Monte Carlo with continuous deposition."""
from __future__ import annotations

import logging
import time as _time

import numpy as np

from . import rng as rngmod
from .emc import StepError, _by_group, planck_surface_energy, sample_initial_census
from .macro import T_FLOOR
from .particles import (BOUNDARY, EMISSION, ParticleBank, class_counts, roulette, sample_surface,
                        sample_volume, tilt_fields)
from .physics import group_fraction, group_planck
from .problem import Problem
from .settings import Settings
from .state import SimState, StepRecord
from .transport import boundary_kinds, track

log = logging.getLogger(__name__)


def fleck_factor(T, cv, sigma_p, dt: float, a: float, c: float, alpha: float = 1.0):
    """f = 1 / (1 + alpha beta c sigma_P dt) with beta = 4 a T^3 / C_v."""
    beta = 4.0 * a * np.asarray(T, dtype=float) ** 3 / cv
    return 1.0 / (1.0 + alpha * beta * c * sigma_p * dt)


def planck_mean(sigma, b):
    return np.sum(sigma * b, axis=-1)


class IMCSolver:
    name = "imc"

    def __init__(self, problem: Problem, settings: Settings):
        self.p = problem
        self.s = settings
        self.bc_kinds = boundary_kinds(problem.boundaries)
        self.picard_log: list = []

    def initial_state(self, T0) -> SimState:
        T0 = np.broadcast_to(np.asarray(T0, dtype=float), (self.p.n_cells,)).copy()
        n0 = self.s.budget if self.s.census_particles is None else self.s.census_particles
        return SimState(0.0, 0, T0, sample_initial_census(self.p, T0, n0, self.s.seed))

    def step(self, state: SimState, dt: float | None = None, t_end: float | None = None):
        try:
            return self._step(state, dt, t_end)
        except Exception as err:
            raise StepError(state.step, err) from err

    def _step(self, state: SimState, dt, t_end):
        t_wall = _time.perf_counter()
        p, s = self.p, self.s
        m = p.mesh
        dt = s.dt if dt is None else float(dt)
        t0 = state.time
        t1 = t0 + dt if t_end is None else float(t_end)
        n = state.step
        c, a = p.consts.c, p.consts.a
        V = m.volume
        T_n = state.T
        G = p.G

        sig = p.sigma(T_n)
        b = group_fraction(p.grid, T_n)
        B = group_planck(p.grid, T_n, consts=p.consts)
        f = fleck_factor(T_n, p.cv, planck_mean(sig, b), dt, a, c, s.alpha)
        E_em = f[:, None] * 4 * np.pi * sig * B * V[:, None] * dt

        pf = p.planck_faces()
        if pf.size:
            Tbc = np.array([p.boundaries[int(sd)].T_bc for sd in m.face_side[pf]])
            E_bnd = planck_surface_energy(p, pf, group_planck(p.grid, Tbc, consts=p.consts), dt)
        else:
            E_bnd = np.zeros((0, G))
        counts = class_counts([E_bnd.sum(), E_em.sum()], s.budget)
        bnd, _ = sample_surface(m, pf, E_bnd, counts[0],
                                rngmod.stream(s.seed, n, rngmod.BOUNDARY), t0, t1, BOUNDARY)
        slopes = tilt_fields(m, B) if s.tilt else None
        emi = sample_volume(m, E_em, counts[1], rngmod.stream(s.seed, n, rngmod.EMISSION), t0, t1,
                            EMISSION, slopes)
        E_emitted = emi.energy(p.n_cells, G)
        census = state.census
        E_census0 = census.energy(p.n_cells, G)
        bank = ParticleBank.concat([census, bnd, emi])

        # re-emission spectrum proportional to sigma_g B_g(T^n)
        w = sig * B
        tot = w.sum(axis=1, keepdims=True)
        cdf = np.divide(np.cumsum(w, axis=1), tot, out=np.tile(np.linspace(1.0 / G, 1.0, G), (p.n_cells, 1)),
                        where=tot > 0)
        cdf[:, -1] = 1.0
        tal, alive = track(bank, m, f[:, None] * sig, t1, c, self.bc_kinds,
                           sigma_scat=(1.0 - f)[:, None] * sig, scat_cdf=cdf, seed=s.seed,
                           step=n, n_chunks=s.chunks)

        absorbed = tal.absorbed + tal.cut
        T_new = T_n + np.sum(absorbed - E_emitted, axis=1) / (p.cv * V)
        low = T_new < T_FLOOR
        floor_energy = float(np.sum((T_FLOOR - T_new[low]) * p.cv[low] * V[low]))
        if low.any():
            log.warning("step %d: %d cells below the temperature floor", n, int(low.sum()))
            T_new[low] = T_FLOOR
        new_census = bank.take(alive)
        roulette_energy = 0.0
        if s.roulette and len(new_census) > 4 * max(s.budget, 1):
            before = new_census.w.sum()
            new_census = roulette(new_census, p.n_cells, G, 2 * s.budget,
                                  rngmod.stream(s.seed, n, rngmod.ROULETTE))
            roulette_energy = float(new_census.w.sum() - before)
        rec = StepRecord(
            step=n, time=t1, dt=t1 - t0,
            sampled=E_census0.sum(axis=0) + _by_group(bnd, G) + _by_group(emi, G),
            absorbed=absorbed.sum(axis=0), census=tal.census.sum(axis=0),
            leaked=tal.leak.sum(axis=0), injected=float(_by_group(bnd, G).sum()),
            emitted=float(E_emitted.sum()), deposited=float(absorbed.sum()),
            floor_energy=floor_energy, roulette_energy=roulette_energy, floored=int(low.sum()),
            particles={"census": len(census), "boundary": len(bnd), "emission": len(emi)},
            collisions=tal.collisions, group_mixing=G > 1, wall=_time.perf_counter() - t_wall)
        return SimState(t1, n + 1, T_new, new_census), rec
