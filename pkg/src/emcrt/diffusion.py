"""Implicit equilibrium-diffusion reference solver.

Solves C_v dT/dt + (1/c) d/dt sum_g b_g(T) phi = div(kappa grad phi) with
phi = a c T^4 and kappa = (1/3) sum_g coef_g(T_f) / sigma_g,f, which is
ac / (3 sigma_R) in T^4 form for full-span groups.

Two time discretizations are offered:

* ``picard``: a quasilinear predictor for phi followed by a per-cell
  nonlinear corrector, iterated to convergence. This is the optically
  thick limit of the particle scheme's macroscopic solver.
* ``newton``: fully implicit backward Euler solved by Newton's method.
"""
from __future__ import annotations

import time as _time

import numpy as np

from .emc import census_energy_field
from .macro import NEWTON_TOL, PicardError, linear_solve, solve_correction
from .mesh import _harmonic, interface_temperature
from .particles import ParticleBank
from .physics import derivative_coefficient, group_fraction
from .problem import Problem
from .state import SimState, StepRecord

NEWTON_OUTER_MAX = 100


class DiffusionError(RuntimeError):
    pass


class _Operator:
    def __init__(self, problem: Problem):
        self.p = problem
        m = problem.mesh
        fi = m.interior_faces()
        self.lo, self.hi = m.face_lo[fi], m.face_hi[fi]
        self.d_lo, self.d_hi = m.face_half_lo[fi], m.face_half_hi[fi]
        self.g_i = (m.face_area / m.face_distance)[fi]
        ob = problem.open_faces()
        self.bf = ob
        self.bcell = m.face_cell(ob)
        self.b_area = m.face_area[ob]
        self.b_half = m.face_distance[ob]
        self.phi_in = problem.inflow_phi(ob)
        self.vol = m.volume
        self.banded = m.dim == 1

    def kappa_faces(self, T_lo, T_hi):
        p = self.p
        s_lo, s_hi = p.sigma(T_lo, self.lo), p.sigma(T_hi, self.hi)
        s_f = _harmonic(s_lo, s_hi, self.d_lo[:, None], self.d_hi[:, None])
        T_f = interface_temperature(T_lo, T_hi, self.d_lo, self.d_hi)
        coef = derivative_coefficient(p.grid, T_f)
        with np.errstate(divide="ignore", invalid="ignore"):
            k = np.where(s_f > 0, coef / (3.0 * s_f), 0.0)
        return k.sum(axis=1)

    def kappa_cells(self, T, cells):
        p = self.p
        s = p.sigma(T, cells)
        coef = derivative_coefficient(p.grid, T)
        with np.errstate(divide="ignore", invalid="ignore"):
            k = np.where(s > 0, coef / (3.0 * s), 0.0)
        return k.sum(axis=1)

    def face_weights(self, T):
        """Interior conductances and Marshak boundary conductances."""
        w_i = self.kappa_faces(T[self.lo], T[self.hi]) * self.g_i
        if self.bf.size:
            w_b = self.boundary_weights(T[self.bcell])
        else:
            w_b = np.zeros(0)
        return w_i, w_b

    def boundary_weights(self, Tb):
        # kappa at the half-face state (phi_in + phi_i) / 2
        ac = self.p.consts.ac
        T_half = ((0.5 * (self.phi_in + ac * Tb**4)) / ac) ** 0.25
        kb = self.kappa_cells(T_half, self.bcell)
        with np.errstate(divide="ignore"):
            return self.b_area / (2.0 + np.where(kb > 0, self.b_half / kb, np.inf))

    def outward(self, phi, w_i, w_b):
        out = np.zeros(self.p.n_cells)
        flow = w_i * (phi[self.hi] - phi[self.lo])
        np.add.at(out, self.lo, -flow)
        np.add.at(out, self.hi, flow)
        if self.bf.size:
            np.add.at(out, self.bcell, w_b * (phi[self.bcell] - self.phi_in))
        return out

    def triplets(self, diag, w_i, w_b, rhs):
        lo, hi = self.lo, self.hi
        np.add.at(diag, lo, w_i)
        np.add.at(diag, hi, w_i)
        if self.bf.size:
            np.add.at(diag, self.bcell, w_b)
            np.add.at(rhs, self.bcell, w_b * self.phi_in)
        rows = np.concatenate([lo, hi])
        cols = np.concatenate([hi, lo])
        vals = -np.concatenate([w_i, w_i])
        return diag, rows, cols, vals, rhs


def diffusion_step(problem: Problem, T_n, dt: float, scheme: str = "picard",
                   gamma: float = 1e-8, max_iter: int = 50, op: _Operator | None = None):
    """Advance T by one step. Returns the new field and the iteration count."""
    T_n = np.asarray(T_n, dtype=float)
    if np.any(~(T_n > 0)):
        raise DiffusionError("diffusion step needs positive temperatures")
    op = op or _Operator(problem)
    if scheme == "picard":
        return _picard(problem, op, T_n, dt, gamma, max_iter)
    if scheme == "newton":
        return _newton(problem, op, T_n, dt)
    raise ValueError(f"unknown diffusion scheme {scheme!r}")


def _picard(p: Problem, op: _Operator, T_n, dt, gamma, max_iter):
    ac = p.consts.ac
    c = p.consts.c
    V = op.vol
    phi_n = ac * T_n**4
    b_n = np.sum(group_fraction(p.grid, T_n), axis=1)
    e_n = b_n * phi_n / c
    ones = np.ones((T_n.size, p.G))
    k = p.consts.a * p.consts.cp / c / p.cv
    T_k = T_n.copy()
    for it in range(1, max_iter + 1):
        b_k = np.sum(group_fraction(p.grid, T_k), axis=1)
        m_k = p.cv / (4.0 * ac * T_k**3)
        diag = V * (m_k / dt + b_k / (c * dt))
        rhs = V * (m_k * phi_n / dt + e_n / dt)
        w_i, w_b = op.face_weights(T_k)
        system = op.triplets(diag, w_i, w_b, rhs)
        phi_h = linear_solve(*system, op.banded)
        phi_h = np.maximum(phi_h, ac * 1e-24)
        T_h = (phi_h / ac) ** 0.25
        w_i, w_b = op.face_weights(T_h)
        div = op.outward(phi_h, w_i, w_b)
        A = T_n + k * b_n * T_n**4 - dt * div / (p.cv * V)
        T_new, _ = solve_correction(A, ones, k, p.grid, T_h)
        inc = float(np.sum(np.abs(T_new - T_k)))
        T_k = T_new
        if inc < gamma:
            return T_k, it
    raise PicardError(f"diffusion Picard did not converge in {max_iter} iterations")


def _newton(p: Problem, op: _Operator, T_n, dt):
    ac = p.consts.ac
    c = p.consts.c
    V = op.vol
    cv = p.cv
    kk = p.consts.a * p.consts.cp / c

    def energy(T):
        return cv * T + kk * np.sum(group_fraction(p.grid, T), axis=1) * T**4

    def denergy(T):
        return cv + 4.0 * kk * np.sum(derivative_coefficient(p.grid, T), axis=1) * T**3

    e_n = energy(T_n)
    T = T_n.copy()
    for it in range(1, NEWTON_OUTER_MAX + 1):
        phi = ac * T**4
        dphi = 4.0 * ac * T**3
        w_i, w_b = op.face_weights(T)
        R = V * (energy(T) - e_n) / dt + op.outward(phi, w_i, w_b)
        # coefficient sensitivities by one-sided differences
        h = 1e-7 * T
        lo, hi = op.lo, op.hi
        dk_lo = (op.kappa_faces(T[lo] + h[lo], T[hi]) * op.g_i - w_i) / h[lo]
        dk_hi = (op.kappa_faces(T[lo], T[hi] + h[hi]) * op.g_i - w_i) / h[hi]
        jump = phi[hi] - phi[lo]
        diag = V * denergy(T) / dt
        np.add.at(diag, lo, w_i * dphi[lo] - dk_lo * jump)
        np.add.at(diag, hi, w_i * dphi[hi] + dk_hi * jump)
        rows = np.concatenate([lo, hi])
        cols = np.concatenate([hi, lo])
        vals = np.concatenate([-w_i * dphi[hi] - dk_hi * jump, -w_i * dphi[lo] + dk_lo * jump])
        if op.bf.size:
            cb = op.bcell
            Tb = T[cb]
            hb = 1e-7 * Tb
            dwb = (op.boundary_weights(Tb + hb) - w_b) / hb
            np.add.at(diag, cb, w_b * dphi[cb] + dwb * (phi[cb] - op.phi_in))
        dT = linear_solve(diag, rows, cols, vals, -R, op.banded)
        lam = 1.0
        while np.any(T + lam * dT <= 0.0) and lam > 1e-12:
            lam *= 0.5
        T = T + lam * dT
        if np.max(np.abs(lam * dT)) < max(NEWTON_TOL, 8 * np.finfo(float).eps * T.max()):
            return T, it
    raise DiffusionError(f"diffusion Newton did not converge in {NEWTON_OUTER_MAX} iterations")


class DiffusionSolver:
    name = "diffusion"

    def __init__(self, problem: Problem, settings, scheme: str = "picard"):
        self.p = problem
        self.s = settings
        self.scheme = scheme
        self.op = _Operator(problem)
        self.picard_log: list = []

    def initial_state(self, T0) -> SimState:
        T0 = np.broadcast_to(np.asarray(T0, dtype=float), (self.p.n_cells,)).copy()
        return SimState(0.0, 0, T0, ParticleBank.empty(), census_energy_field(self.p, T0))

    def step(self, state: SimState, dt: float | None = None, t_end: float | None = None):
        t_wall = _time.perf_counter()
        dt = self.s.dt if dt is None else float(dt)
        t1 = state.time + dt if t_end is None else float(t_end)
        T, it = diffusion_step(self.p, state.T, t1 - state.time, self.scheme, self.s.gamma,
                               self.s.max_iter, self.op)
        rec = StepRecord(step=state.step, time=t1, dt=t1 - state.time, picard_iterations=it,
                         wall=_time.perf_counter() - t_wall)
        return SimState(t1, state.step + 1, T, ParticleBank.empty(),
                        census_energy_field(self.p, T)), rec
