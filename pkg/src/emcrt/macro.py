"""Finite-volume macroscopic solver driven by Monte Carlo flux tallies.

Per step, the convective face fluxes come from tallies and stay fixed while
a Picard loop alternates a linear prediction for phi = a c T^4 with a
per-cell Newton correction for T.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded
from scipy.sparse.linalg import spsolve

from .mesh import _harmonic, interface_temperature
from .physics import derivative_coefficient, group_fraction
from .problem import Problem

T_FLOOR = 1e-6
NEWTON_TOL = 1e-12
NEWTON_MAX = 100


class PicardError(RuntimeError):
    pass


class NewtonError(RuntimeError):
    def __init__(self, cell: int, residual: float):
        super().__init__(f"Newton failed in cell {cell}, residual {residual:.3e}")
        self.cell = cell
        self.residual = residual


def weight_theta(sigma, dt: float, c: float, form: str = "exp"):
    """Local weight theta in [0, 1]; both forms tend to 1 as sigma -> 0."""
    tau = c * np.asarray(sigma, dtype=float) * dt
    if form == "exp":
        return np.exp(-tau)
    if form == "inv_exp":
        with np.errstate(divide="ignore", over="ignore"):
            return -np.expm1(-1.0 / tau)
    raise ValueError(f"unknown theta form {form!r}")


def chi_factor(sigma, dt: float, c: float):
    sigma = np.asarray(sigma, dtype=float)
    return sigma / (1.0 / (c * dt) + sigma)


def _absorb_length(sigma, dt: float, c: float):
    # (1 - exp(-c sigma dt)) / sigma with the sigma -> 0 limit c dt
    sigma = np.asarray(sigma, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.expm1(-c * sigma * dt) / sigma
    return np.where(sigma > 0, out, c * dt)


def diffusion_coefficient(theta_ij, sigma_ij, dt: float, c: float, coef, half: bool = False):
    """D = (1 - theta)(1 - exp(-c sigma dt)) / (3 sigma) * coef; ``half`` uses 1/6."""
    k = 6.0 if half else 3.0
    return (1.0 - np.asarray(theta_ij)) * _absorb_length(sigma_ij, dt, c) / k * coef


def assemble_convective_flux(flux, ghost_plus, ghost_minus, theta_lo, theta_hi):
    """F^C = Fbar^I - (1 - theta_lo) Fbar^{B,+} - (1 - theta_hi) Fbar^{B,-} along each face normal."""
    return flux - (1.0 - theta_lo) * ghost_plus - (1.0 - theta_hi) * ghost_minus


@dataclass
class FluxTallies:
    """Time-averaged face fluxes [GJ/ns] per (face, group)."""
    flux: np.ndarray
    ghost_plus: np.ndarray
    ghost_minus: np.ndarray

    @classmethod
    def zeros(cls, n_faces: int, G: int) -> "FluxTallies":
        return cls(np.zeros((n_faces, G)), np.zeros((n_faces, G)), np.zeros((n_faces, G)))


@dataclass
class BoundaryClosure:
    """Half-cell equilibrium data on non-reflective boundary faces, fixed for a step."""
    faces: np.ndarray
    cells: np.ndarray
    inward: np.ndarray      # +1 when the domain lies on the positive side of the face
    phi: np.ndarray         # phi_{1/2}
    T: np.ndarray
    b: np.ndarray           # (nb, G)
    coef: np.ndarray        # (nb, G)
    B: np.ndarray           # (nb, G) = b phi / 4 pi


def boundary_closure(problem: Problem, T_n: np.ndarray) -> BoundaryClosure:
    m = problem.mesh
    faces = problem.open_faces()
    cells = m.face_cell(faces)
    inward = np.where(m.face_hi[faces] >= 0, 1.0, -1.0)
    ac = problem.consts.ac
    phi = 0.5 * (problem.inflow_phi(faces) + ac * T_n[cells] ** 4)
    T = (phi / ac) ** 0.25
    G = problem.G
    if faces.size:
        b = group_fraction(problem.grid, T)
        coef = derivative_coefficient(problem.grid, T)
    else:
        b = coef = np.zeros((0, G))
    return BoundaryClosure(faces, cells, inward, phi, T, b, coef, b * phi[:, None] / (4 * np.pi))


@dataclass
class PicardResult:
    T: np.ndarray
    rho: np.ndarray
    phi_half: np.ndarray
    iterations: int
    increments: list = field(default_factory=list)
    floored: int = 0


class MacroSolver:
    """Picard predictor-corrector for one step of the macroscopic system."""

    def __init__(self, problem: Problem, dt: float, theta_form: str = "exp",
                 gamma: float = 1e-8, max_iter: int = 50, check: bool = False):
        self.p = problem
        self.dt = float(dt)
        self.theta_form = theta_form
        self.gamma = float(gamma)
        self.max_iter = int(max_iter)
        self.check = check
        m = problem.mesh
        self.c = problem.consts.c
        self.vol = m.volume
        fi = m.interior_faces()
        self.fi = fi
        self.f_lo, self.f_hi = m.face_lo[fi], m.face_hi[fi]
        self.d_lo, self.d_hi = m.face_half_lo[fi], m.face_half_hi[fi]
        self.geo_i = (m.face_area / m.face_distance)[fi]
        cells, faces, signs = m.divergence_signs()
        self.div = sp.csr_matrix((signs, (cells, faces)), shape=(m.n_cells, m.n_faces))
        ob = problem.open_faces()
        self.geo_b = (m.face_area / m.face_distance)[ob]
        # face-side cells used for theta in the ghost terms
        self.side_lo = np.where(m.face_lo >= 0, m.face_lo, m.face_hi)
        self.side_hi = np.where(m.face_hi >= 0, m.face_hi, m.face_lo)
        self.banded = m.dim == 1

    # coefficient fields ------------------------------------------------------

    def coefficients(self, T):
        p = self.p
        sigma = p.sigma(T)
        theta = weight_theta(sigma, self.dt, self.c, self.theta_form)
        chi = chi_factor(sigma, self.dt, self.c)
        return sigma, theta, chi

    def conductances(self, T, sigma, theta, bc: BoundaryClosure):
        """K = D |S| / distance for interior and open boundary faces, per group."""
        lo, hi = self.f_lo, self.f_hi
        s_f = _harmonic(sigma[lo], sigma[hi], self.d_lo[:, None], self.d_hi[:, None])
        th_f = 0.5 * (theta[lo] + theta[hi])
        T_f = interface_temperature(T[lo], T[hi], self.d_lo, self.d_hi)
        coef_f = derivative_coefficient(self.p.grid, T_f)
        K_i = diffusion_coefficient(th_f, s_f, self.dt, self.c, coef_f) * self.geo_i[:, None]
        cb = bc.cells
        K_b = diffusion_coefficient(theta[cb], sigma[cb], self.dt, self.c, bc.coef,
                                    half=True) * self.geo_b[:, None]
        return K_i, K_b

    def convective(self, fluxes: FluxTallies, sigma, theta, bc: BoundaryClosure):
        F = assemble_convective_flux(fluxes.flux, fluxes.ghost_plus, fluxes.ghost_minus,
                                     theta[self.side_lo], theta[self.side_hi])
        if bc.faces.size:
            cb = bc.cells
            keep = 1.0 - theta[cb] * np.exp(-self.c * sigma[cb] * self.dt)
            area = self.p.mesh.face_area[bc.faces]
            F[bc.faces] -= bc.inward[:, None] * np.pi * keep * bc.B * area[:, None]
        return F

    def outward_diffusion(self, phi, K_i, K_b, bc: BoundaryClosure):
        """Net outward diffusive energy rate per (cell, group)."""
        n, G = self.p.n_cells, self.p.G
        lo, hi = self.f_lo, self.f_hi
        flow = K_i * (phi[hi] - phi[lo])[:, None]   # along +normal, lo -> hi
        out = np.zeros((n, G))
        np.add.at(out, lo, -flow)
        np.add.at(out, hi, flow)
        if bc.faces.size:
            np.add.at(out, bc.cells, K_b * (phi[bc.cells] - bc.phi)[:, None])
        return out

    # prediction ---------------------------------------------------------------

    def prediction_system(self, T_k, T_n, rho_n, F_div, chi, K_i, K_b, bc: BoundaryClosure):
        """Row-scaled (by cell volume) matrix triplets and right-hand side."""
        p = self.p
        c, dt, V = self.c, self.dt, self.vol
        ac = p.consts.ac
        beta = 4.0 * ac * T_k**3 / p.cv
        b = group_fraction(p.grid, T_k)
        phi_n = ac * T_n**4
        diag = V / (beta * dt) + V / (c * dt) * np.sum(chi * b, axis=1)
        rhs = V * phi_n / (beta * dt) + np.sum(chi * (V[:, None] * rho_n / (c * dt) - F_div), axis=1)
        lo, hi = self.f_lo, self.f_hi
        w_lo = np.sum(chi[lo] * K_i, axis=1)
        w_hi = np.sum(chi[hi] * K_i, axis=1)
        np.add.at(diag, lo, w_lo)
        np.add.at(diag, hi, w_hi)
        if bc.faces.size:
            w_b = np.sum(chi[bc.cells] * K_b, axis=1)
            np.add.at(diag, bc.cells, w_b)
            np.add.at(rhs, bc.cells, w_b * bc.phi)
        rows = np.concatenate([lo, hi])
        cols = np.concatenate([hi, lo])
        vals = -np.concatenate([w_lo, w_hi])
        return diag, rows, cols, vals, rhs

    def predict(self, T_k, T_n, rho_n, F_div, chi, K_i, K_b, bc):
        diag, rows, cols, vals, rhs = self.prediction_system(T_k, T_n, rho_n, F_div, chi, K_i, K_b, bc)
        if self.check:
            check_m_matrix(diag, rows, vals)
        return linear_solve(diag, rows, cols, vals, rhs, self.banded)

    # correction ---------------------------------------------------------------

    def correct(self, T_half, T_n, rho_n, F_div, D_div, chi):
        p = self.p
        c, dt, V = self.c, self.dt, self.vol
        A = T_n + dt / (p.cv * V) * np.sum(chi * (V[:, None] * rho_n / (c * dt) - F_div - D_div), axis=1)
        k = p.consts.a * p.consts.cp / c / p.cv
        return solve_correction(A, chi, k, p.grid, T_half)

    # Picard -------------------------------------------------------------------

    def solve(self, T_n, rho_n, fluxes: FluxTallies, bc: BoundaryClosure | None = None,
              log: list | None = None) -> PicardResult:
        p = self.p
        ac = p.consts.ac
        if bc is None:
            bc = boundary_closure(p, T_n)
        T_k = np.array(T_n, dtype=float)
        phi_floor = ac * T_FLOOR**4
        incs = []
        floored = 0
        for it in range(1, self.max_iter + 1):
            sigma, theta, chi = self.coefficients(T_k)
            K_i, K_b = self.conductances(T_k, sigma, theta, bc)
            F_div = self.div @ self.convective(fluxes, sigma, theta, bc)
            phi_h = self.predict(T_k, T_n, rho_n, F_div, chi, K_i, K_b, bc)
            low = phi_h < phi_floor
            phi_h = np.where(low, phi_floor, phi_h)
            T_h = (phi_h / ac) ** 0.25
            sigma, theta, chi = self.coefficients(T_h)
            K_i, K_b = self.conductances(T_h, sigma, theta, bc)
            F_div = self.div @ self.convective(fluxes, sigma, theta, bc)
            D_div = self.outward_diffusion(phi_h, K_i, K_b, bc)
            T_new, nfl = self.correct(T_h, T_n, rho_n, F_div, D_div, chi)
            inc = float(np.sum(np.abs(T_new - T_k)))
            incs.append(inc)
            if log is not None:
                log.append((it, inc))
            T_k = T_new
            if inc < self.gamma:
                floored = nfl + int(low.sum())
                break
        else:
            raise PicardError(f"Picard did not converge in {self.max_iter} iterations, "
                              f"last L1 increment {incs[-1]:.3e}")
        c, dt, V = self.c, self.dt, self.vol
        b = group_fraction(p.grid, T_k)
        phi = ac * T_k**4
        rho = ((rho_n / (c * dt) + sigma * b * phi[:, None] - (F_div + D_div) / V[:, None])
               / (1.0 / (c * dt) + sigma))
        return PicardResult(T_k, rho, phi_h, it, incs, floored)


def check_m_matrix(diag, rows, vals):
    off = np.zeros(diag.size)
    np.add.at(off, rows, np.abs(vals))
    assert np.all(vals <= 0.0), "positive off-diagonal"
    assert np.all(diag > off), "matrix not strictly diagonally dominant"


def linear_solve(diag, rows, cols, vals, rhs, banded: bool):
    """Solve a nearest-neighbour system given as diagonal plus off-diagonal triplets."""
    n = diag.size
    if banded:
        ab = np.zeros((3, n))
        ab[1] = diag
        up = cols == rows + 1
        np.add.at(ab[0], cols[up], vals[up])
        dn = cols == rows - 1
        np.add.at(ab[2], cols[dn], vals[dn])
        return solve_banded((1, 1), ab, rhs)
    A = sp.csr_matrix((np.concatenate([diag, vals]),
                       (np.concatenate([np.arange(n), rows]),
                        np.concatenate([np.arange(n), cols]))), shape=(n, n))
    return spsolve(A.tocsc(), rhs)


def correction_residual(T, A, chi, k, grid):
    T = np.asarray(T, dtype=float)
    b = group_fraction(grid, T)
    return T + k * np.sum(chi * b, axis=-1) * T**4 - A


def correction_derivative(T, chi, k, grid):
    T = np.asarray(T, dtype=float)
    coef = derivative_coefficient(grid, T)
    return 1.0 + 4.0 * k * np.sum(chi * coef, axis=-1) * T**3


def solve_correction(A, chi, k, grid, T0):
    """Solve T + k sum_g chi_g b_g(T) T^4 = A per cell by safeguarded Newton.

    Cells with A <= 0 have no positive root and are set to the temperature
    floor. Returns the roots and the number of floored cells.
    """
    A = np.atleast_1d(np.asarray(A, dtype=float))
    chi = np.atleast_2d(chi)
    k = np.broadcast_to(np.asarray(k, dtype=float), A.shape)
    T = np.array(np.broadcast_to(T0, A.shape), dtype=float)
    bad = ~(A > T_FLOOR)
    T[bad] = T_FLOOR
    T = np.where(T > 0, T, np.maximum(A, T_FLOOR))
    active = ~bad
    for _ in range(NEWTON_MAX):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        Ta = T[idx]
        r = correction_residual(Ta, A[idx], chi[idx], k[idx], grid)
        dr = correction_derivative(Ta, chi[idx], k[idx], grid)
        step = r / dr
        new = Ta - step
        lam = 1.0
        while np.any(new <= 0.0):
            lam *= 0.5
            new = np.where(new <= 0.0, Ta - lam * step, new)
            if lam < 1e-30:
                break
        T[idx] = new
        tol = np.maximum(NEWTON_TOL, 8 * np.finfo(float).eps * new)
        active[idx] = np.abs(new - Ta) >= tol
    if active.any():
        i = int(np.flatnonzero(active)[0])
        res = correction_residual(T[i:i + 1], A[i:i + 1], chi[i:i + 1], k[i:i + 1], grid)
        raise NewtonError(i, float(res[0]))
    return T, int(bad.sum())
