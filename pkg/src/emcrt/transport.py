"""Particle tracking with continuous energy deposition.

Particles are split into a fixed number of chunks, independent of the
thread count. Each chunk writes private tallies that are summed in chunk
order, so results are bit-identical for any number of threads.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .mesh import Mesh, Reflective
from .particles import ParticleBank
from .rng import particle_key, uniform

REFLECT, LEAK = 0, 1
WEIGHT_CUTOFF = 1e-4
DEFAULT_CHUNKS = 8


class TrackingError(RuntimeError):
    pass


@dataclass
class TallySet:
    """Energies per (cell, group), crossings per (face, group), leakage per (side, group).

    Face crossings are summed weights, signed along the face normal; divide
    by the step length for the time-averaged fluxes. ``cut`` holds the weight
    of particles removed by the relative weight floor.
    """

    absorbed: np.ndarray
    cut: np.ndarray
    census: np.ndarray
    flux: np.ndarray
    ghost_plus: np.ndarray
    ghost_minus: np.ndarray
    leak: np.ndarray
    collisions: int = 0

    @classmethod
    def zeros(cls, n_cells: int, n_faces: int, G: int) -> "TallySet":
        z = lambda *s: np.zeros(s)
        return cls(z(n_cells, G), z(n_cells, G), z(n_cells, G), z(n_faces, G),
                   z(n_faces, G), z(n_faces, G), z(4, G), 0)

    def __add__(self, other: "TallySet") -> "TallySet":
        return TallySet(self.absorbed + other.absorbed, self.cut + other.cut,
                        self.census + other.census, self.flux + other.flux,
                        self.ghost_plus + other.ghost_plus, self.ghost_minus + other.ghost_minus,
                        self.leak + other.leak, self.collisions + other.collisions)


def boundary_kinds(boundaries: dict) -> np.ndarray:
    kinds = np.zeros(4, np.int64)
    for side, b in boundaries.items():
        kinds[side] = REFLECT if isinstance(b, Reflective) else LEAK
    return kinds


@njit(inline="always")
def _sample_group(cdf, ic, u):
    G = cdf.shape[1]
    lo, hi = 0, G - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cdf[ic, mid] > u:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(parallel=True, cache=True)
def _track_1d(x, ux, uy, cell, grp, w, w0, t, tag, xe, sig_a, sig_s, cdf, t_end, c, bc,
              wcut, seed, step, n_chunks, ea, ecut, ei, fi, gp, gn, leak, ncoll, status):
    n = x.size
    nx = xe.size - 1
    for k in prange(n_chunks):
        lo = k * n // n_chunks
        hi = (k + 1) * n // n_chunks
        for p in range(lo, hi):
            ic = cell[p]
            g = grp[p]
            wp = w[p]
            wmin = wcut * w0[p]
            tp = t[p]
            xp = x[p]
            mu = ux[p]
            tg = tag[p]
            ghost = tg == 2 or tg == 3
            real_flux = tg <= 1
            key = particle_key(seed, step, p)
            ctr = 0
            st = 0
            tol = 1e-9 * (xe[nx] - xe[0])
            while True:
                if xp < xe[ic] - tol or xp > xe[ic + 1] + tol:
                    st = -1
                    break
                sa = sig_a[ic, g]
                ss = sig_s[ic, g]
                if mu > 0.0:
                    db = (xe[ic + 1] - xp) / mu
                elif mu < 0.0:
                    db = (xe[ic] - xp) / mu
                else:
                    db = np.inf
                if db < 0.0:
                    db = 0.0
                dtm = c * (t_end - tp)
                if dtm < 0.0:
                    dtm = 0.0
                ds = np.inf
                if ss > 0.0:
                    ds = -np.log(uniform(key, ctr)) / ss
                    ctr += 1
                d = min(db, dtm, ds)
                att = np.exp(-sa * d)
                wn = wp * att
                if not ghost:
                    ea[k, ic, g] += wp - wn
                wp = wn
                tp += d / c
                xp += mu * d
                if dtm <= db and dtm <= ds:
                    tp = t_end
                    if not ghost:
                        ei[k, ic, g] += wp
                        st = 1
                    break
                if ds < db:
                    ncoll[k] += 1
                    mu = 2.0 * uniform(key, ctr) - 1.0
                    g = _sample_group(cdf, ic, uniform(key, ctr + 1))
                    ctr += 2
                else:
                    if mu > 0.0:
                        xp = xe[ic + 1]
                        f = ic + 1
                        nc = ic + 1
                    else:
                        xp = xe[ic]
                        f = ic
                        nc = ic - 1
                    side = -1
                    if nc < 0:
                        side = 0
                    elif nc >= nx:
                        side = 1
                    if side >= 0 and bc[side] == REFLECT:
                        mu = -mu
                    else:
                        if real_flux:
                            fi[k, f, g] += wp if mu > 0.0 else -wp
                        elif ghost:
                            if mu > 0.0:
                                gp[k, f, g] += wp
                            else:
                                gn[k, f, g] -= wp
                        if side >= 0:
                            if not ghost:
                                leak[k, side, g] += wp
                            st = 0
                            break
                        ic = nc
                if wp < wmin:
                    if not ghost:
                        ecut[k, ic, g] += wp
                    st = 0
                    break
            x[p] = xp
            ux[p] = mu
            uy[p] = np.sqrt(max(0.0, 1.0 - mu * mu))
            cell[p] = ic
            grp[p] = g
            w[p] = wp
            t[p] = tp
            status[p] = st


@njit(parallel=True, cache=True)
def _track_2d(x, y, ux, uy, uz, cell, grp, w, w0, t, tag, xe, ye, sig_a, sig_s, cdf, t_end, c,
              bc, wcut, seed, step, n_chunks, ea, ecut, ei, fi, gp, gn, leak, ncoll, status):
    n = x.size
    nx = xe.size - 1
    ny = ye.size - 1
    nxf = (nx + 1) * ny
    for k in prange(n_chunks):
        lo = k * n // n_chunks
        hi = (k + 1) * n // n_chunks
        for p in range(lo, hi):
            ic = cell[p]
            ix = ic % nx
            iy = ic // nx
            g = grp[p]
            wp = w[p]
            wmin = wcut * w0[p]
            tp = t[p]
            xp = x[p]
            yp = y[p]
            a = ux[p]
            b = uy[p]
            cz = uz[p]
            tg = tag[p]
            ghost = tg == 2 or tg == 3
            real_flux = tg <= 1
            key = particle_key(seed, step, p)
            ctr = 0
            st = 0
            tolx = 1e-9 * (xe[nx] - xe[0])
            toly = 1e-9 * (ye[ny] - ye[0])
            while True:
                if (xp < xe[ix] - tolx or xp > xe[ix + 1] + tolx
                        or yp < ye[iy] - toly or yp > ye[iy + 1] + toly):
                    st = -1
                    break
                sa = sig_a[ic, g]
                ss = sig_s[ic, g]
                if a > 0.0:
                    dbx = (xe[ix + 1] - xp) / a
                elif a < 0.0:
                    dbx = (xe[ix] - xp) / a
                else:
                    dbx = np.inf
                if b > 0.0:
                    dby = (ye[iy + 1] - yp) / b
                elif b < 0.0:
                    dby = (ye[iy] - yp) / b
                else:
                    dby = np.inf
                if dbx < 0.0:
                    dbx = 0.0
                if dby < 0.0:
                    dby = 0.0
                db = min(dbx, dby)
                dtm = c * (t_end - tp)
                if dtm < 0.0:
                    dtm = 0.0
                ds = np.inf
                if ss > 0.0:
                    ds = -np.log(uniform(key, ctr)) / ss
                    ctr += 1
                d = min(db, dtm, ds)
                att = np.exp(-sa * d)
                wn = wp * att
                if not ghost:
                    ea[k, ic, g] += wp - wn
                wp = wn
                tp += d / c
                xp += a * d
                yp += b * d
                if dtm <= db and dtm <= ds:
                    tp = t_end
                    if not ghost:
                        ei[k, ic, g] += wp
                        st = 1
                    break
                if ds < db:
                    ncoll[k] += 1
                    cz = 2.0 * uniform(key, ctr) - 1.0
                    ph = 2.0 * np.pi * uniform(key, ctr + 1)
                    r = np.sqrt(max(0.0, 1.0 - cz * cz))
                    a = r * np.cos(ph)
                    b = r * np.sin(ph)
                    g = _sample_group(cdf, ic, uniform(key, ctr + 2))
                    ctr += 3
                else:
                    if dbx <= dby:
                        ax = 0
                        pos = a > 0.0
                        if pos:
                            xp = xe[ix + 1]
                            f = iy * (nx + 1) + ix + 1
                            nix, niy = ix + 1, iy
                        else:
                            xp = xe[ix]
                            f = iy * (nx + 1) + ix
                            nix, niy = ix - 1, iy
                    else:
                        ax = 1
                        pos = b > 0.0
                        if pos:
                            yp = ye[iy + 1]
                            f = nxf + (iy + 1) * nx + ix
                            nix, niy = ix, iy + 1
                        else:
                            yp = ye[iy]
                            f = nxf + iy * nx + ix
                            nix, niy = ix, iy - 1
                    side = -1
                    if nix < 0:
                        side = 0
                    elif nix >= nx:
                        side = 1
                    elif niy < 0:
                        side = 2
                    elif niy >= ny:
                        side = 3
                    if side >= 0 and bc[side] == REFLECT:
                        if ax == 0:
                            a = -a
                        else:
                            b = -b
                    else:
                        if real_flux:
                            fi[k, f, g] += wp if pos else -wp
                        elif ghost:
                            if pos:
                                gp[k, f, g] += wp
                            else:
                                gn[k, f, g] -= wp
                        if side >= 0:
                            if not ghost:
                                leak[k, side, g] += wp
                            st = 0
                            break
                        ix, iy = nix, niy
                        ic = iy * nx + ix
                if wp < wmin:
                    if not ghost:
                        ecut[k, ic, g] += wp
                    st = 0
                    break
            x[p] = xp
            y[p] = yp
            ux[p] = a
            uy[p] = b
            uz[p] = cz
            cell[p] = ic
            grp[p] = g
            w[p] = wp
            t[p] = tp
            status[p] = st


def track(bank: ParticleBank, mesh: Mesh, sigma_abs: np.ndarray, t_end: float, c: float,
          bc_kinds: np.ndarray, *, sigma_scat: np.ndarray | None = None,
          scat_cdf: np.ndarray | None = None, seed: int = 0, step: int = 0,
          n_chunks: int = DEFAULT_CHUNKS, wcut: float = WEIGHT_CUTOFF):
    """Track every particle of ``bank`` in place to ``t_end``.

    Returns the reduced tallies and a boolean census mask in bank order.
    ``sigma_scat`` and ``scat_cdf`` add effective scattering with group
    resampling from the per-cell cumulative distribution.
    """
    n_cells, G = sigma_abs.shape
    nf = mesh.n_faces
    n_chunks = max(1, int(n_chunks))
    sa = np.ascontiguousarray(sigma_abs, dtype=np.float64)
    ss = np.zeros_like(sa) if sigma_scat is None else np.ascontiguousarray(sigma_scat, np.float64)
    cdf = np.ones((n_cells, G)) if scat_cdf is None else np.ascontiguousarray(scat_cdf, np.float64)
    ea = np.zeros((n_chunks, n_cells, G))
    ecut = np.zeros((n_chunks, n_cells, G))
    ei = np.zeros((n_chunks, n_cells, G))
    fi = np.zeros((n_chunks, nf, G))
    gp = np.zeros((n_chunks, nf, G))
    gn = np.zeros((n_chunks, nf, G))
    leak = np.zeros((n_chunks, 4, G))
    ncoll = np.zeros(n_chunks, np.int64)
    status = np.zeros(len(bank), np.int64)
    bc = np.ascontiguousarray(bc_kinds, dtype=np.int64)
    b = bank
    if mesh.dim == 1:
        _track_1d(b.x, b.ux, b.uy, b.cell, b.group, b.w, b.w0, b.t, b.tag, mesh.x_edges, sa, ss,
                  cdf, float(t_end), float(c), bc, float(wcut), np.uint64(seed), np.uint64(step),
                  n_chunks, ea, ecut, ei, fi, gp, gn, leak, ncoll, status)
    else:
        _track_2d(b.x, b.y, b.ux, b.uy, b.uz, b.cell, b.group, b.w, b.w0, b.t, b.tag,
                  mesh.x_edges, mesh.y_edges, sa, ss, cdf, float(t_end), float(c), bc, float(wcut),
                  np.uint64(seed), np.uint64(step), n_chunks, ea, ecut, ei, fi, gp, gn, leak,
                  ncoll, status)
    if np.any(status < 0):
        p = int(np.flatnonzero(status < 0)[0])
        raise TrackingError(f"particle {p} left its cell without crossing a face")
    red = _ordered_sum
    tallies = TallySet(red(ea), red(ecut), red(ei), red(fi), red(gp), red(gn), red(leak),
                       int(ncoll.sum()))
    return tallies, status == 1


def _ordered_sum(arr):
    out = arr[0].copy()
    for k in range(1, arr.shape[0]):
        out += arr[k]
    return out
