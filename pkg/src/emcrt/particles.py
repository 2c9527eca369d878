"""Particle storage and source sampling."""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .mesh import Mesh

CENSUS, BOUNDARY, GHOST_CENSUS, GHOST_BOUNDARY, EMISSION = range(5)
TAG_NAMES = ("census", "boundary", "ghost-census", "ghost-boundary", "emission")

_DTYPES = dict(x=np.float64, y=np.float64, ux=np.float64, uy=np.float64, uz=np.float64,
               cell=np.int64, group=np.int64, w=np.float64, w0=np.float64, t=np.float64,
               tag=np.int8)


@dataclass
class ParticleBank:
    """Structure-of-arrays particle list in canonical order."""

    x: np.ndarray
    y: np.ndarray
    ux: np.ndarray
    uy: np.ndarray
    uz: np.ndarray
    cell: np.ndarray
    group: np.ndarray
    w: np.ndarray
    w0: np.ndarray
    t: np.ndarray
    tag: np.ndarray

    @classmethod
    def empty(cls, n: int = 0) -> "ParticleBank":
        return cls(**{k: np.zeros(n, dt) for k, dt in _DTYPES.items()})

    @classmethod
    def concat(cls, banks) -> "ParticleBank":
        banks = [b for b in banks if b is not None]
        if not banks:
            return cls.empty()
        return cls(**{k: np.concatenate([getattr(b, k) for b in banks]).astype(dt, copy=False)
                      for k, dt in _DTYPES.items()})

    def take(self, idx) -> "ParticleBank":
        return ParticleBank(**{f.name: getattr(self, f.name)[idx] for f in fields(self)})

    def __len__(self) -> int:
        return self.w.size

    def energy(self, n_cells: int, G: int) -> np.ndarray:
        out = np.zeros((n_cells, G))
        np.add.at(out, (self.cell, self.group), self.w)
        return out

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


# allocation -----------------------------------------------------------------

def largest_remainder(energies, n: int) -> np.ndarray:
    """Integer counts proportional to ``energies`` summing to ``n``."""
    e = np.asarray(energies, dtype=float).ravel()
    tot = e.sum()
    counts = np.zeros(e.size, dtype=np.int64)
    if n <= 0 or not tot > 0:
        return counts
    q = e / tot * n
    counts[:] = np.floor(q)
    r = n - int(counts.sum())
    if r > 0:
        order = np.argsort(-(q - counts), kind="stable")[:r]
        counts[order] += 1
    return counts


def class_counts(class_energy, n: int) -> np.ndarray:
    """Split the budget over source classes; any class with energy gets one particle."""
    e = np.asarray(class_energy, dtype=float)
    counts = largest_remainder(e, n)
    if n <= 0:
        return counts
    for i in np.flatnonzero((e > 0) & (counts == 0)):
        j = int(np.argmax(counts))
        if counts[j] > 1:
            counts[j] -= 1
        counts[i] += 1
    return counts


def bucket_weights(energies, n: int):
    """Per-bucket counts and per-particle weights for one source class.

    Energy of buckets that receive no particles is moved to the largest
    bucket so the class total is sampled exactly.
    """
    e = np.asarray(energies, dtype=float).ravel()
    counts = largest_remainder(e, n)
    if counts.sum() == 0:
        return counts, np.zeros(e.size)
    resid = e[counts == 0].sum()
    big = int(np.argmax(e))
    e = e.copy()
    e[counts == 0] = 0.0
    e[big] += resid
    w = np.divide(e, counts, out=np.zeros_like(e), where=counts > 0)
    return counts, w


# directions -----------------------------------------------------------------

def isotropic(rng: np.random.Generator, n: int, dim: int):
    mu = 2.0 * rng.random(n) - 1.0
    if dim == 1:
        return mu, np.sqrt(np.maximum(0.0, 1.0 - mu * mu)), np.zeros(n)
    phi = 2.0 * np.pi * rng.random(n)
    r = np.sqrt(np.maximum(0.0, 1.0 - mu * mu))
    return r * np.cos(phi), r * np.sin(phi), mu


def cosine_inward(rng: np.random.Generator, n: int, axis: np.ndarray, sign: np.ndarray):
    """Directions with density proportional to |Omega . n| about an inward normal."""
    un = np.sqrt(rng.random(n))
    phi = 2.0 * np.pi * rng.random(n)
    r = np.sqrt(np.maximum(0.0, 1.0 - un * un))
    a, b = r * np.cos(phi), r * np.sin(phi)
    ux = np.where(axis == 0, sign * un, a)
    uy = np.where(axis == 0, a, sign * un)
    return ux, uy, b


# source tilting --------------------------------------------------------------

def tilt_slopes(B, widths, axis: int):
    """Backward and forward one-sided slopes of ``B`` along ``axis``.

    Slopes are zero across the domain boundary and clamped to |s| <= 2 B / dx.
    """
    B = np.asarray(B, dtype=float)
    w = np.asarray(widths, dtype=float)
    n = B.shape[axis]
    sb = np.zeros_like(B)
    sf = np.zeros_like(B)
    if n > 1:
        sl_lo = [slice(None)] * B.ndim
        sl_hi = [slice(None)] * B.ndim
        sl_lo[axis] = slice(0, n - 1)
        sl_hi[axis] = slice(1, n)
        sl_lo, sl_hi = tuple(sl_lo), tuple(sl_hi)
        wshape = [1] * B.ndim
        wshape[axis] = n
        ww = w.reshape(wshape)
        dist = 0.5 * (ww[sl_lo] + ww[sl_hi])
        diff = (B[sl_hi] - B[sl_lo]) / dist
        sb[sl_hi] = diff
        sf[sl_lo] = diff
    else:
        wshape = [1] * B.ndim
        wshape[axis] = n
        ww = w.reshape(wshape)
    cap = 2.0 * B / ww
    return np.clip(sb, -cap, cap), np.clip(sf, -cap, cap)


def tilt_parameter(s, Bbar, dx):
    """Dimensionless slope k = s dx / Bbar in [-2, 2]; zero where Bbar vanishes."""
    Bbar = np.asarray(Bbar, dtype=float)
    k = np.divide(np.asarray(s, float) * dx, Bbar, out=np.zeros(np.broadcast(s, Bbar, dx).shape),
                  where=Bbar > 0)
    return np.clip(k, -2.0, 2.0)


def tilted_pdf(u, k):
    """Density of the local coordinate u in [-1/2, 1/2]."""
    return 1.0 + k * u


def sample_tilted(xi, k):
    """Invert the linear CDF: u in [-1/2, 1/2] from a uniform xi."""
    q = xi - 0.5 + k / 8.0
    disc = np.maximum(0.0, 1.0 + 2.0 * k * q)
    return np.clip(2.0 * q / (1.0 + np.sqrt(disc)), -0.5, 0.5)


# samplers -------------------------------------------------------------------

def _expand(counts, weights):
    idx = np.repeat(np.arange(counts.size), counts)
    return idx, weights[idx]


def sample_volume(mesh: Mesh, energy: np.ndarray, n: int, rng: np.random.Generator,
                  t0: float, t1: float | None, tag: int, slopes=None) -> ParticleBank:
    """Volume source with per-(cell, group) energies.

    ``t1 is None`` places every particle at ``t0``; otherwise birth times are
    uniform on [t0, t1]. ``slopes`` (k_back_x, k_fwd_x, k_back_y, k_fwd_y)
    enables tilted positions.
    """
    n_cells, G = energy.shape
    counts, w = bucket_weights(energy, n)
    idx, wp = _expand(counts, w)
    m = idx.size
    cell, group = idx // G, idx % G
    if t1 is None:
        t = np.full(m, float(t0))
    else:
        t = t0 + (t1 - t0) * rng.random(m)
    ux, uy, uz = isotropic(rng, m, mesh.dim)
    xi_x = rng.random(m)
    xi_y = rng.random(m) if mesh.dim == 2 else None
    if slopes is None:
        ux_loc = xi_x - 0.5
        uy_loc = None if xi_y is None else xi_y - 0.5
    else:
        kbx, kfx, kby, kfy = slopes
        kx = np.where(ux < 0, kbx[cell, group], kfx[cell, group])
        ux_loc = sample_tilted(xi_x, kx)
        uy_loc = None
        if mesh.dim == 2:
            ky = np.where(uy < 0, kby[cell, group], kfy[cell, group])
            uy_loc = sample_tilted(xi_y, ky)
    x = mesh.x_center[cell] + ux_loc * mesh.dx[cell]
    y = np.zeros(m) if mesh.dim == 1 else mesh.y_center[cell] + uy_loc * mesh.dy[cell]
    return ParticleBank(x=x, y=y, ux=ux, uy=uy, uz=uz, cell=cell.astype(np.int64),
                        group=group.astype(np.int64), w=wp, w0=wp.copy(), t=t,
                        tag=np.full(m, tag, np.int8))


def face_geometry(mesh: Mesh, faces: np.ndarray):
    """Fixed coordinate, tangential extent and axis of each face."""
    nx = mesh.nx
    nxf = mesh.n_x_faces
    axis = mesh.face_axis[faces]
    is_x = axis == 0
    fx = np.where(is_x, faces, 0)
    fy = np.where(is_x, 0, faces - nxf)
    k_x = fx % (nx + 1)
    iy_x = fx // (nx + 1)
    ix_y = fy % nx
    k_y = fy // nx
    ye = mesh.y_edges if mesh.y_edges is not None else np.array([0.0, 1.0])
    fixed = np.where(is_x, mesh.x_edges[k_x], ye[np.minimum(k_y, ye.size - 1)])
    lo = np.where(is_x, ye[np.minimum(iy_x, ye.size - 2)], mesh.x_edges[np.minimum(ix_y, nx - 1)])
    hi = np.where(is_x, ye[np.minimum(iy_x + 1, ye.size - 1)], mesh.x_edges[np.minimum(ix_y + 1, nx)])
    return fixed, lo, hi, axis


def sample_surface(mesh: Mesh, faces: np.ndarray, energy: np.ndarray, n: int,
                   rng: np.random.Generator, t0: float, t1: float, tag: int):
    """Inward cosine-law source on boundary faces with per-(face, group) energies.

    Returns the bank and the face index of every particle.
    """
    nf, G = energy.shape
    counts, w = bucket_weights(energy, n)
    idx, wp = _expand(counts, w)
    m = idx.size
    fi, group = idx // G, idx % G
    face = faces[fi]
    fixed, lo, hi, axis = face_geometry(mesh, face)
    # cell on the positive side means the inward normal is +axis
    sign = np.where(mesh.face_hi[face] >= 0, 1.0, -1.0)
    cell = mesh.face_cell(face)
    t = t0 + (t1 - t0) * rng.random(m)
    ux, uy, uz = cosine_inward(rng, m, axis, sign)
    along = lo + (hi - lo) * rng.random(m)
    if mesh.dim == 1:
        x, y = fixed, np.zeros(m)
        uy = np.sqrt(np.maximum(0.0, 1.0 - ux * ux))
        uz = np.zeros(m)
    else:
        x = np.where(axis == 0, fixed, along)
        y = np.where(axis == 0, along, fixed)
    bank = ParticleBank(x=x, y=y, ux=ux, uy=uy, uz=uz, cell=cell, group=group.astype(np.int64),
                        w=wp, w0=wp.copy(), t=t, tag=np.full(m, tag, np.int8))
    return bank, face


def tilt_fields(mesh: Mesh, B: np.ndarray):
    """Per-(cell, group) dimensionless backward/forward slopes in x and y."""
    G = B.shape[1]
    dxs = np.diff(mesh.x_edges)
    if mesh.dim == 1:
        sb, sf = tilt_slopes(B, dxs, 0)
        dx = dxs[:, None]
        z = np.zeros_like(B)
        return tilt_parameter(sb, B, dx), tilt_parameter(sf, B, dx), z, z
    ny, nx = mesh.ny, mesh.nx
    B3 = B.reshape(ny, nx, G)
    dys = np.diff(mesh.y_edges)
    sbx, sfx = tilt_slopes(B3, dxs, 1)
    sby, sfy = tilt_slopes(B3, dys, 0)
    dx = dxs[None, :, None]
    dy = dys[:, None, None]
    out = [tilt_parameter(sbx, B3, dx), tilt_parameter(sfx, B3, dx),
           tilt_parameter(sby, B3, dy), tilt_parameter(sfy, B3, dy)]
    return tuple(o.reshape(ny * nx, G) for o in out)


def roulette(bank: ParticleBank, n_cells: int, G: int, target: int, rng: np.random.Generator):
    """Russian roulette toward ``target`` particles, unbiased per (cell, group).

    Particles lighter than the bucket's target weight survive with
    probability w / w_t and are promoted to w_t.
    """
    key = bank.cell * G + bank.group
    E = np.bincount(key, weights=bank.w, minlength=n_cells * G)
    want = np.maximum(largest_remainder(E, target), (E > 0).astype(np.int64))
    wt = np.divide(E, want, out=np.full(E.size, np.inf), where=want > 0)[key]
    light = bank.w < wt
    u = rng.random(len(bank))
    keep = ~light | (u < bank.w / wt)
    out = bank.take(keep)
    promoted = light[keep]
    out.w[promoted] = wt[keep][promoted]
    out.w0[promoted] = out.w[promoted]
    return out
