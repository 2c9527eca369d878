"""Structured 1D/2D meshes with a flat face list and boundary labels."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIDES = ("left", "right", "bottom", "top")
INTERIOR = -1


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class Reflective:
    pass


@dataclass(frozen=True)
class Vacuum:
    pass


@dataclass(frozen=True)
class PlanckSource:
    T_bc: float

    def __post_init__(self):
        if not self.T_bc > 0:
            raise MeshError("Planck boundary temperature must be positive")


def boundary_from_dict(d) -> object:
    if isinstance(d, str):
        d = {"type": d}
    kind = d["type"]
    if kind == "reflective":
        return Reflective()
    if kind == "vacuum":
        return Vacuum()
    if kind == "planck":
        return PlanckSource(float(d["T"]))
    raise MeshError(f"unknown boundary type {kind!r}")


def boundary_to_dict(b) -> dict:
    if isinstance(b, Reflective):
        return {"type": "reflective"}
    if isinstance(b, Vacuum):
        return {"type": "vacuum"}
    return {"type": "planck", "T": float(b.T_bc)}


def edges_from_segments(segments, tol=1e-9) -> np.ndarray:
    """Concatenate piecewise-uniform segments ``(start, end, dx)`` into edges."""
    pieces = []
    prev_end = None
    for start, end, dx in segments:
        if not end > start or not dx > 0:
            raise MeshError(f"bad segment {(start, end, dx)}")
        if prev_end is not None:
            if start < prev_end - tol:
                raise MeshError(f"segment at {start} overlaps previous end {prev_end}")
            if start > prev_end + tol:
                raise MeshError(f"gap between {prev_end} and {start}")
        n = (end - start) / dx
        k = int(round(n))
        if k < 1 or abs(n - k) > 1e-6 * max(1.0, n):
            raise MeshError(f"segment length {end - start} is not a multiple of dx={dx}")
        e = np.linspace(start, end, k + 1)
        pieces.append(e if not pieces else e[1:])
        prev_end = end
    if not pieces:
        raise MeshError("no segments")
    return np.concatenate(pieces)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Cells are numbered ``iy * nx + ix``.

    Faces are x-faces first (``iy * (nx + 1) + k``) then y-faces
    (``nxf + k * nx + ix``). Each face stores the cell on its negative side
    (``lo``) and positive side (``hi``), ``-1`` outside the domain, and the
    face normal points from ``lo`` to ``hi``.
    """

    x_edges: np.ndarray
    y_edges: np.ndarray | None
    material: np.ndarray

    def __post_init__(self):
        xe = np.asarray(self.x_edges, dtype=float)
        if xe.size < 2 or np.any(np.diff(xe) <= 0):
            raise MeshError("x edges must be strictly increasing")
        object.__setattr__(self, "x_edges", xe)
        if self.y_edges is not None:
            ye = np.asarray(self.y_edges, dtype=float)
            if ye.size < 2 or np.any(np.diff(ye) <= 0):
                raise MeshError("y edges must be strictly increasing")
            object.__setattr__(self, "y_edges", ye)
        mat = np.asarray(self.material, dtype=np.int64)
        if mat.shape != (self.n_cells,):
            raise MeshError("material array must have one entry per cell")
        object.__setattr__(self, "material", mat)
        self._build_faces()

    @property
    def dim(self) -> int:
        return 1 if self.y_edges is None else 2

    @property
    def nx(self) -> int:
        return self.x_edges.size - 1

    @property
    def ny(self) -> int:
        return 1 if self.y_edges is None else self.y_edges.size - 1

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def dx(self) -> np.ndarray:
        return np.tile(np.diff(self.x_edges), self.ny)

    @property
    def dy(self) -> np.ndarray:
        if self.y_edges is None:
            return np.ones(self.n_cells)
        return np.repeat(np.diff(self.y_edges), self.nx)

    @property
    def volume(self) -> np.ndarray:
        return self.dx * self.dy

    @property
    def x_center(self) -> np.ndarray:
        xc = 0.5 * (self.x_edges[1:] + self.x_edges[:-1])
        return np.tile(xc, self.ny)

    @property
    def y_center(self) -> np.ndarray:
        if self.y_edges is None:
            return np.zeros(self.n_cells)
        yc = 0.5 * (self.y_edges[1:] + self.y_edges[:-1])
        return np.repeat(yc, self.nx)

    @property
    def n_x_faces(self) -> int:
        return (self.nx + 1) * self.ny

    def _build_faces(self):
        nx, ny = self.nx, self.ny
        dxc = np.diff(self.x_edges)
        lo, hi, area, axis, side, half_lo, half_hi = [], [], [], [], [], [], []
        dyc = np.ones(1) if self.y_edges is None else np.diff(self.y_edges)
        for iy in range(ny):
            k = np.arange(nx + 1)
            l = np.where(k > 0, iy * nx + k - 1, -1)
            h = np.where(k < nx, iy * nx + k, -1)
            s = np.full(nx + 1, INTERIOR)
            s[0], s[-1] = 0, 1
            lo.append(l), hi.append(h), side.append(s)
            area.append(np.full(nx + 1, dyc[iy])), axis.append(np.zeros(nx + 1, np.int64))
            half_lo.append(np.where(k > 0, 0.5 * dxc[np.maximum(k - 1, 0)], 0.0))
            half_hi.append(np.where(k < nx, 0.5 * dxc[np.minimum(k, nx - 1)], 0.0))
        if self.y_edges is not None:
            for k in range(ny + 1):
                ix = np.arange(nx)
                l = (k - 1) * nx + ix if k > 0 else np.full(nx, -1)
                h = k * nx + ix if k < ny else np.full(nx, -1)
                s = np.full(nx, 2 if k == 0 else 3 if k == ny else INTERIOR)
                lo.append(l), hi.append(h), side.append(s)
                area.append(dxc.copy()), axis.append(np.ones(nx, np.int64))
                half_lo.append(np.full(nx, 0.5 * dyc[k - 1] if k > 0 else 0.0))
                half_hi.append(np.full(nx, 0.5 * dyc[k] if k < ny else 0.0))
        fl = dict(
            face_lo=np.concatenate(lo).astype(np.int64),
            face_hi=np.concatenate(hi).astype(np.int64),
            face_area=np.concatenate(area),
            face_axis=np.concatenate(axis),
            face_side=np.concatenate(side).astype(np.int64),
            face_half_lo=np.concatenate(half_lo),
            face_half_hi=np.concatenate(half_hi),
        )
        for k, v in fl.items():
            v.setflags(write=False)
            object.__setattr__(self, k, v)

    @property
    def n_faces(self) -> int:
        return self.face_lo.size

    @property
    def face_distance(self) -> np.ndarray:
        """Center-to-center distance, or center-to-face on the boundary."""
        return self.face_half_lo + self.face_half_hi

    def interior_faces(self) -> np.ndarray:
        return np.flatnonzero(self.face_side == INTERIOR)

    def boundary_faces(self, side: int) -> np.ndarray:
        return np.flatnonzero(self.face_side == side)

    def face_cell(self, faces: np.ndarray) -> np.ndarray:
        """The single in-domain cell of each boundary face."""
        return np.where(self.face_lo[faces] >= 0, self.face_lo[faces], self.face_hi[faces])

    def sides(self) -> tuple[int, ...]:
        return (0, 1) if self.dim == 1 else (0, 1, 2, 3)

    def divergence_signs(self):
        """(cell, face, sign) triples: +1 where the cell is ``lo`` (outflow along the normal)."""
        f = np.arange(self.n_faces)
        m_lo = self.face_lo >= 0
        m_hi = self.face_hi >= 0
        cells = np.concatenate([self.face_lo[m_lo], self.face_hi[m_hi]])
        faces = np.concatenate([f[m_lo], f[m_hi]])
        signs = np.concatenate([np.ones(m_lo.sum()), -np.ones(m_hi.sum())])
        return cells, faces, signs

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        ye = (self.y_edges is None and other.y_edges is None) or (
            self.y_edges is not None and other.y_edges is not None
            and np.array_equal(self.y_edges, other.y_edges))
        return ye and np.array_equal(self.x_edges, other.x_edges) and np.array_equal(
            self.material, other.material)

    __hash__ = None


def assign_regions(xc, yc, regions_boxes, dim: int) -> np.ndarray:
    """Map cell centers to region indices.

    ``regions_boxes`` is a list (one per region) of box lists; a region with
    ``None`` is the background. Boxes of different regions may not claim the
    same cell, and without a background every cell must be claimed.
    """
    n = xc.size
    mat = np.full(n, -1, dtype=np.int64)
    background = [i for i, b in enumerate(regions_boxes) if b is None]
    if len(background) > 1:
        raise MeshError("at most one background region")
    for r, boxes in enumerate(regions_boxes):
        if boxes is None:
            continue
        inside = np.zeros(n, dtype=bool)
        for box in boxes:
            (x0, x1) = box[0]
            m = (xc >= x0) & (xc <= x1)
            if dim == 2:
                (y0, y1) = box[1]
                m &= (yc >= y0) & (yc <= y1)
            inside |= m
        clash = inside & (mat >= 0) & (mat != r)
        if np.any(clash):
            raise MeshError(f"region {r} overlaps region {mat[clash][0]}")
        mat[inside] = r
    if background:
        mat[mat < 0] = background[0]
    if np.any(mat < 0):
        i = int(np.flatnonzero(mat < 0)[0])
        raise MeshError(f"cell {i} at ({xc[i]}, {yc[i]}) is not covered by any region")
    return mat


def build_mesh(x_segments, region_boxes, y_segments=None) -> Mesh:
    xe = edges_from_segments(x_segments)
    ye = None if y_segments is None else edges_from_segments(y_segments)
    tmp = Mesh(xe, ye, np.zeros((xe.size - 1) * (1 if ye is None else ye.size - 1), np.int64))
    mat = assign_regions(tmp.x_center, tmp.y_center, region_boxes, tmp.dim)
    return Mesh(xe, ye, mat)


def harmonic_interface_opacity(s_i, s_j, d_i, d_j):
    """Size-weighted harmonic mean of two opacities."""
    s_i, s_j = np.asarray(s_i, float), np.asarray(s_j, float)
    if np.any(~(s_i > 0)) or np.any(~(s_j > 0)):
        from .physics import DomainError
        raise DomainError("interface opacity needs positive opacities")
    return _harmonic(s_i, s_j, d_i, d_j)


def _harmonic(s_i, s_j, d_i, d_j):
    # zero opacity on either side gives zero
    s_i, s_j = np.asarray(s_i, float), np.asarray(s_j, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (d_i + d_j) / (d_i / s_i + d_j / s_j)
    return np.where((s_i > 0) & (s_j > 0), out, 0.0)


def interface_temperature(T_i, T_j, d_i, d_j):
    """Size-weighted fourth-power average."""
    T_i, T_j = np.asarray(T_i, float), np.asarray(T_j, float)
    return ((d_i * T_i**4 + d_j * T_j**4) / (d_i + d_j)) ** 0.25
