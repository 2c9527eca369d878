"""Mesh, groups, materials and boundaries bundled for the solvers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh import Mesh, PlanckSource, Reflective, Vacuum, build_mesh
from .physics import DEFAULT_CONSTANTS, FrequencyGroupGrid, PhysicalConstants


@dataclass(frozen=True)
class Region:
    name: str
    opacity: object
    cv: float
    boxes: tuple | None = None


@dataclass(eq=False)
class Problem:
    mesh: Mesh
    grid: FrequencyGroupGrid
    regions: list
    boundaries: dict
    consts: PhysicalConstants = DEFAULT_CONSTANTS
    cv: np.ndarray = field(init=False)
    _cells: list = field(init=False, repr=False)

    def __post_init__(self):
        mat = self.mesh.material
        self.cv = np.array([self.regions[m].cv for m in mat], dtype=float)
        self._cells = [np.flatnonzero(mat == r) for r in range(len(self.regions))]
        for side in self.mesh.sides():
            self.boundaries.setdefault(side, Reflective())

    @property
    def n_cells(self) -> int:
        return self.mesh.n_cells

    @property
    def G(self) -> int:
        return self.grid.G

    def sigma(self, T, cells=None) -> np.ndarray:
        """Group opacities (n, G). ``cells`` maps entries of T to mesh cells."""
        T = np.asarray(T, dtype=float)
        out = np.empty((T.size, self.G))
        if cells is None:
            for r, idx in zip(self.regions, self._cells):
                if idx.size:
                    out[idx] = r.opacity.group_average(self.grid, T[idx])
            return out
        mat = self.mesh.material[cells]
        for ri, r in enumerate(self.regions):
            idx = np.flatnonzero(mat == ri)
            if idx.size:
                out[idx] = r.opacity.group_average(self.grid, T[idx])
        return out

    def open_faces(self) -> np.ndarray:
        """Boundary faces that are not reflective, in face order."""
        m = self.mesh
        sides = [s for s in m.sides() if not isinstance(self.boundaries[s], Reflective)]
        if not sides:
            return np.zeros(0, np.int64)
        return np.sort(np.concatenate([m.boundary_faces(s) for s in sides]))

    def inflow_phi(self, faces: np.ndarray) -> np.ndarray:
        """Frequency-integrated incoming a c T_bc^4 on each boundary face, zero for vacuum."""
        out = np.zeros(faces.size)
        sides = self.mesh.face_side[faces]
        for s in np.unique(sides):
            b = self.boundaries[int(s)]
            if isinstance(b, PlanckSource):
                out[sides == s] = self.consts.ac * b.T_bc**4
        return out

    def planck_faces(self) -> np.ndarray:
        faces = self.open_faces()
        sides = self.mesh.face_side[faces]
        keep = np.array([isinstance(self.boundaries[int(s)], PlanckSource) for s in sides], bool)
        return faces[keep] if faces.size else faces


def make_problem(x_segments, regions: list, boundaries: dict, grid: FrequencyGroupGrid,
                 y_segments=None, consts: PhysicalConstants = DEFAULT_CONSTANTS) -> Problem:
    mesh = build_mesh(x_segments, [r.boxes for r in regions], y_segments)
    return Problem(mesh, grid, list(regions), dict(boundaries), consts)


__all__ = ["Problem", "Region", "make_problem", "Reflective", "Vacuum", "PlanckSource"]
