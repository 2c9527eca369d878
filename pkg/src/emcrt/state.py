"""Simulation state, per-step records and checkpoints."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .particles import ParticleBank
from .problem import Problem


@dataclass
class SimState:
    time: float
    step: int
    T: np.ndarray
    census: ParticleBank
    radiation: np.ndarray | None = None   # E^I per (cell, group) when there is no census list

    def census_energy(self, problem: Problem) -> np.ndarray:
        if self.radiation is not None:
            return self.radiation
        return self.census.energy(problem.n_cells, problem.G)

    def radiation_temperature(self, problem: Problem) -> np.ndarray:
        E = self.census_energy(problem).sum(axis=1)
        return (E / (problem.consts.a * problem.mesh.volume)) ** 0.25

    def rho(self, problem: Problem) -> np.ndarray:
        return problem.consts.c * self.census_energy(problem) / problem.mesh.volume[:, None]

    def material_energy(self, problem: Problem) -> float:
        return float(np.sum(problem.cv * self.T * problem.mesh.volume))


@dataclass
class StepRecord:
    """Energy bookkeeping and solver statistics of one step (energies per group)."""
    step: int
    time: float
    dt: float
    picard_iterations: int = 0
    increments: list = field(default_factory=list)
    sampled: np.ndarray | None = None
    absorbed: np.ndarray | None = None
    census: np.ndarray | None = None
    leaked: np.ndarray | None = None
    injected: float = 0.0
    emitted: float = 0.0
    deposited: float = 0.0
    floor_energy: float = 0.0
    roulette_energy: float = 0.0
    floored: int = 0
    particles: dict = field(default_factory=dict)
    collisions: int = 0
    wall: float = 0.0

    group_mixing: bool = False    # effective scattering moves energy between groups

    def conservation_error(self, per_group: bool | None = None) -> float:
        """Relative mismatch of sampled vs absorbed + census + leaked.

        Per group unless the step moves energy between groups, in which case
        only the totals balance.
        """
        if self.sampled is None:
            return 0.0
        if per_group is None:
            per_group = not self.group_mixing
        lhs = self.sampled
        rhs = self.absorbed + self.census + self.leaked
        if not per_group:
            lhs, rhs = np.sum(lhs), np.sum(rhs)
        scale = max(float(np.sum(np.abs(self.sampled))), np.finfo(float).tiny)
        return float(np.max(np.abs(lhs - rhs)) / scale)


def save_checkpoint(path, state: SimState) -> None:
    arrays = {f"census_{k}": v for k, v in state.census.as_dict().items()}
    extra = {} if state.radiation is None else {"radiation": state.radiation}
    np.savez(path, time=state.time, step=state.step, T=state.T, **arrays, **extra)


def load_checkpoint(path) -> SimState:
    with np.load(path) as z:
        census = ParticleBank(**{k[7:]: z[k] for k in z.files if k.startswith("census_")})
        rad = z["radiation"] if "radiation" in z.files else None
        return SimState(float(z["time"]), int(z["step"]), z["T"].copy(), census, rad)
