from __future__ import annotations

from dataclasses import dataclass

from .transport import DEFAULT_CHUNKS


@dataclass(frozen=True)
class Settings:
    """Numerical controls shared by the particle solvers."""
    dt: float
    budget: int = 2_000_000
    seed: int = 1
    theta_form: str = "exp"
    tilt: bool = True
    gamma: float = 1e-8
    max_iter: int = 50
    chunks: int = DEFAULT_CHUNKS
    roulette: bool = False
    census_particles: int | None = None
    alpha: float = 1.0
