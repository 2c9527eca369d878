"""Counter-based random streams.

Vectorized sampling draws from a Philox generator keyed by
``(seed, step, source class)``; in-flight draws inside the tracking kernels
hash ``(seed, step, particle index, counter)`` with splitmix64.
"""
import numpy as np
from numba import njit

CENSUS_INIT, BOUNDARY, GHOST_CENSUS, GHOST_BOUNDARY, EMISSION, ROULETTE = range(6)

GOLD = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = np.uint64(30), np.uint64(27), np.uint64(31), np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


def stream(seed: int, step: int, cls: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(step), int(cls)))
    return np.random.Generator(np.random.Philox(ss))


@njit(inline="always")
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(inline="always")
def particle_key(seed, step, p):
    return mix64(mix64(np.uint64(seed) + np.uint64(step) * GOLD) ^ mix64(np.uint64(p) + GOLD))


@njit(inline="always")
def uniform(key, ctr):
    """Uniform on the open interval (0, 1)."""
    z = mix64(np.uint64(key) + np.uint64(ctr) * GOLD)
    return (float(z >> _S11) + 0.5) * _INV53
