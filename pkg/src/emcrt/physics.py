"""Planck integrals, multigroup coefficients and opacity models.

Photon energies ``e`` and temperatures ``T`` are both in keV, so the
dimensionless frequency is ``x = e / T``. Energies are in GJ, lengths in cm
and times in ns.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
from numba import njit, vectorize
from scipy.special import bernoulli, exp1

PI4 = np.pi**4
NORM = 15.0 / PI4

# t^3 / (e^t - 1) = sum_k B_k t^(k+2) / k!, integrated term by term
_NB = 40
_BERN = bernoulli(_NB)
_HEAD_COEF = np.array([_BERN[k] / ((k + 3) * factorial(k)) for k in range(_NB + 1)])
_TAIL_TERMS = 24
_SWITCH = 2.0


class DomainError(ValueError):
    """Argument outside the domain of a physical formula."""


@dataclass(frozen=True)
class PhysicalConstants:
    """Light speed [cm/ns] and radiation constant [GJ/cm^3/keV^4].

    ``c_planck`` is the light speed that enters ``phi = a c T^4``. It equals
    ``c`` except in scaled limit studies, where only transport speeds up.
    """

    c: float = 29.98
    a: float = 0.01372
    c_planck: float | None = None

    @property
    def cp(self) -> float:
        return self.c if self.c_planck is None else self.c_planck

    @property
    def ac(self) -> float:
        return self.a * self.cp


DEFAULT_CONSTANTS = PhysicalConstants()


@dataclass(frozen=True, eq=False)
class FrequencyGroupGrid:
    edges: np.ndarray
    spacing: str = "explicit"

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=float)
        if e.ndim != 1 or e.size < 2:
            raise DomainError("group grid needs at least two edges")
        if np.any(e <= 0) or np.any(np.diff(e) <= 0):
            raise DomainError("group edges must be positive and strictly increasing")
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)

    @classmethod
    def log(cls, count: int, emin: float, emax: float) -> "FrequencyGroupGrid":
        return cls(np.geomspace(emin, emax, count + 1), "log")

    @property
    def G(self) -> int:
        return self.edges.size - 1

    @property
    def lo(self) -> np.ndarray:
        return self.edges[:-1]

    @property
    def hi(self) -> np.ndarray:
        return self.edges[1:]

    def __eq__(self, other):
        return (isinstance(other, FrequencyGroupGrid) and self.spacing == other.spacing
                and np.array_equal(self.edges, other.edges))

    def __hash__(self):
        return hash((self.spacing, self.edges.tobytes()))


def _check_T(T):
    T = np.asarray(T, dtype=float)
    if np.any(~(T > 0)):
        raise DomainError("temperature must be positive")
    return T


def planck(e, T, consts: PhysicalConstants = DEFAULT_CONSTANTS):
    """Spectral Planck intensity B(e, T), normalized so its e-integral is acT^4/4pi."""
    e = np.asarray(e, dtype=float)
    T = _check_T(T)
    if np.any(~(e > 0)):
        raise DomainError("photon energy must be positive")
    x = e / T
    return consts.ac / (4 * np.pi) * NORM * e**3 / np.expm1(x)


@njit(cache=True)
def _head1(x):
    # normalized integral over [0, x], x < 2
    s = 0.0
    for i in range(_HEAD_COEF.size - 1, -1, -1):
        s = s * x + _HEAD_COEF[i]
    return NORM * s * x**3


@njit(cache=True)
def _tail1(x):
    # normalized integral over [x, inf), x >= 2; stops once terms stop mattering
    q = np.exp(-x)
    qn = 1.0
    s = 0.0
    for n in range(1, _TAIL_TERMS + 1):
        qn *= q
        term = qn * (x**3 / n + 3 * x * x / n**2 + 6 * x / n**3 + 6 / n**4)
        s += term
        if term <= 1e-18 * s:
            break
    return NORM * s


@vectorize(["float64(float64)"], cache=True)
def _head(x):
    return _head1(x)


@vectorize(["float64(float64)"], cache=True)
def _tail(x):
    return _tail1(x)


@vectorize(["float64(float64)"], cache=True)
def _cdf_head(x):
    return _head1(x) if x < _SWITCH else 1.0 - _tail1(x)


@vectorize(["float64(float64)"], cache=True)
def _cdf_tail(x):
    return 1.0 - _head1(x) if x < _SWITCH else _tail1(x)


def planck_cdf(x):
    """Fraction of the Planck spectrum below x = e/T, and its complement."""
    x = np.asarray(x, dtype=float)
    return _cdf_head(x), _cdf_tail(x)


@vectorize(["float64(float64, float64)"], cache=True)
def _between(x1, x2):
    if x1 >= _SWITCH:
        return _tail1(x1) - _tail1(x2)
    h2 = _head1(x2) if x2 < _SWITCH else 1.0 - _tail1(x2)
    return h2 - _head1(x1)


def fraction_between(x1, x2):
    """Planck fraction on [x1, x2] without cancellation in either tail."""
    return _between(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))


def _xf(x):
    # x * f(x) with f the normalized Planck density, safe for large x
    em = np.exp(-x)
    return NORM * x**4 * em / -np.expm1(-x)


def _pick(arr, g):
    return arr if g is None else arr[..., g]


def group_fraction(grid: FrequencyGroupGrid, T, g=None):
    """b_g(T) = 4 pi B_g / (a c T^4), shape ``T.shape + (G,)`` unless ``g`` is given."""
    T = _check_T(T)[..., None]
    return _pick(fraction_between(grid.lo / T, grid.hi / T), g)


def group_planck(grid: FrequencyGroupGrid, T, g=None, consts: PhysicalConstants = DEFAULT_CONSTANTS):
    T = _check_T(T)
    b = group_fraction(grid, T)
    return _pick(b * (consts.ac * T**4 / (4 * np.pi))[..., None], g)


def derivative_coefficient(grid: FrequencyGroupGrid, T, g=None):
    """b_g + (T/4) db_g/dT, which equals (4 pi / 4acT^3) dB_g/dT."""
    T = _check_T(T)[..., None]
    x1, x2 = grid.lo / T, grid.hi / T
    return _pick(fraction_between(x1, x2) - 0.25 * (_xf(x2) - _xf(x1)), g)


def group_planck_derivative(grid: FrequencyGroupGrid, T, g=None,
                            consts: PhysicalConstants = DEFAULT_CONSTANTS):
    T = _check_T(T)
    k = derivative_coefficient(grid, T)
    return _pick(k * (consts.ac * T**3 / np.pi)[..., None], g)


def rosseland_mean(grid: FrequencyGroupGrid, sigma, T):
    """Discrete Rosseland mean over the last axis of ``sigma``."""
    sigma = np.asarray(sigma, dtype=float)
    if np.any(~(sigma > 0)):
        raise DomainError("Rosseland mean needs positive group opacities")
    w = derivative_coefficient(grid, T)
    return np.sum(w, axis=-1) / np.sum(w / sigma, axis=-1)


# opacity models ------------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    sigma0: float

    def group_average(self, grid: FrequencyGroupGrid, T):
        T = _check_T(T)
        return np.full(T.shape + (grid.G,), float(self.sigma0))


@dataclass(frozen=True)
class PowerLaw:
    """Gray sigma0 * T^-p."""
    sigma0: float
    power: float = 3.0

    def group_average(self, grid: FrequencyGroupGrid, T):
        T = _check_T(T)
        s = self.sigma0 * T ** (-self.power)
        return np.broadcast_to(s[..., None], T.shape + (grid.G,)).copy()


@dataclass(frozen=True)
class PowThreeSqrtT:
    """sigma0 / (e^3 sqrt(T))."""
    sigma0: float

    def group_average(self, grid: FrequencyGroupGrid, T):
        T = _check_T(T)
        e1, e2 = grid.lo, grid.hi
        shape = (0.5 / e1**2 - 0.5 / e2**2) / (e2 - e1)
        return self.sigma0 * shape / np.sqrt(T)[..., None]


def _larsen_H(x):
    # int_x^inf (1 - e^-t) / t^3 dt
    return (-np.expm1(-x) + x * np.exp(-x)) / (2 * x * x) - 0.5 * exp1(x)


@dataclass(frozen=True)
class LarsenType:
    """sigma0 (1 - exp(-e/T)) / e^3."""
    sigma0: float

    def group_average(self, grid: FrequencyGroupGrid, T):
        T = _check_T(T)[..., None]
        e1, e2 = grid.lo, grid.hi
        x1, x2 = e1 / T, e2 / T
        return self.sigma0 * (_larsen_H(x1) - _larsen_H(x2)) / (T * T * (e2 - e1))


OPACITY_MODELS = {
    "constant": Constant,
    "power_law": PowerLaw,
    "pow_three_sqrt_t": PowThreeSqrtT,
    "larsen": LarsenType,
}


def opacity_from_dict(d: dict):
    d = dict(d)
    name = d.pop("model")
    if name not in OPACITY_MODELS:
        raise ValueError(f"unknown opacity model {name!r}")
    return OPACITY_MODELS[name](**d)


def opacity_to_dict(model) -> dict:
    for name, cls in OPACITY_MODELS.items():
        if type(model) is cls:
            out = {"model": name, "sigma0": float(model.sigma0)}
            if isinstance(model, PowerLaw):
                out["power"] = float(model.power)
            return out
    raise ValueError(f"unknown opacity model {model!r}")


def group_opacity(model, grid: FrequencyGroupGrid, T, g=None):
    return _pick(model.group_average(grid, T), g)
