"""Benchmark problem presets with full-scale and desk-scale profiles.

Desk profiles keep the physics of the full preset but cut the particle
budget by at least 10x, shorten the end time and (where the mesh is large)
coarsen the cells, so that each one runs in seconds to a few minutes.
"""
from __future__ import annotations

from .config import ConfigError, RunConfig

GRAY = {"count": 1, "min": 1e-8, "max": 1e5, "spacing": "log"}
MARSHAK_GROUPS = {"count": 25, "min": 1e-3, "max": 100.0, "spacing": "log"}
LARSEN_GROUPS = {"count": 50, "min": 1e-5, "max": 10.0, "spacing": "log"}

PLANCK_1KEV = {"type": "planck", "T": 1.0}
REFLECT = {"type": "reflective"}


def _region(name, opacity, cv, boxes=None):
    return {"name": name, "opacity": opacity, "cv": cv, "boxes": boxes}


def _infinite_medium():
    full = dict(x_segments=[[0.0, 1.0, 0.02]],
                regions=[_region("medium", {"model": "power_law", "sigma0": 300.0, "power": 3.0},
                                 0.3)],
                groups=GRAY, dt=0.0025, t_end=1.0, initial_temperature=1.0,
                boundaries={"left": REFLECT, "right": REFLECT}, budget=2_000_000)
    desk = dict(budget=200_000, t_end=0.25)
    return full, desk


def _marshak(sigma0):
    full = dict(x_segments=[[0.0, 5.0, 0.005]],
                regions=[_region("slab", {"model": "pow_three_sqrt_t", "sigma0": sigma0}, 0.1)],
                groups=MARSHAK_GROUPS, dt=0.0025, t_end=1.0, initial_temperature=1e-3,
                boundaries={"left": PLANCK_1KEV, "right": REFLECT}, budget=2_000_000)
    desk = dict(x_segments=[[0.0, 5.0, 0.02]], budget=200_000, t_end=0.3)
    return full, desk


def _hetero(layout, t_end):
    # layout: (x0, x1, dx, desk dx, sigma0) per slab
    regions, segs, desk_segs = [], [], []
    for i, (x0, x1, dx, desk_dx, s0) in enumerate(layout):
        regions.append(_region(f"slab{i}", {"model": "pow_three_sqrt_t", "sigma0": s0}, 0.1,
                               [[[x0, x1]]]))
        segs.append([x0, x1, dx])
        desk_segs.append([x0, x1, desk_dx])
    full = dict(x_segments=segs, regions=regions, groups=MARSHAK_GROUPS, dt=0.00125, t_end=t_end,
                initial_temperature=1e-3, boundaries={"left": PLANCK_1KEV, "right": REFLECT},
                budget=2_000_000)
    desk = dict(x_segments=desk_segs, budget=200_000, t_end=0.3)
    return full, desk


def _larsen():
    layout = [(0.0, 2.0, 0.2, 1.0), (2.0, 3.0, 0.02, 1000.0), (3.0, 4.0, 0.1, 1.0)]
    regions = [_region(f"zone{i}", {"model": "larsen", "sigma0": s0}, 0.05109, [[[x0, x1]]])
               for i, (x0, x1, _, s0) in enumerate(layout)]
    full = dict(x_segments=[[x0, x1, dx] for x0, x1, dx, _ in layout], regions=regions,
                groups=LARSEN_GROUPS, dt=0.005, t_end=0.9, initial_temperature=1e-3,
                boundaries={"left": PLANCK_1KEV, "right": {"type": "vacuum"}},
                budget=2_000_000)
    desk = dict(budget=50_000, t_end=0.3)
    return full, desk


def _hohlraum():
    walls = [[[0.1, 0.15], [0.0, 0.45]], [[0.55, 0.95], [0.0, 0.45]],
             [[0.1, 1.4], [0.6, 0.65]], [[1.35, 1.4], [0.0, 0.65]]]
    full = dict(x_segments=[[0.0, 1.4, 0.005]], y_segments=[[0.0, 0.65, 0.005]],
                regions=[_region("void", {"model": "constant", "sigma0": 1e-8}, 1e-4),
                         _region("wall", {"model": "larsen", "sigma0": 1000.0}, 0.3, walls)],
                groups=LARSEN_GROUPS, dt=0.0025, t_end=10.0, initial_temperature=1e-3,
                boundaries={"left": {"type": "planck", "T": 0.3}, "right": {"type": "planck", "T": 1e-3},
                            "bottom": REFLECT, "top": {"type": "planck", "T": 1e-3}},
                budget=6_000_000, lineouts=[0.45, 0.65])
    desk = dict(x_segments=[[0.0, 1.4, 0.05]], y_segments=[[0.0, 0.65, 0.05]], budget=50_000,
                t_end=0.05)
    return full, desk


_BUILDERS = {
    "infinite-medium": _infinite_medium,
    "marshak-thin": lambda: _marshak(10.0),
    "marshak-thick": lambda: _marshak(1000.0),
    "marshak-hetero-a": lambda: _hetero([(0.0, 2.0, 0.02, 0.08, 10.0),
                                         (2.0, 3.0, 0.005, 0.02, 1000.0)], 1.0),
    "marshak-hetero-b": lambda: _hetero([(0.0, 0.5, 0.005, 0.02, 1000.0),
                                         (0.5, 1.5, 0.02, 0.1, 10.0)], 5.0),
    "larsen": _larsen,
    "hohlraum": _hohlraum,
}

PRESETS = tuple(_BUILDERS)


def preset(name: str, desk: bool = False, **overrides) -> RunConfig:
    """Full-scale benchmark configuration, or its desk profile."""
    if name not in _BUILDERS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    full, desk_over = _BUILDERS[name]()
    d = dict(full, name=name)
    if desk:
        d.update(desk_over)
        d["name"] = f"{name}-desk"
    d.update(overrides)
    return RunConfig.from_dict(d)


def desk_profile(name: str) -> dict:
    """The keys a desk profile overrides."""
    if name not in _BUILDERS:
        raise ConfigError(f"unknown preset {name!r}")
    return dict(_BUILDERS[name]()[1])
