"""Run configuration: a YAML tree with fixed key names."""
from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .mesh import SIDES, MeshError, boundary_from_dict, boundary_to_dict
from .physics import FrequencyGroupGrid, opacity_from_dict, opacity_to_dict
from .problem import Problem, Region, make_problem
from .settings import Settings

SOLVERS = ("emc", "imc", "diffusion")
THETA_FORMS = ("exp", "inv_exp")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    x_segments: list
    regions: list                      # dicts: name, cv, opacity, boxes
    groups: dict                       # count/min/max/spacing or edges
    dt: float
    t_end: float
    y_segments: list | None = None
    boundaries: dict = field(default_factory=dict)
    initial_temperature: float = 1e-3
    budget: int = 200_000
    seed: int = 1
    solver: str = "emc"
    theta_form: str = "exp"
    tilt: bool = True
    picard: dict = field(default_factory=lambda: {"gamma": 1e-8, "max_iter": 50})
    snapshot_every: int = 0            # steps between snapshots, 0 = final only
    lineouts: list = field(default_factory=list)
    threads: int | None = None
    chunks: int = 8
    roulette: bool = False
    census_particles: int | None = None
    alpha: float = 1.0
    diffusion_scheme: str = "newton"
    name: str = "run"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ConfigError(f"t_end must be nonnegative, got {self.t_end}")
        if not self.budget >= 0:
            raise ConfigError(f"budget must be nonnegative, got {self.budget}")
        if not self.picard.get("gamma", 1e-8) > 0:
            raise ConfigError("picard.gamma must be positive")
        if int(self.picard.get("max_iter", 50)) < 1:
            raise ConfigError("picard.max_iter must be at least 1")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.theta_form not in THETA_FORMS:
            raise ConfigError(f"theta_form must be one of {THETA_FORMS}, got {self.theta_form!r}")
        if self.diffusion_scheme not in ("newton", "picard"):
            raise ConfigError(f"unknown diffusion_scheme {self.diffusion_scheme!r}")
        if not self.initial_temperature > 0:
            raise ConfigError("initial_temperature must be positive")
        if not self.regions:
            raise ConfigError("at least one region is required")
        if self.snapshot_every < 0:
            raise ConfigError("snapshot_every must be nonnegative")
        for side in self.boundaries:
            if side not in SIDES:
                raise ConfigError(f"unknown boundary side {side!r}")
        if self.y_segments is None and set(self.boundaries) & {"bottom", "top"}:
            raise ConfigError("bottom/top boundaries need y_segments")

    # -- construction of solver objects

    def grid(self) -> FrequencyGroupGrid:
        g = self.groups
        if "edges" in g:
            return FrequencyGroupGrid(np.asarray(g["edges"], dtype=float), "explicit")
        if g.get("spacing", "log") != "log":
            raise ConfigError(f"unknown group spacing {g.get('spacing')!r}")
        return FrequencyGroupGrid.log(int(g["count"]), float(g["min"]), float(g["max"]))

    def problem(self) -> Problem:
        try:
            regions = [Region(r["name"], opacity_from_dict(r["opacity"]), float(r["cv"]),
                              _boxes(r.get("boxes")))
                       for r in self.regions]
            bnd = {SIDES.index(k): boundary_from_dict(v) for k, v in self.boundaries.items()}
            return make_problem([tuple(s) for s in self.x_segments], regions, bnd, self.grid(),
                                None if self.y_segments is None
                                else [tuple(s) for s in self.y_segments])
        except (MeshError, KeyError, TypeError, ValueError) as err:
            raise ConfigError(str(err)) from err

    def settings(self) -> Settings:
        return Settings(dt=float(self.dt), budget=int(self.budget), seed=int(self.seed),
                        theta_form=self.theta_form, tilt=bool(self.tilt),
                        gamma=float(self.picard.get("gamma", 1e-8)),
                        max_iter=int(self.picard.get("max_iter", 50)), chunks=int(self.chunks),
                        roulette=bool(self.roulette), census_particles=self.census_particles,
                        alpha=float(self.alpha))

    def replace(self, **kw) -> "RunConfig":
        d = self.to_dict()
        for k, v in kw.items():
            if k not in d:
                raise ConfigError(f"unknown config key {k!r}")
            d[k] = v
        return RunConfig.from_dict(d)

    # -- serialization

    def to_dict(self) -> dict:
        return copy.deepcopy(asdict(self))

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        for key in ("x_segments", "regions", "groups", "dt", "t_end"):
            if key not in d:
                raise ConfigError(f"missing config key {key!r}")
        try:
            d = _coerce(d)
            return cls(**d)
        except (TypeError, ValueError) as err:
            if isinstance(err, ConfigError):
                raise
            raise ConfigError(str(err)) from err

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def save(self, path) -> None:
        Path(path).write_text(self.dump())


def _coerce(d: dict) -> dict:
    # YAML may hand back ints for floats and strings like "1e-3"
    for k in ("dt", "t_end", "initial_temperature", "alpha"):
        if k in d:
            d[k] = float(d[k])
    for k in ("budget", "seed", "chunks", "snapshot_every"):
        if k in d:
            d[k] = int(d[k])
    if "picard" in d:
        p = dict(d["picard"])
        if "gamma" in p:
            p["gamma"] = float(p["gamma"])
        if "max_iter" in p:
            p["max_iter"] = int(p["max_iter"])
        d["picard"] = p
    if "groups" in d:
        g = dict(d["groups"])
        for k in ("min", "max"):
            if k in g:
                g[k] = float(g[k])
        if "edges" in g:
            g["edges"] = [float(e) for e in g["edges"]]
        d["groups"] = g
    for k in ("x_segments", "y_segments"):
        if d.get(k) is not None:
            d[k] = [[float(v) for v in seg] for seg in d[k]]
    if "lineouts" in d:
        d["lineouts"] = [float(v) for v in d["lineouts"]]
    if "boundaries" in d:
        d["boundaries"] = {k: boundary_to_dict(boundary_from_dict(v))
                           for k, v in d["boundaries"].items()}
    if "regions" in d:
        regs = []
        for r in d["regions"]:
            r = dict(r)
            r["cv"] = float(r["cv"])
            r["opacity"] = opacity_to_dict(opacity_from_dict(r["opacity"]))
            if r.get("boxes") is not None:
                r["boxes"] = [[[float(v) for v in iv] for iv in box] for box in r["boxes"]]
            else:
                r["boxes"] = None
            regs.append(r)
        d["regions"] = regs
    return d


def _boxes(b):
    if b is None:
        return None
    return tuple(tuple(tuple(iv) for iv in box) for box in b)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as err:
        raise ConfigError(f"{path}: {err.strerror}") from err
    except yaml.YAMLError as err:
        raise ConfigError(f"{path}: {err}") from err
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return RunConfig.from_dict(data)


def parse_config(text: str) -> RunConfig:
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ConfigError("expected a mapping at top level")
    return RunConfig.from_dict(data)
