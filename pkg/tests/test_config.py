import pytest

from emcrt.config import ConfigError, RunConfig, load_config, parse_config
from emcrt.mesh import PlanckSource, Reflective, Vacuum
from emcrt.physics import LarsenType, PowerLaw, PowThreeSqrtT
from emcrt.presets import PRESETS, desk_profile, preset

MINIMAL = """
x_segments: [[0.0, 1.0, 0.1]]
regions:
  - {name: slab, cv: 0.1, opacity: {model: pow_three_sqrt_t, sigma0: 10}}
groups: {count: 4, min: 1e-3, max: 100, spacing: log}
dt: 0.0025
t_end: 0.01
boundaries: {left: {type: planck, T: 1}, right: {type: vacuum}}
"""


def test_parse_minimal_and_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.solver == "emc" and cfg.theta_form == "exp" and cfg.tilt
    assert cfg.picard == {"gamma": 1e-8, "max_iter": 50}
    p = cfg.problem()
    assert p.n_cells == 10 and p.G == 4
    assert isinstance(p.boundaries[0], PlanckSource) and isinstance(p.boundaries[1], Vacuum)


@pytest.mark.parametrize("name", PRESETS)
@pytest.mark.parametrize("desk", [False, True])
def test_round_trip(name, desk, tmp_path):
    cfg = preset(name, desk=desk)
    path = tmp_path / "c.yaml"
    cfg.save(path)
    back = load_config(path)
    assert back == cfg
    assert parse_config(back.dump()) == cfg


@pytest.mark.parametrize("patch, msg", [
    ("dt: 0", "dt"), ("dt: -1", "dt"), ("t_end: -0.1", "t_end"), ("budget: -5", "budget"),
    ("picard: {gamma: 0}", "gamma"), ("solver: mc", "solver"), ("theta_form: lin", "theta_form"),
    ("color: red", "unknown"), ("boundaries: {top: {type: vacuum}}", "y_segments"),
])
def test_invalid_values_rejected(patch, msg):
    key = patch.split(":")[0]
    lines = [l for l in MINIMAL.splitlines() if not l.startswith(key + ":")]
    with pytest.raises(ConfigError, match=msg):
        parse_config("\n".join(lines + [patch]))


def test_missing_key_and_bad_files(tmp_path):
    with pytest.raises(ConfigError, match="t_end"):
        parse_config(MINIMAL.replace("t_end: 0.01", ""))
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("x: [1, 2\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    bad.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_bad_geometry_is_config_error():
    with pytest.raises(ConfigError):
        parse_config(MINIMAL.replace("[[0.0, 1.0, 0.1]]", "[[0.0, 1.0, 0.3]]")).problem()
    with pytest.raises(ConfigError):
        parse_config(MINIMAL.replace("pow_three_sqrt_t", "tabulated")).problem()


def test_zero_end_time_and_infinite_gamma_accepted():
    cfg = parse_config(MINIMAL).replace(t_end=0.0, picard={"gamma": float("inf"), "max_iter": 50})
    assert cfg.t_end == 0.0


def test_infinite_medium_preset():
    cfg = preset("infinite-medium")
    p = cfg.problem()
    assert p.n_cells == 50 and cfg.dt == 0.0025
    op = p.regions[0].opacity
    assert isinstance(op, PowerLaw) and op.sigma0 == 300.0 and op.power == 3.0
    assert p.regions[0].cv == 0.3
    assert all(isinstance(b, Reflective) for b in p.boundaries.values())


def test_larsen_preset():
    cfg = preset("larsen")
    p = cfg.problem()
    assert p.G == 50
    assert p.grid.edges[0] == pytest.approx(1e-5) and p.grid.edges[-1] == pytest.approx(10.0)
    assert [r.opacity.sigma0 for r in p.regions] == [1.0, 1000.0, 1.0]
    assert all(isinstance(r.opacity, LarsenType) for r in p.regions)
    assert all(r.cv == 0.05109 for r in p.regions)
    assert cfg.dt == 0.005 and cfg.t_end == 0.9


def test_marshak_thick_preset():
    cfg = preset("marshak-thick")
    p = cfg.problem()
    assert isinstance(p.regions[0].opacity, PowThreeSqrtT) and p.regions[0].opacity.sigma0 == 1000.0
    assert p.mesh.dx.max() == pytest.approx(0.005) and cfg.dt == 0.0025
    assert isinstance(p.boundaries[0], PlanckSource) and p.boundaries[0].T_bc == 1.0


def test_hohlraum_preset_mesh():
    p = preset("hohlraum").problem()
    assert (p.mesh.nx, p.mesh.ny) == (280, 130)


@pytest.mark.parametrize("name", PRESETS)
def test_desk_profiles_shrink_budget(name):
    full, desk = preset(name), preset(name, desk=True)
    assert desk.budget * 10 <= full.budget
    assert desk.t_end <= full.t_end
    assert desk.problem().n_cells <= full.problem().n_cells
    assert set(desk_profile(name)) <= set(full.to_dict())


def test_unknown_preset():
    with pytest.raises(ConfigError, match="unknown preset"):
        preset("sedov")


def test_replace_rejects_unknown_key():
    with pytest.raises(ConfigError):
        preset("larsen").replace(colour=1)
