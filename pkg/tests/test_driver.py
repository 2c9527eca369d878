import numpy as np
import pytest

from emcrt.driver import cfl_number, run, step_times
from emcrt.presets import preset


def _small(**kw):
    base = dict(x_segments=[[0.0, 0.5, 0.05]], budget=5_000, t_end=0.01)
    base.update(kw)
    return preset("marshak-thin", desk=True, **base)


def test_zero_end_time_gives_initial_snapshot_only():
    res = run(_small(t_end=0.0))
    assert len(res.snapshots) == 1 and res.records == []
    assert res.final.time == 0.0 and np.all(res.final.T == 1e-3)


def test_step_times_exact_multiples():
    t = step_times(0.0025, 1.0)
    assert t.size == 400 and t[-1] == 1.0
    k = np.arange(1, 400)
    assert np.array_equal(t[:-1], 0.0025 * k)


def test_short_final_step():
    np.testing.assert_array_equal(step_times(0.003, 0.01), [0.003, 0.003 * 2, 0.003 * 3, 0.01])
    res = run(_small(dt=0.003, t_end=0.01))
    dts = [r.dt for r in res.records]
    assert dts[:3] == pytest.approx([0.003] * 3) and dts[-1] == pytest.approx(0.001)
    assert res.final.time == 0.01


def test_snapshot_cadence_and_times():
    res = run(_small(t_end=0.01, snapshot_every=2))
    assert [s.step for s in res.snapshots] == [0, 2, 4]
    assert [s.time for s in res.snapshots] == [0.0, 2 * 0.0025, 0.01]


def test_cfl_report():
    cfg = preset("marshak-thick")
    assert cfl_number(cfg.problem(), cfg.dt) == pytest.approx(29.98 * 0.0025 / 0.005)
    cfg = preset("hohlraum", desk=True)
    assert run(cfg.replace(t_end=0.0)).cfl == pytest.approx(29.98 * 0.0025 / 0.05)


@pytest.mark.parametrize("solver", ["emc", "imc", "diffusion"])
def test_all_solvers_run(solver):
    res = run(_small(solver=solver, boundaries={"left": {"type": "planck", "T": 1.0}}))
    assert len(res.records) == 4
    assert res.final.T[0] > res.final.T[-1]


def test_energy_ledger_closed_problem():
    cfg = preset("infinite-medium", desk=True, x_segments=[[0.0, 0.2, 0.02]], budget=5_000,
                 t_end=0.01)
    for solver in ("emc", "imc", "diffusion"):
        res = run(cfg.replace(solver=solver))
        assert res.energy_ledger_error() < 1e-8


def test_energy_ledger_open_problem():
    res = run(_small(boundaries={"left": {"type": "planck", "T": 1.0}, "right": {"type": "vacuum"}}))
    assert res.energy_ledger_error() < 1e-8


def test_marshak_thin_desk_wavefront_advances():
    cfg = preset("marshak-thin", desk=True)
    res = run(cfg.replace(snapshot_every=20))
    assert res.final.time == pytest.approx(0.3)
    x = res.problem.mesh.x_center

    def front(T):
        hot = T > 0.25
        return x[np.argmin(hot)] if hot[0] else 0.0

    fronts = [front(s.T) for s in res.snapshots]
    assert all(b >= a for a, b in zip(fronts, fronts[1:]))
    assert fronts[-1] > fronts[1] > 0
    assert max(r.conservation_error() for r in res.records) < 1e-10
