import math

import numpy as np
import pytest

from eulerlab.eos import GasLaw
from eulerlab.fields import (DataTriple, FluidState, Grid, integrate_energy,
                             load_state_csv, save_state_csv, validate_initial_data)

LAW2 = GasLaw(a=1.0, gamma=2.0)


def unit_grid_1d(n=8):
    return Grid(counts=(n,), lower=(0.0,), upper=(1.0,))


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(counts=(1,), lower=(0.0,), upper=(1.0,))
    with pytest.raises(ValueError):
        Grid(counts=(4,), lower=(1.0,), upper=(0.0,))
    with pytest.raises(ValueError):
        Grid(counts=(4, 4, 4), lower=(0.0,) * 3, upper=(1.0,) * 3)
    with pytest.raises(ValueError):
        Grid(counts=(4,), lower=(0.0,), upper=(1.0,), boundary=("weird",))


def test_grid_geometry():
    g = Grid(counts=(4, 8), lower=(0.0, -1.0), upper=(2.0, 1.0))
    assert g.d == 2
    assert g.spacing == (0.5, 0.25)
    assert g.cell_volume == 0.125
    assert np.allclose(g.centers(0), [0.25, 0.75, 1.25, 1.75])


def test_state_invariants():
    g = unit_grid_1d(4)
    with pytest.raises(ValueError, match="negative density"):
        FluidState(g, [-1.0, 1, 1, 1], np.zeros((4, 1)))
    with pytest.raises(ValueError, match="vacuum"):
        FluidState(g, [0.0, 1, 1, 1], [[1.0], [0], [0], [0]])
    with pytest.raises(ValueError, match="finite"):
        FluidState(g, [np.nan, 1, 1, 1], np.zeros((4, 1)))
    s = FluidState(g, [0.0, 1, 1, 1], np.zeros((4, 1)))
    with pytest.raises(ValueError):
        s.rho[0] = 5.0  # arrays are read-only


def test_integrate_energy_examples():
    g = unit_grid_1d()
    s = FluidState.constant(g, 1.0, 0.0)
    assert integrate_energy(s, LAW2) == pytest.approx(1.0, abs=1e-15)

    vac = FluidState(g, np.zeros(8), np.zeros((8, 1)))
    assert integrate_energy(vac, LAW2) == 0.0

    law14 = GasLaw(a=1.0, gamma=1.4)
    s2 = FluidState.constant(g, 2.0, 1.0)  # m = rho*u = 2
    assert integrate_energy(s2, law14) == pytest.approx(7.5975395538644713, rel=1e-13)


def test_integrate_energy_infinite_on_forced_vacuum_momentum():
    g = unit_grid_1d(4)
    s = FluidState(g, [0.0, 1, 1, 1], [[1.0], [0], [0], [0]], check=False)
    assert integrate_energy(s, LAW2) == math.inf


def test_validate_initial_data():
    g = unit_grid_1d()
    s = FluidState.constant(g, 1.0, 0.0)
    E_exact = integrate_energy(s, LAW2)

    ok = validate_initial_data(DataTriple(s, E_exact), LAW2)
    assert ok.accepted and ok.slack == pytest.approx(0.0, abs=1e-14)

    bad = validate_initial_data(DataTriple(s, 0.5 * E_exact), LAW2)
    assert not bad.accepted

    vac_mom = FluidState(g, [0.0] + [1.0] * 7, [[1.0]] + [[0.0]] * 7, check=False)
    rej = validate_initial_data(DataTriple(vac_mom, 100.0), LAW2)
    assert not rej.accepted
    assert any("vacuum" in msg for msg in rej.messages)


def test_integrate_energy_convexity():
    rng = np.random.default_rng(7)
    g = unit_grid_1d(16)
    for _ in range(50):
        r1 = rng.uniform(0.1, 2.0, 16)
        r2 = rng.uniform(0.1, 2.0, 16)
        m1 = rng.uniform(-1.0, 1.0, (16, 1))
        m2 = rng.uniform(-1.0, 1.0, (16, 1))
        lam = rng.uniform(0, 1)
        s1, s2 = FluidState(g, r1, m1), FluidState(g, r2, m2)
        mid = FluidState(g, lam * r1 + (1 - lam) * r2, lam * m1 + (1 - lam) * m2)
        lhs = integrate_energy(mid, LAW2)
        rhs = lam * integrate_energy(s1, LAW2) + (1 - lam) * integrate_energy(s2, LAW2)
        assert lhs <= rhs + 1e-12 * max(1.0, rhs)


def test_integrate_energy_axis_relabel_invariance():
    rng = np.random.default_rng(11)
    g = Grid(counts=(6, 4), lower=(0.0, 0.0), upper=(1.0, 1.0))
    gt = Grid(counts=(4, 6), lower=(0.0, 0.0), upper=(1.0, 1.0))
    rho = rng.uniform(0.2, 2.0, (6, 4))
    m = rng.uniform(-1.0, 1.0, (6, 4, 2))
    s = FluidState(g, rho, m)
    st = FluidState(gt, rho.T, np.stack([m[..., 1].T, m[..., 0].T], axis=-1))
    assert integrate_energy(s, LAW2) == pytest.approx(integrate_energy(st, LAW2), rel=1e-14)


def test_state_csv_roundtrip_1d(tmp_path):
    g = unit_grid_1d(5)
    rng = np.random.default_rng(3)
    s = FluidState(g, rng.uniform(0.5, 2, 5), rng.uniform(-1, 1, (5, 1)))
    path = tmp_path / "state.csv"
    save_state_csv(s, path)
    loaded = load_state_csv(g, path)
    assert np.array_equal(loaded.rho, s.rho)
    assert np.array_equal(loaded.m, s.m)


def test_state_csv_roundtrip_2d(tmp_path):
    g = Grid(counts=(3, 4), lower=(0.0, 0.0), upper=(1.0, 1.0))
    rng = np.random.default_rng(4)
    s = FluidState(g, rng.uniform(0.5, 2, (3, 4)), rng.uniform(-1, 1, (3, 4, 2)))
    path = tmp_path / "state.csv"
    save_state_csv(s, path)
    loaded = load_state_csv(g, path)
    assert np.array_equal(loaded.rho, s.rho)
    assert np.array_equal(loaded.m, s.m)
