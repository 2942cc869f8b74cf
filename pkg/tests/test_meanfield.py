import math

import numpy as np
import pytest

from luttinger2d import AntinodalGrid, MicroParams, bisect_gap, derive_effective_params, gap_phase_scan, mf_bands, solve_gap
from luttinger2d.bosons import effective_antinodal_couplings
from luttinger2d.meanfield import ConvergenceError, gap_residual, gapped_interval


def setup(V=4.0, nu=0.5, n=64):
    eff = derive_effective_params(MicroParams(t=1.0, V=V, nu=nu))
    return eff, AntinodalGrid.for_params(eff, n)


def test_screened_g3_reference():
    g3, g4 = effective_antinodal_couplings(derive_effective_params(MicroParams(t=1.0, V=2.0, nu=0.55)))
    assert g3 == pytest.approx(3.5096167457657596226, rel=1e-14)
    assert g4 == 0.0
    g3h, _ = effective_antinodal_couplings(derive_effective_params(MicroParams(t=1.0, V=2.0, nu=0.5)))
    assert g3h == pytest.approx(3.5170939859895522907, rel=1e-14)


def test_grid_is_symmetric_midpoint():
    x = AntinodalGrid(8, 2.0).axis()
    np.testing.assert_allclose(x, -x[::-1], atol=1e-15)
    assert np.all(np.abs(x) < math.pi / 2)


def test_bands():
    eff, grid = setup()
    up, down = mf_bands(grid.momenta(), 0.3, eff)
    np.testing.assert_allclose(up - down, 2 * np.hypot(eff.c_F * grid.momenta().k_plus * grid.momenta().k_minus, 0.3))
    assert np.all(up >= 0.3 - eff.mu_a - 1e-15)


def test_zero_coupling_gives_zero_gap():
    eff, grid = setup(V=0.0)
    sol = solve_gap(eff, grid)
    assert sol.Delta == 0.0
    assert bisect_gap(eff, grid) == 0.0


def test_baseline_gap():
    eff, grid = setup()
    sol = solve_gap(eff, grid)
    assert sol.Delta == pytest.approx(0.18998558612638686, rel=1e-8)
    assert sol.residual <= 1e-10 * eff.t
    assert gap_residual(sol, eff, grid) == sol.residual
    assert sol.filling_antinodal == 0.0


def test_fixed_point_matches_bisection():
    eff, grid = setup()
    assert abs(solve_gap(eff, grid).Delta - bisect_gap(eff, grid)) <= 1e-8


@pytest.mark.parametrize("Delta0", [0.01, 0.5, 3.0])
def test_independent_of_start(Delta0):
    eff, grid = setup()
    assert solve_gap(eff, grid, Delta0=Delta0).Delta == pytest.approx(0.18998558612638686, abs=1e-8)


def test_particle_hole_mirror():
    a = solve_gap(*setup(nu=0.49)).Delta
    b = solve_gap(*setup(nu=0.51)).Delta
    assert abs(a - b) <= 1e-8


def test_monotone_in_g3():
    eff, grid = setup()
    gaps = [solve_gap(eff, grid, g3=g).Delta for g in np.linspace(2.0, 6.0, 10)]
    assert np.all(np.diff(gaps) > 0)


def test_temperature_suppresses_gap():
    eff, grid = setup()
    Ts = [0.0, 0.03, 0.05, 0.08, 0.1, 0.2]
    gaps = [solve_gap(eff, grid, T=T).Delta for T in Ts]
    assert np.all(np.diff(gaps) <= 1e-12)
    assert gaps[-1] == 0.0 and gaps[-2] > 0.0
    assert gaps[3] == pytest.approx(0.14064, abs=1e-4)


def test_grid_convergence():
    eff, _ = setup()
    a = solve_gap(eff, AntinodalGrid.for_params(eff, 64)).Delta
    b = solve_gap(eff, AntinodalGrid.for_params(eff, 128)).Delta
    assert abs(a - b) / b < 0.01


def test_scan_symmetric_and_gapped():
    nus = [0.5 + d for d in (-0.03, -0.012, -0.006, 0.0, 0.006, 0.012, 0.03)]
    rows = gap_phase_scan(1.0, 4.0, nus, n_grid=64)
    D = np.array([r.Delta for r in rows])
    np.testing.assert_allclose(D, D[::-1], atol=1e-8)
    interval = gapped_interval(rows)
    assert interval is not None
    assert interval[0] <= math.pi / 2 <= interval[1]
    assert not rows[0].gapped and rows[0].filling != 0.0
    assert rows[3].dfilling_dmu == 0.0


def test_gap_shrinks_with_V():
    gaps = [solve_gap(*setup(V=V)).Delta for V in (2.0, 3.0, 4.0, 6.0)]
    assert np.all(np.diff(gaps) > 0)


def test_convergence_errors():
    eff, grid = setup()
    with pytest.raises(ConvergenceError) as info:
        solve_gap(eff, grid, max_iter=3)
    assert len(info.value.trace) == 3
    with pytest.raises(ValueError):
        solve_gap(eff, grid, damping=0.0)
    with pytest.raises(ValueError):
        solve_gap(eff, grid, T=-1.0)
