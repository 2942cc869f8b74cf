import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from luttinger2d import (
    KAPPA,
    BosonGrid,
    MicroParams,
    Momentum,
    QuadraticBosonForm,
    UnstableCouplingError,
    closed_form_dispersion,
    coupling_for_gamma,
    derive_effective_params,
    free_energy,
    ground_constant,
    numeric_dispersion,
)
from luttinger2d.bosons import _closed_form, _numeric, calibrate_kappa, symplectic_diagonalize, thermal_modes

HALF = math.pi / 2


def eff_for(gamma, t=1.0, nu=0.5):
    Q = math.pi * nu
    return derive_effective_params(MicroParams(t=t, V=coupling_for_gamma(gamma, t, Q), nu=nu))


def test_reference_point():
    # gamma = 1/2, p = (1, 1), v_F = 2 sqrt 2; values from mpmath
    cf = _closed_form((1.0, 1.0), 0.5, 2 * math.sqrt(2))
    nm = _numeric((1.0, 1.0), 0.5, 2 * math.sqrt(2))
    assert (cf.omega_plus, cf.omega_minus) == pytest.approx((1.4142135623730950488, 1.0), rel=1e-15)
    assert (nm.omega_plus, nm.omega_minus) == pytest.approx((2.8284271247461900976, 2.0), rel=1e-15)


def test_kappa_is_two():
    assert KAPPA == 2.0
    assert calibrate_kappa() == pytest.approx(2.0, rel=1e-14)
    assert calibrate_kappa(v_F=3.7, seed=5) == pytest.approx(2.0, rel=1e-14)


def test_free_dispersion_is_max_min():
    p = Momentum(np.array([0.3, -1.0, 0.0]), np.array([0.1, 0.5, 2.0]))
    d = _closed_form(p, 0.0, 2.0)
    a, b = np.abs(p.k_plus), np.abs(p.k_minus)
    np.testing.assert_allclose(d.omega_plus, np.maximum(a, b) / 2 * 2.0, rtol=1e-15)
    np.testing.assert_allclose(d.omega_minus, np.minimum(a, b) / 2 * 2.0, rtol=1e-15, atol=1e-300)


# lattice momenta are multiples of 2 pi / L; 1e-8 covers L up to ~1e8 sites
momentum = st.one_of(st.just(0.0), st.floats(1e-8, 3.0), st.floats(-3.0, -1e-8))


@given(st.floats(0.0, 0.99), momentum, momentum)
def test_numeric_equals_kappa_closed(gamma, pp, pm):
    cf = _closed_form((pp, pm), gamma, 1.3)
    nm = _numeric((pp, pm), gamma, 1.3)
    assert nm.omega_plus == pytest.approx(KAPPA * cf.omega_plus, rel=1e-10, abs=1e-300)
    assert nm.omega_minus == pytest.approx(KAPPA * cf.omega_minus, rel=1e-10, abs=1e-300)


def test_symplectic_diagonalization():
    form = QuadraticBosonForm(Momentum(0.7, -0.2), 0.4, 1.1)
    assert form.is_positive_semidefinite()
    omega, S = symplectic_diagonalize(form)
    h = form.hamiltonian_matrix()
    np.testing.assert_allclose(S.T @ h @ S, np.diag(np.concatenate([omega, omega])), atol=1e-12)
    J = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])
    np.testing.assert_allclose(S.T @ J @ S, J, atol=1e-12)
    nm = _numeric((0.7, -0.2), 0.4, 1.1)
    np.testing.assert_allclose(omega, [nm.omega_plus, nm.omega_minus], rtol=1e-12)


def test_branches_ordered_and_nonnegative():
    rng = np.random.default_rng(3)
    p = Momentum(*rng.uniform(-2, 2, (2, 1000)))
    d = closed_form_dispersion(p, eff_for(0.6))
    assert np.all(d.omega_plus >= d.omega_minus) and np.all(d.omega_minus >= 0)


def test_minus_branch_on_axis():
    d = closed_form_dispersion(Momentum(np.array([0.0, 0.5]), np.array([0.8, 0.0])), eff_for(0.3))
    np.testing.assert_array_equal(d.omega_minus, 0.0)


def test_unstable_rejected():
    eff = derive_effective_params(MicroParams(t=1.0, V=4 * math.pi, nu=0.5))
    for fn in (closed_form_dispersion, numeric_dispersion):
        with pytest.raises(UnstableCouplingError):
            fn(Momentum(0.1, 0.2), eff)
    with pytest.raises(UnstableCouplingError):
        free_energy(eff, BosonGrid.from_cells(3), [0.1])


def test_stability_scan():
    Vs = np.linspace(0.8, 1.2, 100) * 4 * math.pi / math.sin(0.6 * math.pi)
    for V in Vs:
        eff = derive_effective_params(MicroParams(t=1.0, V=V, nu=0.6))
        flagged = not eff.stable
        assert flagged == (V >= 4 * math.pi / math.sin(eff.Q))


def test_ground_constant_free_theory_vanishes():
    eff = derive_effective_params(MicroParams(t=1.0, V=0.0, nu=0.5))
    assert ground_constant(eff, BosonGrid.from_cells(9)) == 0.0


def test_ground_constant_baseline():
    eff = derive_effective_params(MicroParams(t=1.0, V=2.0, nu=0.5))
    assert ground_constant(eff, BosonGrid.from_cells(9)) == pytest.approx(-0.9180365215843242, rel=1e-12)


def test_ground_constant_numeric_scales():
    eff = derive_effective_params(MicroParams(t=1.0, V=2.0, nu=0.5))
    g = BosonGrid.from_cells(7)
    assert ground_constant(eff, g, "numeric") == pytest.approx(KAPPA * ground_constant(eff, g), rel=1e-12)


@pytest.mark.parametrize("R", [9, 11])
def test_extensivity(R):
    eff = derive_effective_params(MicroParams(t=1.0, V=2.0, nu=0.5))
    small = ground_constant(eff, BosonGrid.from_cells(R, edge="trapezoid"))
    big = ground_constant(eff, BosonGrid.from_cells(2 * R, edge="trapezoid"))
    assert big / small == pytest.approx(4.0, rel=0.02)


def _brute_force_F(omega, T, nmax=40):
    """Free energy from an explicit sum over occupation patterns.

    Modes with equal frequency are grouped; the number of patterns with
    ``n`` quanta in a group of ``g`` modes is built by convolution.
    """
    Z = 1.0
    for w in np.unique(np.round(omega, 12)):
        g = int(np.count_nonzero(np.abs(omega - w) < 1e-9))
        counts = np.ones(1)
        for _ in range(g):
            counts = np.convolve(counts, np.ones(nmax + 1))
        n = np.arange(counts.size)
        Z *= math.fsum(counts * np.exp(-n * w / T))
    return -T * math.log(Z)


@pytest.mark.parametrize("cells", [2, 3])
@pytest.mark.parametrize("T", [0.25, 0.5, 1.0])
def test_free_energy_brute_force_V0(cells, T):
    eff = derive_effective_params(MicroParams(t=1.0, V=0.0, nu=0.5))
    grid = BosonGrid.from_cells(cells)
    assert grid.jmax == 1
    # independent frequencies: v_F max(|p+|, |p-|)/2 and v_F min(|p+|, |p-|)/2
    step = 2 * math.pi / grid.L
    omegas = []
    for jp in (-1, 0, 1):
        for jm in (-1, 0, 1):
            a, b = abs(jp) * step, abs(jm) * step
            omegas += [w for w in (eff.v_F * max(a, b) / 2, eff.v_F * min(a, b) / 2) if w > 0]
    F = free_energy(eff, grid, [T]).F[0]
    assert F == pytest.approx(_brute_force_F(np.array(omegas), T), rel=1e-9)


def test_free_energy_product_formula_interacting():
    eff = eff_for(0.4)
    grid = BosonGrid.from_cells(3)
    omega, weight = thermal_modes(eff, grid)
    assert np.all(weight == 1)
    T = 0.7
    F = free_energy(eff, grid, [T]).F[0]
    E_n = ground_constant(eff, grid)
    assert F == pytest.approx(E_n + _brute_force_F(omega, T, nmax=80), rel=1e-9)


@pytest.mark.parametrize("cells,edge", [(3, "closed"), (4, "trapezoid"), (9, "closed")])
def test_free_energy_monotone(cells, edge):
    eff = derive_effective_params(MicroParams(t=1.0, V=3.0, nu=0.55))
    T = np.linspace(0.0, 3.0, 61)
    res = free_energy(eff, BosonGrid.from_cells(cells, edge=edge), T)
    assert res.F[0] == res.E_n
    assert np.all(np.diff(res.F) < 0)
    assert res.metadata["zero_modes_excluded"] == 1 + (4 * (cells // 2) + 1)


def test_free_energy_metadata_and_validation():
    eff = eff_for(0.2)
    res = free_energy(eff, BosonGrid.from_cells(3), [0.0, 1.0])
    assert res.metadata["kappa"] == KAPPA
    assert res.metadata["dispersion"] == "closed-form"
    with pytest.raises(ValueError):
        free_energy(eff, BosonGrid.from_cells(3), [-1.0])
    with pytest.raises(ValueError):
        BosonGrid.from_cells(3, edge="open")


def test_trapezoid_weights_only_on_edge():
    odd = BosonGrid.from_cells(3, edge="trapezoid")
    assert np.all(odd.weights() == 1)
    even = BosonGrid.from_cells(4, edge="trapezoid")
    assert even.weights().sum() == pytest.approx((2 * even.jmax) ** 2)
