"""Nodal bosons: quadratic form, dispersions, mode sums and screened couplings.

The bosonized nodal Hamiltonian is, per difference momentum ``p``,

    H(p) = (v_F / 2) [ (1 - gamma) |Pi|^2 + Phi^T K(p) Phi ]

with ``Phi = (Phi_+, Phi_-)`` and

    K(p) = [[(1 + gamma) p+^2,  gamma p+ p-],
            [gamma p+ p-,       (1 + gamma) p-^2]].

Two independent routes give its normal-mode frequencies: the closed form
(:func:`closed_form_dispersion`) and an explicit symplectic
diagonalization (:func:`numeric_dispersion`).  They differ by one global
factor ``KAPPA`` (numeric = ``KAPPA`` x closed form), which is measured
by :func:`calibrate_kappa` rather than assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import EffectiveParams, Momentum, UnstableCouplingError

CLOSED_FORM = "closed-form"
NUMERIC = "numeric"


def _require_stable(gamma):
    if not gamma < 1.0:
        raise UnstableCouplingError(
            f"gamma = {gamma} >= 1: nodal boson Hamiltonian is not bounded below")


@dataclass(frozen=True)
class QuadraticBosonForm:
    """Quadratic boson Hamiltonian at one momentum.

    ``stiffness`` is ``v_F K(p)`` and ``kinetic`` is ``v_F (1 - gamma)``;
    see :meth:`hamiltonian_matrix` for the phase-space layout.
    """

    p: Momentum
    gamma: float
    v_F: float

    @property
    def stiffness(self) -> np.ndarray:
        pp, pm = self.p
        g = self.gamma
        return self.v_F * np.array([[(1 + g) * pp * pp, g * pp * pm],
                                    [g * pp * pm, (1 + g) * pm * pm]])

    @property
    def kinetic(self) -> float:
        return self.v_F * (1 - self.gamma)

    def hamiltonian_matrix(self) -> np.ndarray:
        """``4x4`` matrix ``h`` with ``H = x^T h x / 2``, ``x = (Phi+, Phi-, Pi+, Pi-)``."""
        h = np.zeros((4, 4))
        h[:2, :2] = self.stiffness
        h[2:, 2:] = self.kinetic * np.eye(2)
        return h

    def is_positive_semidefinite(self, tol=1e-12) -> bool:
        w = np.linalg.eigvalsh(self.hamiltonian_matrix())
        scale = max(1.0, float(np.max(np.abs(w))))
        return bool(w.min() >= -tol * scale)


def symplectic_diagonalize(form: QuadraticBosonForm):
    """Williamson normal form of a positive definite :class:`QuadraticBosonForm`.

    Returns ``(omega, S)`` with ``omega`` descending and ``S`` symplectic
    (``S^T J S = J``) such that ``S^T h S = diag(omega, omega)``.
    """
    _require_stable(form.gamma)
    b = form.kinetic
    w2, O = np.linalg.eigh(b * form.stiffness)
    order = np.argsort(w2)[::-1]
    w2, O = w2[order], O[:, order]
    if w2[-1] <= 0:
        raise ValueError("zero mode present; Williamson form is singular")
    omega = np.sqrt(w2)
    sb = math.sqrt(b)
    S = np.zeros((4, 4))
    S[:2, :2] = sb * O / np.sqrt(omega)
    S[2:, 2:] = O * np.sqrt(omega) / sb
    return omega, S


@dataclass(frozen=True)
class DispersionResult:
    """Normal-mode frequencies at momentum ``p`` (arrays broadcast with ``p``)."""

    p: Momentum
    omega_plus: np.ndarray
    omega_minus: np.ndarray
    source: str


def closed_form_dispersion(p: Momentum, eff: EffectiveParams) -> DispersionResult:
    """Closed-form dispersions ``omega_+-(p)``.

    ``(v_F / 2 sqrt 2) sqrt(1 - gamma^2) sqrt(|p|^2 +- sqrt(|p|^4 -
    (1 - [gamma/(1+gamma)]^2)(2 p+ p-)^2))``.  The minus branch is
    evaluated in the algebraically equal form ``y / (|p|^2 + sqrt(...))``
    and the inner radicand as ``(p+^2 - p-^2)^2 + [gamma/(1+gamma)]^2
    (2 p+ p-)^2``, both free of cancellation.  Vectorised over array-valued ``p``.
    """
    return _closed_form(p, eff.gamma, eff.v_F)


def _unit_scale(p):
    # both frequencies are homogeneous of degree one in p; rescaling keeps
    # fourth powers away from underflow and overflow
    pp, pm = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in Momentum(*p)))
    scale = np.maximum(np.abs(pp), np.abs(pm))
    safe = np.where(scale > 0, scale, 1.0)
    return pp, pm, pp / safe, pm / safe, scale


def _closed_form(p, gamma, v_F):
    _require_stable(gamma)
    p_plus, p_minus, pp, pm, scale = _unit_scale(p)
    x = pp * pp + pm * pm
    g = gamma / (1.0 + gamma)
    cross = (2.0 * pp * pm) ** 2
    y = (1.0 - g * g) * cross
    # x^2 - y written as a sum of squares, free of cancellation
    inner = np.sqrt((pp * pp - pm * pm) ** 2 + g * g * cross)
    big = x + inner
    with np.errstate(invalid="ignore", divide="ignore"):
        small = np.where(big > 0, y / np.where(big > 0, big, 1.0), 0.0)
    pref = v_F / (2 * math.sqrt(2.0)) * math.sqrt(1.0 - gamma * gamma)
    return DispersionResult(Momentum(p_plus, p_minus), scale * pref * np.sqrt(big),
                            scale * pref * np.sqrt(small), CLOSED_FORM)


def numeric_dispersion(p: Momentum, eff: EffectiveParams) -> DispersionResult:
    """Frequencies from the symplectic diagonalization of the quadratic form.

    For ``H = (1/2)(b |Pi|^2 + Phi^T M Phi)`` the frequencies squared are
    the eigenvalues of ``b M``.  The smaller one is recovered from the
    determinant, which keeps full relative precision near the axes.
    Vectorised over array-valued ``p``.
    """
    return _numeric(p, eff.gamma, eff.v_F)


def _numeric(p, gamma, v_F):
    _require_stable(gamma)
    p_plus, p_minus, pp, pm, scale = _unit_scale(p)
    shape = pp.shape
    pp, pm, scale = pp.ravel(), pm.ravel(), scale.ravel()
    g = gamma
    b = v_F * (1 - g)
    mats = np.empty((pp.size, 2, 2))
    mats[:, 0, 0] = (1 + g) * pp * pp
    mats[:, 1, 1] = (1 + g) * pm * pm
    mats[:, 0, 1] = mats[:, 1, 0] = g * pp * pm
    mats *= b * v_F
    w2 = np.linalg.eigvalsh(mats)
    if np.any(w2 < -1e-12 * np.maximum(1.0, np.abs(w2).max(axis=1, keepdims=True))):
        raise UnstableCouplingError("negative normal-mode frequency squared")
    large = np.maximum(w2[:, 1], 0.0)
    det = mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        small = np.where(large > 0, det / np.where(large > 0, large, 1.0), 0.0)
    small = np.maximum(small, 0.0)
    return DispersionResult(Momentum(p_plus, p_minus), (scale * np.sqrt(large)).reshape(shape),
                            (scale * np.sqrt(small)).reshape(shape), NUMERIC)


def calibrate_kappa(v_F=1.0, n=64, seed=0) -> float:
    """Measure ``numeric / closed form`` at ``gamma = 0`` by least squares.

    The fit uses both branches at random momenta; the result is the
    single global factor applied when comparing the two routes.
    """
    rng = np.random.default_rng(seed)
    p = Momentum(rng.uniform(-1, 1, n), rng.uniform(-1, 1, n))
    a = _closed_form(p, 0.0, v_F)
    b = _numeric(p, 0.0, v_F)
    x = np.concatenate([a.omega_plus, a.omega_minus])
    y = np.concatenate([b.omega_plus, b.omega_minus])
    return float(np.dot(x, y) / np.dot(x, x))


#: Measured ratio numeric / closed form; see :func:`calibrate_kappa`.
KAPPA = 2.0


@dataclass(frozen=True)
class BosonGrid:
    """Difference momenta ``p_pm in (2 pi/L) Z`` inside the cutoff window.

    The window ``|p_pm| <= pi/atilde`` is closed, as for the cutoff
    function.  Points can sit exactly on its edge only when ``L/atilde``
    is even; ``edge="trapezoid"`` gives those points weight 1/2 per
    coordinate instead of 1 (``edge="closed"``), which removes the
    leading boundary error of the mode sum.
    """

    L: float
    atilde: float
    edge: str = "closed"

    def __post_init__(self):
        if self.edge not in ("closed", "trapezoid"):
            raise ValueError(f"edge must be 'closed' or 'trapezoid', got {self.edge!r}")
        if not (self.L > 0 and self.atilde > 0):
            raise ValueError("L and atilde must be positive")

    @classmethod
    def from_cells(cls, cells, a=1.0, edge="closed"):
        """Grid for ``L = cells * atilde`` (any positive integer ``cells``)."""
        atilde = 2 * math.sqrt(2.0) * a
        return cls(cells * atilde, atilde, edge)

    @property
    def jmax(self) -> int:
        # |2 pi j / L| <= pi / atilde  <=>  |j| <= L / (2 atilde)
        return int(math.floor(self.L / (2 * self.atilde) + 1e-9))

    def indices(self):
        j = np.arange(-self.jmax, self.jmax + 1)
        jp, jm = np.meshgrid(j, j, indexing="ij")
        return jp.ravel(), jm.ravel()

    def momenta(self) -> Momentum:
        jp, jm = self.indices()
        step = 2 * np.pi / self.L
        return Momentum(step * jp, step * jm)

    def weights(self) -> np.ndarray:
        jp, jm = self.indices()
        w = np.ones(jp.size)
        if self.edge == "trapezoid":
            on_edge = abs(self.L / (2 * self.atilde) - self.jmax) < 1e-9
            if on_edge:
                w *= np.where(np.abs(jp) == self.jmax, 0.5, 1.0)
                w *= np.where(np.abs(jm) == self.jmax, 0.5, 1.0)
        return w


def _branch_table(gamma, v_F, grid: BosonGrid, dispersion):
    p = grid.momenta()
    if dispersion == CLOSED_FORM:
        return _closed_form(p, gamma, v_F)
    if dispersion == NUMERIC:
        return _numeric(p, gamma, v_F)
    raise ValueError(f"unknown dispersion convention {dispersion!r}")


def _zero_mode_mask(grid: BosonGrid):
    # omega_- vanishes identically on the axes p+ p- = 0, omega_+ only at p = 0
    jp, jm = grid.indices()
    return (jp == 0) & (jm == 0), (jp == 0) | (jm == 0)


def ground_constant(eff: EffectiveParams, grid: BosonGrid, dispersion=CLOSED_FORM) -> float:
    """Ground energy ``E_n = (1/2) sum_p sum_s [omega_s(p) - omega_s^0(p)]``.

    The reference ``omega^0`` is the same dispersion at ``gamma = 0``, so
    that ``E_n`` vanishes for the free theory.
    """
    _require_stable(eff.gamma)
    d = _branch_table(eff.gamma, eff.v_F, grid, dispersion)
    d0 = _branch_table(0.0, eff.v_F, grid, dispersion)
    diff = (d.omega_plus - d0.omega_plus) + (d.omega_minus - d0.omega_minus)
    return float(0.5 * math.fsum(grid.weights() * diff))


@dataclass(frozen=True)
class ThermoResult:
    """Free energy table on a fixed boson grid."""

    E_n: float
    T: np.ndarray
    F: np.ndarray
    metadata: dict = field(default_factory=dict)


def thermal_modes(eff: EffectiveParams, grid: BosonGrid, dispersion=CLOSED_FORM):
    """Frequencies and weights of all non-zero modes entering the thermal sum."""
    d = _branch_table(eff.gamma, eff.v_F, grid, dispersion)
    zp, zm = _zero_mode_mask(grid)
    w = grid.weights()
    omega = np.concatenate([d.omega_plus[~zp], d.omega_minus[~zm]])
    weight = np.concatenate([w[~zp], w[~zm]])
    return omega, weight


def free_energy(eff: EffectiveParams, grid: BosonGrid, T, dispersion=CLOSED_FORM) -> ThermoResult:
    """``F(T) = E_n + T sum_{p,s} log(1 - exp(-omega_s(p)/T))``.

    Exact zero modes (``omega_-`` on the axes ``p+ p- = 0`` and both
    branches at ``p = 0``) are excluded from the thermal sum.
    """
    _require_stable(eff.gamma)
    T = np.atleast_1d(np.asarray(T, dtype=float))
    if np.any(T < 0):
        raise ValueError("temperatures must be non-negative")
    omega, weight = thermal_modes(eff, grid, dispersion)
    E_n = ground_constant(eff, grid, dispersion)
    F = np.array([E_n if t == 0 else
                  E_n + t * math.fsum(weight * np.log1p(-np.exp(-omega / t)))
                  for t in T])
    zp, zm = _zero_mode_mask(grid)
    meta = {
        "dispersion": dispersion,
        "kappa": KAPPA,
        "reference": "gamma=0 subtraction",
        "grid_L": grid.L,
        "atilde": grid.atilde,
        "edge": grid.edge,
        "n_momenta": int((2 * grid.jmax + 1) ** 2),
        "n_modes": int(omega.size),
        "zero_modes_excluded": int(np.count_nonzero(zp) + np.count_nonzero(zm)),
    }
    return ThermoResult(E_n, T, F, meta)


def effective_antinodal_couplings(eff: EffectiveParams):
    """Couplings ``(g3, g4)`` of the antinodal model after integrating out the bosons."""
    _require_stable(eff.gamma)
    V, t, a, Q = eff.V, eff.t, eff.a, eff.Q
    sinQ = math.sin(Q)
    g3 = 2 * V * a**2 * (1 - V / (2 * sinQ * (2 * math.pi * t + V * sinQ)))
    return g3, 0.0
