"""Model parameters, band relations and momentum conventions.

Momenta are written in rotated coordinates ``k_pm = (k1 +- k2)/sqrt(2)``.
A finite system of linear size ``L`` has fermion momenta on the grid
``k_pm in (2 pi/L)(Z + 1/2)`` and momentum differences on ``(2 pi/L) Z``.
The grid closes under reciprocal-lattice shifts only when
``L / atilde`` is an odd integer, where ``atilde = 2 sqrt(2) a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

SQRT2 = math.sqrt(2.0)


class UnstableCouplingError(ValueError):
    """Raised when the nodal boson Hamiltonian is not bounded below (gamma >= 1)."""


class Momentum(NamedTuple):
    """A 2D momentum in rotated coordinates (1/length)."""

    k_plus: float
    k_minus: float

    @classmethod
    def from_k12(cls, k1, k2):
        return cls((k1 + k2) / SQRT2, (k1 - k2) / SQRT2)

    @property
    def k1(self):
        return (self.k_plus + self.k_minus) / SQRT2

    @property
    def k2(self):
        return (self.k_plus - self.k_minus) / SQRT2

    def __neg__(self):
        return Momentum(-self.k_plus, -self.k_minus)


def reduce_to_bz(k1, k2, a=1.0):
    """Fold ``(k1, k2)`` into ``[-pi/a, pi/a)^2`` (modulo ``(2 pi/a) Z^2``)."""
    period = 2 * np.pi / a
    k1 = np.mod(np.asarray(k1, dtype=float) + np.pi / a, period) - np.pi / a
    k2 = np.mod(np.asarray(k2, dtype=float) + np.pi / a, period) - np.pi / a
    return k1, k2


@dataclass(frozen=True)
class CutoffWindow:
    """The interaction cutoff ``chi(p)``: 1 iff ``|p_pm| <= pi/atilde``."""

    atilde: float

    @property
    def bound(self) -> float:
        return np.pi / self.atilde

    def __call__(self, p_plus, p_minus):
        b = self.bound
        inside = (np.abs(p_plus) <= b) & (np.abs(p_minus) <= b)
        return inside.astype(float) if isinstance(inside, np.ndarray) else float(inside)


@dataclass(frozen=True)
class MicroParams:
    """Inputs of the 2D t-V lattice model.

    ``L`` is optional.  When given, ``L/atilde`` must be an odd integer and
    ``nu`` is rounded to the nearest commensurate filling, a multiple of
    ``sqrt(2) a / L``; the requested value is kept in ``nu_requested``.
    Without ``L`` (infinite system) ``nu`` is used as given.
    """

    t: float
    V: float
    a: float = 1.0
    L: float | None = None
    nu: float = 0.5
    nu_requested: float = field(init=False)

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError(f"hopping t must be positive, got {self.t}")
        if not self.V >= 0:
            raise ValueError(f"coupling V must be non-negative, got {self.V}")
        if not self.a > 0:
            raise ValueError(f"lattice constant a must be positive, got {self.a}")
        if not 0.0 <= self.nu <= 1.0:
            raise ValueError(f"filling must lie in [0, 1], got {self.nu}")
        object.__setattr__(self, "nu_requested", float(self.nu))
        if self.L is not None:
            cells = self.L / self.atilde
            n = round(cells)
            if abs(cells - n) > 1e-9 * max(1.0, cells) or n % 2 == 0 or n < 1:
                raise ValueError(
                    "L/a must lie in 4*sqrt(2)*(N + 1/2), i.e. L/atilde odd; "
                    f"got L/atilde = {cells}"
                )
            object.__setattr__(self, "L", n * self.atilde)
            step = 1.0 / (2 * n)
            object.__setattr__(self, "nu", round(self.nu / step) * step)

    @classmethod
    def on_grid(cls, t, V, cells, nu, a=1.0):
        """Build parameters for a system with ``L/atilde = cells`` (odd)."""
        return cls(t=t, V=V, a=a, L=cells * 2 * SQRT2 * a, nu=nu)

    @property
    def atilde(self) -> float:
        return 2 * SQRT2 * self.a

    @property
    def cells(self) -> int:
        """``L/atilde``; requires a finite system."""
        if self.L is None:
            raise ValueError("system size L is not set")
        return int(round(self.L / self.atilde))

    @property
    def n_sites(self) -> int:
        return 8 * self.cells**2

    @property
    def Q(self) -> float:
        return np.pi * self.nu

    @property
    def Q_index(self) -> int:
        """``Q`` in units of ``sqrt(2) pi a / L``."""
        return int(round(self.nu * 2 * self.cells))

    @property
    def nu_rounding(self) -> float:
        return self.nu - self.nu_requested


@dataclass(frozen=True)
class EffectiveParams:
    """Parameters of the effective nodal/antinodal model."""

    micro: MicroParams
    Q: float
    v_F: float
    c_F: float
    g1: float
    g2: float
    g3: float
    g4: float
    mu_a: float
    mu: float
    gamma: float

    @property
    def stable(self) -> bool:
        return stability_check(self)

    @property
    def t(self):
        return self.micro.t

    @property
    def V(self):
        return self.micro.V

    @property
    def a(self):
        return self.micro.a

    @property
    def atilde(self):
        return self.micro.atilde


def band_energy(k: Momentum, p: MicroParams):
    """Tight-binding band ``-2t [cos(a k1) + cos(a k2)]``."""
    k = Momentum(*k)
    return -2 * p.t * (np.cos(p.a * k.k1) + np.cos(p.a * k.k2))


def linearized_band(r: int, s: int, k: Momentum, eff: EffectiveParams):
    """Band relation expanded around the point labelled ``(r, s)``.

    ``s = 0`` gives the antinodal saddle ``-r c_F k+ k-``; ``s = +-1`` the
    linear nodal branch ``-4t cos Q + r v_F k_s``.
    """
    if r not in (1, -1):
        raise ValueError(f"r must be +1 or -1, got {r}")
    k = Momentum(*k)
    if s == 0:
        return -r * eff.c_F * k.k_plus * k.k_minus
    if s == 1:
        return -4 * eff.t * _cosQ(eff.micro.nu) + r * eff.v_F * k.k_plus
    if s == -1:
        return -4 * eff.t * _cosQ(eff.micro.nu) + r * eff.v_F * k.k_minus
    raise ValueError(f"s must be one of 0, +1, -1, got {s}")


def _cosQ(nu):
    # cos(pi nu) written so that nu = 1/2 gives exactly zero
    return math.sin(math.pi * (0.5 - nu))


def gamma_of(V, t, Q):
    """Dimensionless nodal interaction ``V sin(Q) / (4 pi t)``."""
    return V * math.sin(Q) / (4 * math.pi * t)


def coupling_for_gamma(gamma, t, Q):
    """Inverse of :func:`gamma_of`: the ``V`` that produces ``gamma``."""
    return gamma * 4 * math.pi * t / math.sin(Q)


def derive_effective_params(p: MicroParams) -> EffectiveParams:
    """Closed-form effective-model parameters for the given lattice model.

    The filling must satisfy ``1/4 < nu < 3/4``.  ``mu`` is the lattice
    chemical potential that puts the nodal Fermi points at ``Q`` (the
    nodal chemical potential vanishes).  Instability (``gamma >= 1``) is
    reported through :attr:`EffectiveParams.stable`, not raised.
    """
    nu = p.nu
    if not 0.25 < nu < 0.75:
        raise ValueError(f"effective model needs 1/4 < nu < 3/4, got {nu}")
    t, V, a = p.t, p.V, p.a
    Q = math.pi * nu
    sinQ = math.sin(Q)
    cosQ = _cosQ(nu)
    g1 = 2 * V * sinQ**2 * a**2
    mu_a = -(4 * t + V / 4) * cosQ + V * cosQ**2 * (1 - 2 * nu)
    mu = -4 * t * cosQ + (2 * Q * sinQ**2 / math.pi + cosQ**2 + cosQ / 4) * V
    return EffectiveParams(
        micro=p,
        Q=Q,
        v_F=2 * SQRT2 * t * a * sinQ,
        c_F=2 * t * a**2,
        g1=g1,
        g2=g1 / 2,
        g3=2 * V * a**2,
        g4=2 * V * a**2,
        mu_a=mu_a,
        mu=mu,
        gamma=gamma_of(V, t, Q),
    )


def stability_check(eff: EffectiveParams) -> bool:
    """True iff ``gamma < 1``, i.e. ``V < 4 pi t / sin(Q)``."""
    return eff.gamma < 1.0
