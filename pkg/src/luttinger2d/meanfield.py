"""Mean-field CDW gap of the effective antinodal model.

The g3 interaction is decoupled in the ``r <-> -r`` channel with order
parameter ``Delta``.  The two antinodal bands ``-+ c_F k+ k-`` then hybridize
into ``-mu_a +- E(k)`` with ``E = sqrt(eps^2 + Delta^2)``, ``eps = c_F k+ k-``,
and the self-consistency condition reads

    Delta = lam * (g3 / atilde^2) * < Delta / (2 E) * [f(E_-) - f(E_+)] >

where ``< . >`` is the average over the antinodal window, ``f`` the Fermi
function and ``lam`` a convention constant (default 1).  The factor
``1/atilde^2`` turns the momentum average into ``(1/L^2) sum_k``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize

from .bosons import effective_antinodal_couplings
from .params import EffectiveParams, MicroParams, Momentum, derive_effective_params


class ConvergenceError(RuntimeError):
    """Fixed-point iteration did not converge; ``trace`` holds recent iterates."""

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


@dataclass(frozen=True)
class AntinodalGrid:
    """Midpoint grid of ``n x n`` momenta over ``-pi/atilde <= k_pm < pi/atilde``."""

    n: int
    atilde: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("grid needs at least one point per direction")

    @classmethod
    def for_params(cls, eff: EffectiveParams, n) -> "AntinodalGrid":
        return cls(n, eff.atilde)

    def axis(self) -> np.ndarray:
        b = math.pi / self.atilde
        return b * (-1 + (2 * np.arange(self.n) + 1) / self.n)

    def momenta(self) -> Momentum:
        x = self.axis()
        kp, km = np.meshgrid(x, x, indexing="ij")
        return Momentum(kp, km)


def mf_bands(k: Momentum, Delta, eff: EffectiveParams, mu_a=None):
    """Quasiparticle energies ``(E_+, E_-) = (-mu_a + E, -mu_a - E)``."""
    mu_a = eff.mu_a if mu_a is None else mu_a
    k = Momentum(*k)
    eps = eff.c_F * np.asarray(k.k_plus) * np.asarray(k.k_minus)
    E = np.hypot(eps, Delta)
    return -mu_a + E, -mu_a - E


def _fermi(x, T):
    if T == 0:
        return np.where(x < 0, 1.0, np.where(x > 0, 0.0, 0.5))
    return 0.5 * (1.0 - np.tanh(x / (2.0 * T)))


@dataclass(frozen=True)
class _Kernel:
    eps: np.ndarray
    mu_a: float
    T: float
    prefactor: float

    def occupation(self, Delta):
        E = np.hypot(self.eps, Delta)
        return E, _fermi(-self.mu_a - E, self.T) - _fermi(-self.mu_a + E, self.T)

    def rhs(self, Delta):
        """Right-hand side of the gap equation."""
        if Delta == 0:
            return 0.0
        E, occ = self.occupation(Delta)
        return self.prefactor * Delta * float(np.mean(occ / (2 * E)))

    def slope_at_zero(self):
        E, occ = self.occupation(0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.where(occ > 0, occ / (2 * E), 0.0)
        return self.prefactor * float(np.mean(vals))

    def filling(self, Delta):
        E = np.hypot(self.eps, Delta)
        n = _fermi(-self.mu_a + E, self.T) + _fermi(-self.mu_a - E, self.T) - 1.0
        # per lattice site: each antinodal region holds 1/8 of the sites
        return float(np.mean(n)) / 8.0


def _kernel(eff, grid, T, mu_a, g3, coupling):
    if T < 0:
        raise ValueError("temperature must be non-negative")
    k = grid.momenta()
    eps = eff.c_F * k.k_plus * k.k_minus
    g3 = effective_antinodal_couplings(eff)[0] if g3 is None else g3
    mu_a = eff.mu_a if mu_a is None else mu_a
    return _Kernel(eps, mu_a, T, coupling * g3 / grid.atilde**2), g3


@dataclass(frozen=True)
class GapSolution:
    """Self-consistent CDW gap and diagnostics."""

    Delta: float
    iterations: int
    residual: float
    filling_antinodal: float
    g3: float
    mu_a: float
    T: float
    params: dict = field(default_factory=dict)


def _snapshot(eff):
    m = eff.micro
    return {"t": m.t, "V": m.V, "a": m.a, "nu": m.nu, "Q": eff.Q}


def solve_gap(eff: EffectiveParams, grid: AntinodalGrid, T=0.0, Delta0=None, *,
              damping=0.5, tol=1e-10, max_iter=200_000, coupling=1.0, g3=None,
              mu_a=None) -> GapSolution:
    """Solve the gap equation by damped fixed-point iteration.

    Parameters
    ----------
    Delta0 : float, optional
        Starting value; defaults to ``t``.
    damping : float
        Weight of the new iterate, ``Delta <- (1-d) Delta + d F(Delta)``.
    tol : float
        Stop when ``|F(Delta_n) - Delta_n| <= tol * max(t, Delta_n)``, which
        also bounds the step ``|Delta_{n+1} - Delta_n|``.
    coupling : float
        Convention constant between ``g3`` and the kernel prefactor.
    g3, mu_a : float, optional
        Override the boson-screened ``g3`` and the antinodal chemical potential.
    """
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    kern, g3 = _kernel(eff, grid, T, mu_a, g3, coupling)
    t = eff.t
    Delta = t if Delta0 is None else float(Delta0)
    if g3 == 0 or Delta == 0:
        return GapSolution(0.0, 0, 0.0, kern.filling(0.0), g3, kern.mu_a, T, _snapshot(eff))
    trace, flips = [], 0
    prev_step = None
    for it in range(1, max_iter + 1):
        rhs = kern.rhs(Delta)
        if abs(rhs - Delta) <= tol * max(t, Delta):
            break
        new = (1 - damping) * Delta + damping * rhs
        step = new - Delta
        trace.append(new)
        if prev_step is not None and step * prev_step < 0 and abs(step) >= abs(prev_step):
            flips += 1
            if flips > 20:
                raise ConvergenceError("oscillating iteration; increase damping",
                                       trace[-10:])
        prev_step = step
        Delta = new
    else:
        raise ConvergenceError(f"no convergence after {max_iter} iterations", trace[-10:])
    # geometric decay towards the trivial solution stalls at a tiny value
    if Delta < 1e-8 * t and kern.slope_at_zero() <= 1.0:
        Delta = 0.0
    residual = abs(kern.rhs(Delta) - Delta)
    return GapSolution(float(Delta), it, residual, kern.filling(Delta), g3, kern.mu_a, T,
                       _snapshot(eff))


def bisect_gap(eff: EffectiveParams, grid: AntinodalGrid, T=0.0, *, coupling=1.0, g3=None,
               mu_a=None, xtol=1e-15) -> float:
    """Non-trivial root of ``F(Delta) - Delta`` by bisection (0 if none).

    The bracket is ``[1e-12 t, lam g3 / (2 atilde^2)]``; ``F`` never exceeds
    the upper end, so a sign change exists whenever ``F(Delta) > Delta``
    near zero.
    """
    kern, g3 = _kernel(eff, grid, T, mu_a, g3, coupling)
    if g3 <= 0:
        return 0.0
    hi = kern.prefactor / 2 * (1 + 1e-9) + 1e-300   # F(Delta) <= prefactor / 2
    lo = 1e-12 * eff.t
    G = lambda d: kern.rhs(d) - d  # noqa: E731
    if G(lo) <= 0:
        return 0.0
    return optimize.bisect(G, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)


def gap_residual(solution: GapSolution, eff: EffectiveParams, grid: AntinodalGrid,
                 coupling=1.0) -> float:
    kern, _ = _kernel(eff, grid, solution.T, solution.mu_a, solution.g3, coupling)
    return abs(kern.rhs(solution.Delta) - solution.Delta)


@dataclass(frozen=True)
class ScanRow:
    Q: float
    nu: float
    V: float
    T: float
    Delta: float
    filling: float
    dfilling_dmu: float
    gapped: bool
    iterations: int
    residual: float


def gap_phase_scan(t, V, nus, n_grid=64, T=0.0, a=1.0, threshold=None, *,
                   filling_tol=1e-12, dmu=1e-4, **solver):
    """Gap and antinodal filling along a family of fillings at fixed ``t, V``.

    A row is flagged ``gapped`` when ``Delta > threshold`` (default
    ``1e-6 t``) and the antinodal filling vanishes.  ``dfilling_dmu`` is
    the central difference of the self-consistent filling in ``mu_a``.
    """
    threshold = 1e-6 * t if threshold is None else threshold
    rows = []
    for nu in nus:
        eff = derive_effective_params(MicroParams(t=t, V=V, a=a, nu=float(nu)))
        grid = AntinodalGrid.for_params(eff, n_grid)
        sol = solve_gap(eff, grid, T, **solver)
        up = solve_gap(eff, grid, T, mu_a=eff.mu_a + dmu, **solver)
        down = solve_gap(eff, grid, T, mu_a=eff.mu_a - dmu, **solver)
        deriv = (up.filling_antinodal - down.filling_antinodal) / (2 * dmu)
        gapped = sol.Delta > threshold and abs(sol.filling_antinodal) <= filling_tol
        rows.append(ScanRow(eff.Q, eff.micro.nu, V, T, sol.Delta, sol.filling_antinodal,
                            deriv, bool(gapped), sol.iterations, sol.residual))
    return rows


def gapped_interval(rows):
    """``(Q_min, Q_max)`` of the flagged rows, or ``None``."""
    Qs = [r.Q for r in rows if r.gapped]
    return (min(Qs), max(Qs)) if Qs else None


def rows_as_dicts(rows):
    return [asdict(r) for r in rows]
