"""Six-region decomposition of the Brillouin zone.

Every fermion momentum ``k`` of a finite system is written uniquely as
``k = [Q_{r,s}/a + k']`` with ``(r, s)`` one of six region labels and ``k'``
a local momentum inside that region's window.  The antinodal regions
``(r, 0)`` are small squares in ``(k+, k-)`` around ``(pi, 0)/a`` and
``(0, pi)/a``; the four nodal regions ``(r, +-1)`` are hexagons around
``(rQ, rsQ)/a``.

All bookkeeping is done on integer coordinates: a fermion momentum is the
pair of odd integers ``n_pm = k_pm L / pi``.  In those units the
reciprocal lattice is generated by ``(4R, 4R)`` and ``(4R, -4R)`` with
``R = L / atilde``, and every window inequality is an integer comparison,
so the partition is exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .params import Momentum, MicroParams, SQRT2


class RegionIndex(NamedTuple):
    r: int
    s: int

    @property
    def nodal(self) -> bool:
        return self.s != 0


REGIONS = tuple(RegionIndex(r, s) for s in (0, 1, -1) for r in (1, -1))


class PartitionError(RuntimeError):
    """A momentum matched zero or several regions."""


def _check_Q(Q):
    if not np.pi / 4 < Q < 3 * np.pi / 4:
        raise ValueError(f"need pi/4 < Q < 3pi/4, got Q = {Q}")


def q_point(idx: RegionIndex, Q: float, a: float = 1.0) -> Momentum:
    """Representative point ``Q_{r,s}/a`` of a region, as a :class:`Momentum`."""
    _check_Q(Q)
    r, s = RegionIndex(*idx)
    if s == 0:
        k1, k2 = ((np.pi, 0.0) if r == 1 else (0.0, np.pi))
    else:
        k1, k2 = r * Q, r * s * Q
    return Momentum.from_k12(k1 / a, k2 / a)


def _q_point_units(idx: RegionIndex, R: int, nQ: int):
    r, s = idx
    if s == 0:
        return (2 * R, 2 * R) if r == 1 else (2 * R, -2 * R)
    return (2 * r * nQ, 0) if s == 1 else (0, 2 * r * nQ)


def _in_window(idx: RegionIndex, R: int, nQ: int, n_plus, n_minus):
    """Window predicate on local integer momenta (vectorised)."""
    r, s = idx
    if s == 0:
        return (-R <= n_plus) & (n_plus < R) & (-R <= n_minus) & (n_minus < R)
    transverse = n_minus if s == 1 else n_plus
    shift = 2 * r * (nQ - R)
    u = n_plus + n_minus + shift
    w = n_plus - n_minus + s * shift
    return ((-R <= transverse) & (transverse < R)
            & (-2 * R <= u) & (u < 2 * R)
            & (-2 * R <= w) & (w < 2 * R))


@dataclass(frozen=True)
class BZGrid:
    """Fermion momenta of a finite system, in odd-integer units of ``pi/L``."""

    cells: int
    a: float = 1.0

    @classmethod
    def from_params(cls, p: MicroParams) -> "BZGrid":
        return cls(p.cells, p.a)

    @property
    def L(self) -> float:
        return self.cells * 2 * SQRT2 * self.a

    @property
    def n_points(self) -> int:
        return 8 * self.cells**2

    def units(self):
        """Arrays ``(n_plus, n_minus)`` of all BZ points."""
        R = self.cells
        n = np.arange(-8 * R + 1, 8 * R, 2)
        n_plus, n_minus = np.meshgrid(n, n, indexing="ij")
        n_plus, n_minus = n_plus.ravel(), n_minus.ravel()
        u, w = n_plus + n_minus, n_plus - n_minus
        keep = (-4 * R <= u) & (u < 4 * R) & (-4 * R <= w) & (w < 4 * R)
        return n_plus[keep], n_minus[keep]

    def to_momentum(self, n_plus, n_minus):
        scale = np.pi / self.L
        return Momentum(np.asarray(n_plus) * scale, np.asarray(n_minus) * scale)

    def to_units(self, k: Momentum):
        k = Momentum(*k)
        scale = self.L / np.pi
        return (np.rint(np.asarray(k.k_plus) * scale).astype(np.int64),
                np.rint(np.asarray(k.k_minus) * scale).astype(np.int64))


def _reciprocal_shifts(R, reach=2):
    return [(4 * R * (i + j), 4 * R * (i - j))
            for i, j in itertools.product(range(-reach, reach + 1), repeat=2)]


@dataclass(frozen=True)
class RegionMap:
    """Materialised partition: region label and local momentum per BZ point."""

    grid: BZGrid
    Q_index: int
    n_plus: np.ndarray
    n_minus: np.ndarray
    r: np.ndarray
    s: np.ndarray
    local_plus: np.ndarray
    local_minus: np.ndarray

    @property
    def Q(self) -> float:
        return np.pi * self.Q_index / (2 * self.grid.cells)

    def sizes(self) -> dict:
        return {idx: int(np.count_nonzero((self.r == idx.r) & (self.s == idx.s)))
                for idx in REGIONS}

    def members(self, idx: RegionIndex):
        """Local momenta (integer units) of the points in region ``idx``."""
        m = (self.r == idx.r) & (self.s == idx.s)
        return self.local_plus[m], self.local_minus[m]

    def rows(self):
        """Physical rows ``(k1, k2, r, s, k'+, k'-)`` for every BZ point."""
        k = self.grid.to_momentum(self.n_plus, self.n_minus)
        kl = self.grid.to_momentum(self.local_plus, self.local_minus)
        return np.column_stack([k.k1, k.k2, self.r, self.s, kl.k_plus, kl.k_minus])


def region_map(p: MicroParams) -> RegionMap:
    """Classify every BZ point of a finite system (vectorised)."""
    _check_Q(p.Q)
    grid = BZGrid.from_params(p)
    R, nQ = grid.cells, p.Q_index
    n_plus, n_minus = grid.units()
    npts = n_plus.size
    hits = np.zeros(npts, dtype=np.int64)
    r_out = np.zeros(npts, dtype=np.int64)
    s_out = np.zeros(npts, dtype=np.int64)
    lp = np.zeros(npts, dtype=np.int64)
    lm = np.zeros(npts, dtype=np.int64)
    for idx in REGIONS:
        qp, qm = _q_point_units(idx, R, nQ)
        for gp, gm in _reciprocal_shifts(R):
            cp, cm = n_plus - qp + gp, n_minus - qm + gm
            m = _in_window(idx, R, nQ, cp, cm)
            hits += m
            r_out[m], s_out[m] = idx.r, idx.s
            lp[m], lm[m] = cp[m], cm[m]
    if np.any(hits != 1):
        bad = np.flatnonzero(hits != 1)[0]
        raise PartitionError(
            f"BZ point {(n_plus[bad], n_minus[bad])} matched {hits[bad]} regions")
    return RegionMap(grid, nQ, n_plus, n_minus, r_out, s_out, lp, lm)


def classify(k: Momentum, p: MicroParams):
    """Region label and local momentum of a single BZ point.

    Returns ``(RegionIndex, Momentum)`` with ``[Q_{r,s}/a + k'] = k``.
    """
    _check_Q(p.Q)
    grid = BZGrid.from_params(p)
    R, nQ = grid.cells, p.Q_index
    n_plus, n_minus = (int(x) for x in grid.to_units(k))
    if n_plus % 2 == 0 or n_minus % 2 == 0:
        raise ValueError(f"{k} is not on the fermion momentum grid")
    found = []
    for idx in REGIONS:
        qp, qm = _q_point_units(idx, R, nQ)
        for gp, gm in _reciprocal_shifts(R):
            cp, cm = n_plus - qp + gp, n_minus - qm + gm
            if _in_window(idx, R, nQ, cp, cm):
                found.append((idx, cp, cm))
    if len(found) != 1:
        raise PartitionError(f"momentum {k} matched {len(found)} regions")
    idx, cp, cm = found[0]
    return idx, grid.to_momentum(cp, cm)


def window_sizes(p: MicroParams) -> dict:
    """Region cardinalities counted from the window predicates alone.

    Independent of :func:`region_map`: each region's local momenta are
    enumerated directly, without touching the Brillouin zone.
    """
    _check_Q(p.Q)
    R, nQ = p.cells, p.Q_index
    out = {}
    for idx in REGIONS:
        count = 0
        for n_plus in range(-8 * R + 1, 8 * R, 2):
            n = np.arange(-8 * R + 1, 8 * R, 2)
            count += int(np.count_nonzero(_in_window(idx, R, nQ, n_plus, n)))
        out[idx] = count
    return out


def filling_fractions(Q: float) -> dict:
    """Contribution of each region to the filling of the reference state."""
    _check_Q(Q)
    nodal = (Q / np.pi - 0.125) / 4
    return {idx: (1 / 16 if idx.s == 0 else nodal) for idx in REGIONS}
