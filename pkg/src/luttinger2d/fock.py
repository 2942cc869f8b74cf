"""Bit-encoded fermionic Fock spaces and sparse bilinear operators.

A basis state is an ``int64`` whose bit ``m`` is the occupation of mode
``m``.  Fermion signs follow the Jordan-Wigner ordering of the bits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


def popcount(x):
    return np.bitwise_count(np.asarray(x, dtype=np.int64)).astype(np.int64)


@dataclass(frozen=True)
class FockBasis:
    """Sorted array of bit-encoded basis states over ``n_modes`` modes."""

    n_modes: int
    states: np.ndarray

    def __post_init__(self):
        if self.n_modes > 62:
            raise ValueError("at most 62 modes fit into an int64 state")
        states = np.unique(np.asarray(self.states, dtype=np.int64))
        object.__setattr__(self, "states", states)

    @classmethod
    def full(cls, n_modes):
        return cls(n_modes, np.arange(1 << n_modes, dtype=np.int64))

    @classmethod
    def fixed_number(cls, n_modes, n_particles):
        """All states with exactly ``n_particles`` set bits, in increasing order."""
        if not 0 <= n_particles <= n_modes:
            raise ValueError(f"cannot place {n_particles} particles in {n_modes} modes")
        states = [sum(1 << m for m in occ)
                  for occ in itertools.combinations(range(n_modes), n_particles)]
        return cls(n_modes, np.array(states, dtype=np.int64))

    @property
    def dim(self) -> int:
        return self.states.size

    def index(self, states):
        """Positions of ``states`` in the basis and a mask of which were found."""
        states = np.asarray(states, dtype=np.int64)
        pos = np.searchsorted(self.states, states)
        pos_c = np.minimum(pos, self.dim - 1)
        found = self.states[pos_c] == states
        return pos_c, found

    def occupation(self, mode):
        return (self.states >> mode) & 1


def between_mask(a, b):
    """Bits strictly between modes ``a`` and ``b``."""
    lo, hi = min(a, b), max(a, b)
    return ((1 << hi) - 1) & ~((1 << (lo + 1)) - 1)


def apply_hop(states, a, b):
    """Action of ``c^dag_a c_b`` on basis states.

    Returns ``(new_states, signs, valid)``; entries with ``valid`` false are
    annihilated.
    """
    states = np.asarray(states, dtype=np.int64)
    if a == b:
        occ = (states >> a) & 1
        return states, np.ones(states.shape), occ.astype(bool)
    valid = (((states >> b) & 1) == 1) & (((states >> a) & 1) == 0)
    new = states ^ ((1 << a) | (1 << b))
    signs = 1.0 - 2.0 * (popcount(states & between_mask(a, b)) & 1)
    return new, signs, valid


def bilinear(basis: FockBasis, terms, dtype=float, target: FockBasis | None = None):
    """Sparse matrix of ``sum_j coef_j c^dag_{a_j} c_{b_j}``.

    ``terms`` is an iterable of ``(coef, a, b)``.  Matrix elements that lead
    outside ``target`` (default: ``basis``) are dropped, so the result is
    exact on every column whose image stays inside the target basis.
    """
    target = basis if target is None else target
    rows, cols, vals = [], [], []
    col_index = np.arange(basis.dim)
    for coef, a, b in terms:
        if coef == 0:
            continue
        new, signs, valid = apply_hop(basis.states, a, b)
        pos, found = target.index(new[valid])
        keep = found
        rows.append(pos[keep])
        cols.append(col_index[valid][keep])
        vals.append((coef * signs[valid][keep]).astype(dtype))
    if rows:
        rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0, dtype=dtype)
    m = sp.coo_matrix((vals, (rows, cols)), shape=(target.dim, basis.dim), dtype=dtype)
    return m.tocsr()


def reachable(states, pairs, levels=1):
    """States reachable from ``states`` by up to ``levels`` hops ``c^dag_a c_b``."""
    current = np.unique(np.asarray(states, dtype=np.int64))
    seen = current
    for _ in range(levels):
        found = [current]
        for a, b in pairs:
            new, _, valid = apply_hop(current, a, b)
            found.append(new[valid])
        current = np.unique(np.concatenate(found))
        seen = np.union1d(seen, current)
    return seen
