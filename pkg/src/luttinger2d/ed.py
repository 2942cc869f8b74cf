"""Exact diagonalization of the 2D t-V model on small periodic lattices.

The interaction is built in position space.  Fourier transforming the
momentum-space interaction with ``u(p) = a^2 V [cos(a p1) + cos(a p2)]/(8 pi^2)``
gives exactly ``(V/4) sum_x sum_d n_x n_{x+d}``, where ``d`` runs over the
four unit vectors, i.e. ``V/2`` per nearest-neighbour bond and no extra
one-body terms.  :func:`build_htv_momentum` constructs the momentum form
directly so the two can be compared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fock import FockBasis, bilinear, popcount
from .params import MicroParams

MAX_SITES = 20
DENSE_LIMIT = 2000
# fixed Lanczos start vector keeps runs reproducible
SEED = 20100414
MAX_LANCZOS_LEVELS = 256
DIRECTIONS = ((1, 0), (-1, 0), (0, 1), (0, -1))


class ConvergenceError(RuntimeError):
    """The iterative eigensolver did not converge."""


@dataclass(frozen=True)
class LatticeSpec:
    """Periodic ``n1 x n2`` square lattice; site ``(x1, x2)`` has index ``x1 + n1 x2``."""

    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("lattice dimensions must be positive")
        if self.n_sites > MAX_SITES:
            raise ValueError(f"{self.n_sites} sites exceed the ED limit of {MAX_SITES}")

    @property
    def n_sites(self) -> int:
        return self.n1 * self.n2

    def site(self, x1, x2):
        return (x1 % self.n1) + self.n1 * (x2 % self.n2)

    def coords(self, i):
        return i % self.n1, i // self.n1

    def neighbours(self):
        """Directed pairs ``(x, x + d)`` for the four unit vectors ``d``."""
        for i in range(self.n_sites):
            x1, x2 = self.coords(i)
            for d1, d2 in DIRECTIONS:
                yield i, self.site(x1 + d1, x2 + d2)

    def stagger(self):
        """``(-1)^(x1 + x2)`` for every site."""
        return np.array([(-1) ** sum(self.coords(i)) for i in range(self.n_sites)])

    def momenta(self, a=1.0):
        m1, m2 = np.meshgrid(np.arange(self.n1), np.arange(self.n2), indexing="ij")
        return 2 * np.pi * m1.ravel() / (self.n1 * a), 2 * np.pi * m2.ravel() / (self.n2 * a)


@dataclass(frozen=True)
class SectorOperator:
    """A Hamiltonian restricted to one particle-number sector (or the full space)."""

    matrix: sp.csr_matrix
    basis: FockBasis
    spec: LatticeSpec
    n_particles: int | None

    @property
    def dim(self):
        return self.basis.dim


def _relabel(spec, site_map):
    if site_map is None:
        return np.arange(spec.n_sites)
    site_map = np.asarray(site_map)
    if sorted(site_map.tolist()) != list(range(spec.n_sites)):
        raise ValueError("site_map must be a permutation of the sites")
    return site_map


def build_htv(spec: LatticeSpec, p: MicroParams, mu: float, n_particles=None,
              extra_bonds=(), site_map=None) -> SectorOperator:
    """``H_0 - mu N + H_int`` in position space.

    ``n_particles=None`` builds the whole Fock space.  ``extra_bonds`` is a
    sequence of ``(i, j, amplitude)`` adding ``-amplitude (c^dag_i c_j + h.c.)``;
    ``site_map`` relabels sites (site ``i`` becomes bit ``site_map[i]``).
    """
    n = spec.n_sites
    basis = (FockBasis.full(n) if n_particles is None
             else FockBasis.fixed_number(n, n_particles))
    perm = _relabel(spec, site_map)
    terms = [(-p.t, int(perm[j]), int(perm[i])) for i, j in spec.neighbours()]
    for i, j, amp in extra_bonds:
        terms += [(-amp, int(perm[i]), int(perm[j])), (-amp, int(perm[j]), int(perm[i]))]
    H = bilinear(basis, terms)
    occ = np.stack([basis.occupation(int(perm[i])) for i in range(n)]).astype(float)
    diag = -mu * occ.sum(axis=0)
    for i, j in spec.neighbours():
        diag += (p.V / 4) * occ[i] * occ[j]
    H = (H + sp.diags(diag)).tocsr()
    return SectorOperator(H, basis, spec, n_particles)


def build_htv_momentum(spec: LatticeSpec, p: MicroParams, mu: float) -> np.ndarray:
    """Dense full-Fock-space Hamiltonian assembled from plane-wave operators.

    Uses ``c_k = N^(-1/2) sum_x exp(-i k.x) c_x`` and the momentum-space
    interaction term by term; intended for tiny lattices only.
    """
    n = spec.n_sites
    if n > 10:
        raise ValueError("momentum-space construction is limited to 10 sites")
    basis = FockBasis.full(n)
    annih = []
    for m in range(n):
        # c_m = |s without m><s| with sign from lower occupied bits
        occ = basis.occupation(m).astype(bool)
        src = np.flatnonzero(occ)
        dst = basis.index(basis.states[src] ^ (1 << m))[0]
        sign = 1.0 - 2.0 * (popcount(basis.states[src] & ((1 << m) - 1)) & 1)
        annih.append(sp.csr_matrix((sign, (dst, src)), shape=(basis.dim, basis.dim)))
    x1 = np.array([spec.coords(i)[0] for i in range(n)], dtype=float) * p.a
    x2 = np.array([spec.coords(i)[1] for i in range(n)], dtype=float) * p.a
    k1, k2 = spec.momenta(p.a)
    phase = np.exp(-1j * (np.outer(k1, x1) + np.outer(k2, x2))) / np.sqrt(n)
    ck = [sum(phase[q, m] * annih[m] for m in range(n)) for q in range(n)]
    ckd = [c.conj().T.tocsr() for c in ck]
    eps = -2 * p.t * (np.cos(p.a * k1) + np.cos(p.a * k2))
    H = sum((eps[q] - mu) * (ckd[q] @ ck[q]) for q in range(n))
    m1, m2 = np.divmod(np.arange(n), spec.n2)

    def shifted(q, pq, sign):
        return ((m1[q] + sign * m1[pq]) % spec.n1) * spec.n2 + (m2[q] + sign * m2[pq]) % spec.n2

    # (2 pi/L)^2 u(p) = V [cos(a p1) + cos(a p2)] / (2 N) in the c_k normalisation
    for q1 in range(n):
        for q2 in range(n):
            pq = shifted(q1, q2, -1)
            u = p.V * (np.cos(p.a * k1[pq]) + np.cos(p.a * k2[pq])) / (2 * n)
            if abs(u) < 1e-15:
                continue
            left = ckd[q1] @ ck[q2]
            for q3 in range(n):
                q4 = shifted(q3, pq, +1)
                H = H + u * (left @ (ckd[q3] @ ck[q4]))
    return np.asarray(H.todense())


def number_operator(op: SectorOperator):
    return sp.diags(popcount(op.basis.states).astype(float))


def _residual(H, energy, vec):
    return float(np.linalg.norm(H @ vec - energy * vec))


def low_spectrum(op: SectorOperator, k=1, maxiter=None, tol=0.0, method="auto"):
    """Lowest ``k`` eigenpairs.

    ``method="auto"`` uses dense diagonalization up to ``DENSE_LIMIT``
    states and Lanczos above; ``"dense"`` and ``"lanczos"`` force one path.
    """
    if method not in ("auto", "dense", "lanczos"):
        raise ValueError(f"unknown method {method!r}")
    H = op.matrix
    k = min(k, op.dim)
    dense = method == "dense" or (method == "auto" and op.dim <= DENSE_LIMIT)
    if dense or k >= op.dim - 1:
        w, v = la.eigh(H.toarray())
        return w[:k], v[:, :k]
    ncv = min(op.dim, max(3 * k, 40))
    try:
        w, v = spla.eigsh(H, k=k, which="SA", ncv=ncv, maxiter=maxiter, tol=tol,
                          v0=np.random.default_rng(SEED).standard_normal(op.dim))
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceError(f"Lanczos did not converge for k={k}: {exc}") from exc
    order = np.argsort(w)
    return w[order], v[:, order]


@dataclass(frozen=True)
class GroundState:
    energy: float
    vectors: np.ndarray
    residual: float

    @property
    def degeneracy(self):
        return self.vectors.shape[1]

    @property
    def state(self):
        return self.vectors[:, 0]


def ground_state(op: SectorOperator, degeneracy_tol=1e-8, max_multiplet=64, maxiter=None):
    """Lowest eigenvalue with its full degenerate multiplet.

    Lanczos can miss copies of a degenerate eigenvalue, so the number of
    requested pairs grows until the multiplet size is the same for two
    successive requests and stays below half of them.
    """
    if op.dim < 1:
        raise ValueError("empty sector")
    k, previous = 8, None
    while True:
        k = min(k, op.dim)
        w, v = low_spectrum(op, k, maxiter=maxiter)
        deg = int(np.count_nonzero(w - w[0] <= degeneracy_tol * max(1.0, abs(w[0]))))
        if op.dim <= DENSE_LIMIT or k == op.dim:
            break
        if deg == previous and 2 * deg < k:
            break
        if k >= max_multiplet:
            raise ConvergenceError(f"ground multiplet larger than {max_multiplet // 2}")
        previous, k = deg, 2 * k
    vecs = v[:, :deg]
    res = max(_residual(op.matrix, w[j], vecs[:, j]) for j in range(deg))
    return GroundState(float(w[0]), vecs, res)


def ground_energy_all_sectors(spec: LatticeSpec, p: MicroParams, mu: float):
    """Minimum over particle numbers of the sector ground energies."""
    best = None
    for n in range(spec.n_sites + 1):
        e = ground_state(build_htv(spec, p, mu, n)).energy
        if best is None or e < best[0]:
            best = (e, n)
    return best


def _distinct(levels, tol):
    out = [levels[0]]
    for e in levels[1:]:
        if e - out[-1] > tol:
            out.append(e)
    return np.array(out)


def ph_transform_check(spec: LatticeSpec, p: MicroParams, mu: float, n_particles: int,
                       n_levels=12, tol=1e-9, extra_bonds=()):
    """Particle-hole test: spectra of sector ``N`` at ``mu`` and ``N_sites - N`` at ``V - mu``.

    The two spectra must agree up to one constant shift, fixed by the
    ground energies.  Full spectra are compared for sectors up to
    ``DENSE_LIMIT`` states.  Larger sectors compare the distinct levels
    among the lowest ``2 n_levels`` Lanczos eigenvalues, since Lanczos may
    drop copies of a degenerate level; the top cluster, which can be cut
    by the truncation, is left out.  The request doubles until at least
    two distinct levels (ground state and one gap) can be compared.
    """
    a = build_htv(spec, p, mu, n_particles, extra_bonds=extra_bonds)
    b = build_htv(spec, p, p.V - mu, spec.n_sites - n_particles, extra_bonds=extra_bonds)
    if a.dim <= DENSE_LIMIT:
        ea = la.eigvalsh(a.matrix.toarray())
        eb = la.eigvalsh(b.matrix.toarray())
        shift = eb[0] - ea[0]
        return bool(np.max(np.abs(eb - ea - shift)) <= tol)
    k, want = 2 * n_levels, 2
    while True:
        ea = _distinct(low_spectrum(a, k)[0], tol)
        eb = _distinct(low_spectrum(b, k)[0], tol)
        m = min(ea.size, eb.size) - 1
        if m >= want:
            break
        if k >= min(a.dim, MAX_LANCZOS_LEVELS):
            raise ConvergenceError("too few distinct levels to compare; increase n_levels")
        k = 2 * k
    shift = eb[0] - ea[0]
    return bool(np.max(np.abs(eb[:m] - ea[:m] - shift)) <= tol)


def cdw_order(vectors, op: SectorOperator) -> float:
    """Staggered correlator ``N^-2 sum_{x,y} (-1)^(x-y) <n_x n_y>``.

    ``vectors`` may hold a degenerate multiplet as columns; the result is
    then averaged over the multiplet.
    """
    vectors = np.asarray(vectors)
    if vectors.ndim == 1:
        vectors = vectors[:, None]
    spec = op.spec
    stag = spec.stagger()
    occ = np.stack([op.basis.occupation(i) for i in range(spec.n_sites)]).astype(float)
    m2 = (stag @ occ) ** 2
    weights = np.sum(np.abs(vectors) ** 2, axis=1) / vectors.shape[1]
    return float(weights @ m2 / spec.n_sites**2)


def free_fermion_cdw(spec: LatticeSpec, p: MicroParams, n_particles: int, tol=1e-9) -> float:
    """CDW correlator of the V = 0 ground multiplet from Slater determinants.

    Averages Wick's theorem over every way of filling the partially occupied
    single-particle shell, which spans the degenerate many-body multiplet.
    """
    from itertools import combinations

    n = spec.n_sites
    k1, k2 = spec.momenta(p.a)
    eps = -2 * p.t * (np.cos(p.a * k1) + np.cos(p.a * k2))
    order = np.argsort(eps, kind="stable")
    e_f = eps[order[n_particles - 1]]
    below = order[eps[order] < e_f - tol]
    shell = order[np.abs(eps[order] - e_f) <= tol]
    need = n_particles - below.size
    x1 = np.array([spec.coords(i)[0] for i in range(n)]) * p.a
    x2 = np.array([spec.coords(i)[1] for i in range(n)]) * p.a
    waves = np.exp(1j * (np.outer(x1, k1) + np.outer(x2, k2))) / np.sqrt(n)
    stag = spec.stagger()
    total, count = 0.0, 0
    for extra in combinations(shell.tolist(), need):
        occ = np.concatenate([below, np.array(extra, dtype=int)])
        G = waves[:, occ] @ waves[:, occ].conj().T
        dens = np.real(np.diag(G))
        nn = np.outer(dens, dens) - np.abs(G) ** 2 + np.diag(dens)
        total += float(stag @ nn @ stag)
        count += 1
    return total / count / n**2
