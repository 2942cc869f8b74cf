"""Brute-force checks of the nodal current algebra on truncated Fock spaces.

Each nodal branch ``(r, s)`` is truncated to ``n_long`` longitudinal
momenta ``k_s = (2 pi/L)(j + 1/2)`` and ``n_trans = L/atilde`` transverse
momenta covering one full umklapp period, so the umklapp sum in the
densities becomes modular arithmetic on the transverse index.  With the
field normalization ``{psi, psi^dag} = (L/2 pi)^2``, the densities are
plain bilinears ``J(p) = sum_k c^dag(k - p) c(k)`` (minus the vacuum value
at ``p = 0``).

The infinite Dirac sea is replaced by the truncated one.  Identities that
hold for the infinite sea hold exactly on the *safe sector*: states that
differ from the vacuum only at modes with ``|j + 1/2| <= n_long/2 - W``,
probed with momentum transfers ``|p_s| <= W`` (units of ``2 pi/L``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .fock import FockBasis, bilinear, popcount, reachable
from .params import EffectiveParams, Momentum

DENSE_LIMIT = 4096
SEED = 20100414


@dataclass(frozen=True)
class TruncatedChiralSpace:
    """Mode layout of a set of nodal branches.

    Parameters
    ----------
    branches : sequence of (r, s)
        Branch labels with ``r, s`` in ``{+1, -1}``.
    n_long : int
        Longitudinal modes per transverse line (even).
    n_trans : int
        Transverse momenta per branch; equals ``L/atilde`` (odd).
    margin : int
        Safe margin ``W`` in units of ``2 pi/L``.
    a : float
        Lattice constant; ``atilde = 2 sqrt(2) a``.
    """

    branches: tuple
    n_long: int
    n_trans: int = 1
    margin: int = 3
    a: float = 1.0

    def __post_init__(self):
        branches = tuple((int(r), int(s)) for r, s in self.branches)
        object.__setattr__(self, "branches", branches)
        if len(set(branches)) != len(branches) or not branches:
            raise ValueError("branches must be distinct and non-empty")
        for r, s in branches:
            if r not in (1, -1) or s not in (1, -1):
                raise ValueError(f"nodal branch labels must be +-1, got {(r, s)}")
        if self.n_long < 2 or self.n_long % 2:
            raise ValueError("n_long must be a positive even number")
        if self.n_trans < 1 or self.n_trans % 2 == 0:
            raise ValueError("n_trans = L/atilde must be odd")
        if not 0 <= self.margin <= self.n_long // 2:
            raise ValueError("margin must lie in [0, n_long/2]")
        if self.n_modes > 62:
            raise ValueError(f"{self.n_modes} modes exceed the 62-bit state encoding")

    @property
    def atilde(self) -> float:
        return 2 * math.sqrt(2.0) * self.a

    @property
    def L(self) -> float:
        return self.n_trans * self.atilde

    @property
    def unit(self) -> float:
        """Momentum spacing ``2 pi / L``."""
        return 2 * math.pi / self.L

    @property
    def modes_per_branch(self) -> int:
        return self.n_long * self.n_trans

    @property
    def n_modes(self) -> int:
        return len(self.branches) * self.modes_per_branch

    def branch_index(self, r, s) -> int:
        try:
            return self.branches.index((r, s))
        except ValueError:
            raise ValueError(f"branch {(r, s)} is not part of this space") from None

    def mode(self, b, ih, ij) -> int:
        return (b * self.n_trans + ih) * self.n_long + ij

    def kappa(self, ij):
        """Longitudinal momentum of index ``ij`` in units of ``2 pi/L``."""
        return np.asarray(ij) - self.n_long / 2 + 0.5

    def branch_mask(self, b) -> int:
        m = self.modes_per_branch
        return ((1 << m) - 1) << (b * m)

    @property
    def vacuum(self) -> int:
        """Bit pattern of the Dirac sea: branch ``r`` fills ``r k_s < 0``."""
        bits = 0
        for b, (r, _) in enumerate(self.branches):
            for ih in range(self.n_trans):
                for ij in range(self.n_long):
                    if r * self.kappa(ij) < 0:
                        bits |= 1 << self.mode(b, ih, ij)
        return bits

    def inner_modes(self):
        inner = self.n_long / 2 - self.margin
        return [self.mode(b, ih, ij)
                for b in range(len(self.branches))
                for ih in range(self.n_trans)
                for ij in range(self.n_long)
                if abs(self.kappa(ij)) <= inner]

    def safe_states(self, max_states=1 << 20) -> np.ndarray:
        """All states that differ from the vacuum only on inner modes."""
        inner = self.inner_modes()
        if (1 << len(inner)) > max_states:
            raise ValueError(f"{1 << len(inner)} safe states exceed max_states={max_states}")
        masks = np.zeros(1, dtype=np.int64)
        for m in inner:
            masks = np.concatenate([masks, masks | (1 << m)])
        return np.sort(masks ^ self.vacuum)

    def charges(self, states) -> np.ndarray:
        """Branch charges relative to the vacuum, shape ``(n_states, n_branches)``."""
        states = np.asarray(states, dtype=np.int64)
        vac = self.vacuum
        out = np.empty((states.size, len(self.branches)), dtype=np.int64)
        for b in range(len(self.branches)):
            mask = self.branch_mask(b)
            out[:, b] = popcount(states & mask) - popcount(vac & mask)
        return out

    def sector(self, charges=None) -> FockBasis:
        """Basis with fixed branch charges (default: every branch neutral)."""
        nb, m = len(self.branches), self.modes_per_branch
        charges = (0,) * nb if charges is None else tuple(charges)
        vac = self.vacuum
        states = np.zeros(1, dtype=np.int64)
        for b in range(nb):
            n0 = popcount(vac & self.branch_mask(b)).item()
            local = FockBasis.fixed_number(m, n0 + charges[b]).states << (b * m)
            states = (states[:, None] | local[None, :]).ravel()
        return FockBasis(self.n_modes, states)

    def transfer(self, r, s, p):
        """Integer ``(longitudinal, transverse)`` transfer of a physical ``p``."""
        p = Momentum(*p)
        p_long, p_trans = (p.k_plus, p.k_minus) if s == 1 else (p.k_minus, p.k_plus)
        out = []
        for x in (p_long, p_trans):
            j = x / self.unit
            if abs(j - round(j)) > 1e-9:
                raise ValueError(f"{p} is not on the (2 pi/L) Z grid")
            out.append(int(round(j)))
        return tuple(out)

    def in_transverse_window(self, dt) -> bool:
        # |p_{-s}| <= pi/atilde  <=>  |dt| <= n_trans/2
        return 2 * abs(dt) <= self.n_trans

    def momentum(self, jp, jm) -> Momentum:
        return Momentum(jp * self.unit, jm * self.unit)

    def density_terms(self, b, dl, dt):
        terms = []
        for ih in range(self.n_trans):
            ih2 = (ih - dt) % self.n_trans
            for ij in range(self.n_long):
                ij2 = ij - dl
                if 0 <= ij2 < self.n_long:
                    terms.append((1.0, self.mode(b, ih2, ij2), self.mode(b, ih, ij)))
        return terms


def _density(space: TruncatedChiralSpace, b, dl, dt, basis: FockBasis):
    m = bilinear(basis, space.density_terms(b, dl, dt))
    if dl == 0 and dt == 0:
        # normal ordering: subtract the vacuum expectation value
        n0 = popcount(space.vacuum & space.branch_mask(b)).item()
        m = m - sp.identity(basis.dim, format="csr") * n0
    return m.tocsr()


def build_density(r, s, p, space: TruncatedChiralSpace, basis: FockBasis | None = None):
    """Normal-ordered density ``J_{r,s}(p)`` as a sparse matrix on ``basis``.

    ``p`` is a physical :class:`~luttinger2d.params.Momentum`.  Matrix
    elements leading outside ``basis`` are dropped; the default basis is
    the full Fock space of ``space``.
    """
    b = space.branch_index(r, s)
    dl, dt = space.transfer(r, s, p)
    if not space.in_transverse_window(dt):
        raise ValueError(f"transverse momentum of {p} lies outside the cutoff window")
    if basis is None:
        basis = FockBasis.full(space.n_modes)
    return _density(space, b, dl, dt, basis)


@dataclass
class VerifyReport:
    """Outcome of one verification run."""

    check: str
    dims: dict
    max_residual: float
    levels_compared: int
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"check": self.check, "dims": self.dims,
                "max_residual": self.max_residual,
                "levels_compared": self.levels_compared,
                "pass": self.passed, "details": self.details}


def schwinger_value(space: TruncatedChiralSpace, r, s, p) -> float:
    """Anomalous commutator ``[J_{r,s}(p), J_{r,s}(-p)] = r (2 pi p_s/atilde)(L/2 pi)^2``."""
    dl, _ = space.transfer(r, s, p)
    p_s = dl * space.unit
    return r * (2 * math.pi * p_s / space.atilde) * (space.L / (2 * math.pi)) ** 2


def _commutator_on_safe(space, ops, safe):
    # closure: every state reachable from the safe ones by two hops of either operator
    pairs = sorted({(a, b) for terms, _ in ops for _, a, b in terms if a != b})
    basis = FockBasis(space.n_modes, reachable(safe, pairs, levels=2))
    cols, _ = basis.index(safe)
    A, B = (bilinear(basis, terms) - sp.identity(basis.dim, format="csr") * shift
            for terms, shift in ops)
    E = sp.csr_matrix((np.ones(cols.size), (cols, np.arange(cols.size))),
                      shape=(basis.dim, cols.size))
    C = A @ (B @ E) - B @ (A @ E)
    return C.tocsc(), basis, cols


def schwinger_check(space: TruncatedChiralSpace, r, s, p, r2=None, s2=None, p2=None,
                    tol=1e-12) -> VerifyReport:
    """Check ``[J_{r,s}(p), J_{r2,s2}(p2)]`` on every safe state.

    Defaults ``r2 = r``, ``s2 = s``, ``p2 = -p``.  The expected value is
    ``delta_{r r2} delta_{s s2} delta_{p,-p2} r (2 pi p_s/atilde)(L/2 pi)^2``
    times the identity.  Requires ``|p_s|, |p2_s| <= W``.
    """
    r2 = r if r2 is None else r2
    s2 = s if s2 is None else s2
    p = Momentum(*p)
    p2 = -p if p2 is None else Momentum(*p2)
    ops = []
    for rr, ss, pp in ((r, s, p), (r2, s2, p2)):
        b = space.branch_index(rr, ss)
        dl, dt = space.transfer(rr, ss, pp)
        if abs(dl) > space.margin:
            raise ValueError(f"|p_s| = {abs(dl)} exceeds the safe margin {space.margin}")
        if not space.in_transverse_window(dt):
            raise ValueError(f"transverse momentum of {pp} lies outside the cutoff window")
        shift = popcount(space.vacuum & space.branch_mask(b)).item() if dl == dt == 0 else 0
        ops.append((space.density_terms(b, dl, dt), shift))
    safe = space.safe_states()
    C, basis, cols = _commutator_on_safe(space, ops, safe)
    same = (r, s) == (r2, s2) and np.allclose(p, -np.asarray(p2), atol=1e-12 * space.unit)
    expected = schwinger_value(space, r, s, p) if same else 0.0
    D = C - sp.csc_matrix((np.full(cols.size, expected), (cols, np.arange(cols.size))),
                          shape=C.shape)
    D.eliminate_zeros()
    residual = float(abs(D).max()) if D.nnz else 0.0
    # also report the value without the chirality sign r
    details = {"expected": expected,
               "unsigned_formula": r * expected,
               "dimensionless": expected / ((space.L / (2 * math.pi)) ** 2)}
    if residual > tol:
        col = int(np.argmax(np.asarray(abs(D).max(axis=0).todense()).ravel()))
        details["offending_state"] = format(int(safe[col]), f"0{space.n_modes}b")
    return VerifyReport("schwinger", {"safe": int(safe.size), "closure": basis.dim},
                        residual, 0, residual <= tol, details)


def schwinger_sweep(space: TruncatedChiralSpace, tol=1e-12) -> VerifyReport:
    """Run :func:`schwinger_check` over all branch pairs and all safe ``p, p'``.

    Transfers cover ``|p_s| <= W`` and every transverse value inside the
    cutoff window; cross-branch pairs use the momentum components seen by
    each branch.
    """
    jt = [d for d in range(-space.n_trans, space.n_trans + 1) if space.in_transverse_window(d)]
    jl = range(-space.margin, space.margin + 1)
    worst, n_checked, failures, dims = 0.0, 0, [], {"safe": 0, "closure": 0}
    for (r, s), (r2, s2) in itertools.product(space.branches, repeat=2):
        sub = TruncatedChiralSpace(tuple(dict.fromkeys([(r, s), (r2, s2)])),
                                   space.n_long, space.n_trans, space.margin, space.a)
        moms1 = _branch_momenta(sub, s, jl, jt)
        moms2 = _branch_momenta(sub, s2, jl, jt)
        for p, p2 in itertools.product(moms1, moms2):
            rep = schwinger_check(sub, r, s, p, r2, s2, p2, tol=tol)
            n_checked += 1
            worst = max(worst, rep.max_residual)
            dims = {k: max(dims[k], rep.dims[k]) for k in dims}
            if not rep.passed:
                failures.append({"branches": [[r, s], [r2, s2]], "p": list(p), "p2": list(p2),
                                 **rep.details})
    details = {"commutators": n_checked, "failures": failures[:5]}
    return VerifyReport("schwinger", dims, worst, 0, not failures, details)


def _branch_momenta(space, s, jl, jt):
    out = []
    for dl in jl:
        for dt in jt:
            jp, jm = (dl, dt) if s == 1 else (dt, dl)
            out.append(space.momentum(jp, jm))
    return out


def _eigenvalues(H, k):
    """Lowest ``k`` eigenvalues of a Hermitian sparse matrix."""
    n = H.shape[0]
    if n <= DENSE_LIMIT:
        return sla.eigh(H.toarray(), eigvals_only=True)[:k]
    k = min(k, n - 2)
    v0 = np.random.default_rng(SEED).standard_normal(n)
    w = spla.eigsh(H, k=k, which="SA", v0=v0, ncv=min(n, max(3 * k, 40)),
                   tol=1e-14, return_eigenvectors=False)
    return np.sort(w)


def _block_spectra(ops, k):
    """Lowest ``k`` eigenvalues of each operator, block by block.

    Blocks are the connected components of the joint sparsity graph
    (conserved-momentum sectors).  Lanczos alone is unreliable here:
    the spectra are integer-spaced and massively degenerate.
    """
    G = sum(abs(H) for H in ops).tocsr()
    n_blocks, labels = connected_components(G, directed=False)
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(n_blocks + 1))
    sizes = np.diff(bounds)
    single = order[bounds[:-1][sizes == 1]]
    out = [[np.asarray(H.diagonal())[single]] for H in ops]
    for blk in np.flatnonzero(sizes > 1):
        idx = order[bounds[blk]:bounds[blk + 1]]
        for j, H in enumerate(ops):
            out[j].append(_eigenvalues(H[idx][:, idx], k))
    return [np.sort(np.concatenate(parts))[:k] for parts in out], int(sizes.max())


def _kinetic_fermion(space, basis, v_F):
    diag = np.zeros(basis.dim)
    vac = space.vacuum
    for b, (r, _) in enumerate(space.branches):
        for ih in range(space.n_trans):
            for ij in range(space.n_long):
                m = space.mode(b, ih, ij)
                occ = ((basis.states >> m) & 1) - ((vac >> m) & 1)
                diag += r * space.kappa(ij) * occ
    return sp.diags(v_F * space.unit * diag, format="csr")


def _kinetic_boson(space, basis, v_F, densities):
    # (pi atilde v_F / L^2) sum_p :J(-p) J(p):, annihilator (r p_s >= 0) on the right
    pref = math.pi * space.atilde * v_F / space.L**2
    H = sp.csr_matrix((basis.dim, basis.dim))
    for b, (r, _) in enumerate(space.branches):
        for dl in range(-(space.n_long - 1), space.n_long):
            for dt in range(-space.n_trans, space.n_trans + 1):
                if not space.in_transverse_window(dt):
                    continue
                if r * dl >= 0:
                    H = H + densities(b, -dl, -dt) @ densities(b, dl, dt)
                else:
                    H = H + densities(b, dl, dt) @ densities(b, -dl, -dt)
    return (pref * H).tocsr()


def _density_cache(space, basis):
    cache = {}

    def get(b, dl, dt):
        key = (b, dl, dt)
        if key not in cache:
            cache[key] = _density(space, b, dl, dt, basis)
        return cache[key]

    return get


def _degeneracies(levels, unit, tol):
    vals = np.round(levels / unit).astype(int)
    if np.any(np.abs(levels - vals * unit) > tol * max(1.0, unit)):
        return None
    return [int(np.count_nonzero(vals == n)) for n in range(vals.max() + 1)]


def kronig_check(r, s, space: TruncatedChiralSpace, v_F=1.0, cutoff=None,
                 tol=1e-10) -> VerifyReport:
    """Compare the chiral kinetic term with its quadratic density form.

    Both operators are diagonalized on the neutral sector of branch
    ``(r, s)``; every eigenvalue up to ``cutoff`` (default
    ``v_F W 2 pi/L``) must match.  ``space`` may contain other branches;
    they are left out.
    """
    sub = TruncatedChiralSpace(((r, s),), space.n_long, space.n_trans, space.margin, space.a)
    basis = sub.sector()
    cutoff = v_F * sub.margin * sub.unit if cutoff is None else cutoff
    dens = _density_cache(sub, basis)
    Hf = _kinetic_fermion(sub, basis, v_F)
    Hb = _kinetic_boson(sub, basis, v_F, dens)
    ef = np.sort(Hf.diagonal())
    (eb,), _ = _block_spectra([Hb], basis.dim)
    slack = 1e-9 * max(1.0, cutoff)
    lf, lb = ef[ef <= cutoff + slack], eb[eb <= cutoff + slack]
    details = {"cutoff": cutoff, "levels_fermion": lf.tolist(), "levels_boson": lb.tolist()}
    if lf.size != lb.size:
        details["mismatch"] = "different number of levels below cutoff"
        return VerifyReport("kronig", {"sector": basis.dim}, math.inf, int(min(lf.size, lb.size)),
                            False, details)
    residual = float(np.max(np.abs(lf - lb))) if lf.size else 0.0
    details["degeneracies"] = _degeneracies(lf, v_F * sub.unit, 1e-9)
    details["degeneracies_boson"] = _degeneracies(lb, v_F * sub.unit, 1e-9)
    if residual > tol:
        k = int(np.argmax(np.abs(lf - lb) > tol))
        details["first_mismatch"] = {"index": k, "fermion": float(lf[k]), "boson": float(lb[k])}
    return VerifyReport("kronig", {"sector": basis.dim}, residual, int(lf.size),
                        residual <= tol, details)


def _interaction(space, eff, densities, window):
    """``(1/L^2) sum_s sum_p chi(p) [g1 sum_r J_{r,s}^dag J_{-r,s} + g2 sum_{r,r'} J_{r,s}^dag J_{r',-s}]``."""
    H = None
    labels = {lab: b for b, lab in enumerate(space.branches)}

    def J(r, s, jp, jm):
        if (r, s) not in labels:
            return None
        dl, dt = (jp, jm) if s == 1 else (jm, jp)
        if not space.in_transverse_window(dt) or abs(dl) >= space.n_long:
            return None
        return densities(labels[(r, s)], dl, dt)

    for jp in range(-window, window + 1):
        for jm in range(-window, window + 1):
            for s in (1, -1):
                for r in (1, -1):
                    for coef, (r2, s2) in [(eff.g1, (-r, s)), (eff.g2, (1, -s)), (eff.g2, (-1, -s))]:
                        A, B = J(r, s, -jp, -jm), J(r2, s2, jp, jm)
                        if A is None or B is None or coef == 0:
                            continue
                        term = coef * (A @ B)
                        H = term if H is None else H + term
    if H is None:
        return None
    return (H / space.L**2).tocsr()


def nodal_hamiltonians(eff: EffectiveParams, space: TruncatedChiralSpace, charges=None,
                       interaction_window=None):
    """Fermionic and bosonized nodal Hamiltonians on a fixed-charge sector.

    Returns ``(H_fermion, H_boson, basis, window)``.  ``interaction_window``
    overrides the cutoff window ``|p_pm| <= pi/atilde`` (given as the
    largest ``|p_pm|`` in units of ``2 pi/L``).
    """
    basis = space.sector(charges)
    window = space.n_trans // 2 if interaction_window is None else int(interaction_window)
    dens = _density_cache(space, basis)
    Hint = _interaction(space, eff, dens, window)
    Hf = _kinetic_fermion(space, basis, eff.v_F)
    Hb = _kinetic_boson(space, basis, eff.v_F, dens)
    if Hint is not None:
        Hf, Hb = Hf + Hint, Hb + Hint
    return Hf.tocsr(), Hb.tocsr(), basis, window


def hn_equivalence_check(eff: EffectiveParams, space: TruncatedChiralSpace, n_levels=4,
                         charges=None, interaction_window=None, tol=1e-8) -> VerifyReport:
    """Compare the low spectra of the fermionic and bosonized nodal Hamiltonians.

    Requires ``gamma < 1``.  The lowest ``n_levels`` eigenvalues of the
    sector with the given branch charges (default: all neutral) are
    compared.  On a single transverse line the cutoff window only admits
    ``p = 0``, which is recorded in the report.
    """
    if not eff.gamma < 1:
        raise ValueError(f"gamma = {eff.gamma} >= 1: bosonized Hamiltonian is unbounded")
    if abs(space.a - eff.a) > 1e-12 * eff.a:
        raise ValueError("space and effective parameters use different lattice constants")
    Hf, Hb, basis, window = nodal_hamiltonians(eff, space, charges, interaction_window)
    (ef, eb), largest = _block_spectra([Hf, Hb], n_levels)
    residual = float(np.max(np.abs(ef - eb)))
    details = {"fermion": ef.tolist(), "boson": eb.tolist(), "interaction_window": window,
               "safe_energy_cutoff": eff.v_F * space.margin * space.unit,
               "gamma": eff.gamma}
    if window == 0:
        details["note"] = "cutoff window admits only p = 0 on this truncation"
    return VerifyReport("hn_equivalence", {"sector": basis.dim, "largest_block": largest}, residual, n_levels,
                        residual <= tol, details)
