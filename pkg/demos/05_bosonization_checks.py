"""
Checking bosonization on a truncated Fock space
===============================================

Operator identities of the chiral branches hold exactly on states far
enough from the truncation edge.
"""
# %%
import math

from luttinger2d import (MicroParams, TruncatedChiralSpace, coupling_for_gamma,
                         derive_effective_params, hn_equivalence_check, kronig_check,
                         schwinger_check)

space = TruncatedChiralSpace(((1, 1), (-1, 1)), n_long=8, margin=3)
p = space.momentum(2, 0)
rep = schwinger_check(space, 1, 1, p)
print("[J(p), J(-p)] =", rep.details["expected"], " residual", rep.max_residual)
print("different chirality:", schwinger_check(space, 1, 1, p, -1, 1, -p).details["expected"])

# %%
# Kinetic energy as a quadratic form in densities: the level counts are
# the partition numbers.
rep = kronig_check(1, 1, TruncatedChiralSpace(((1, 1),), 8, margin=4))
print("degeneracies", rep.details["degeneracies"], " residual", rep.max_residual)

# %%
# Interacting nodal Hamiltonian, fermion form against boson form.
eff = derive_effective_params(MicroParams(t=1.0, V=coupling_for_gamma(0.2, 1.0, math.pi / 2)))
rep = hn_equivalence_check(eff, TruncatedChiralSpace(((1, 1), (-1, 1)), 8, margin=4),
                           n_levels=4, interaction_window=1)
print(rep.details["fermion"])
print(rep.details["boson"])
