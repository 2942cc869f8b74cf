"""
Nodal boson dispersion and thermodynamics
=========================================

The nodal fermions become two branches of free bosons.
"""
# %%
import numpy as np

from luttinger2d import (KAPPA, BosonGrid, MicroParams, Momentum, closed_form_dispersion,
                         derive_effective_params, free_energy, numeric_dispersion)

eff = derive_effective_params(MicroParams(t=1.0, V=4.0, nu=0.5))
print("gamma =", eff.gamma)

# %%
# Closed form and direct diagonalization differ by one global factor.
x = np.linspace(-1, 1, 5)
p = Momentum(*np.meshgrid(x, x[::-1]))
cf = closed_form_dispersion(p, eff)
nm = numeric_dispersion(p, eff)
print("kappa =", KAPPA)
print("max |numeric - kappa * closed|:",
      np.max(np.abs(nm.omega_plus - KAPPA * cf.omega_plus)))

# %%
# Free energy on a finite mode grid.  ``E_n`` is measured from the free
# theory, so ``F(0) = E_n`` and ``F`` decreases with ``T``.
res = free_energy(eff, BosonGrid.from_cells(9), [0.0, 0.25, 0.5, 1.0, 2.0])
for T, F in zip(res.T, res.F):
    print(f"T={T:4.2f}  F={F: .8f}")
print(res.metadata)
