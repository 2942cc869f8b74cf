"""
Effective-model parameters
==========================

From the lattice inputs ``t, V, nu`` to the couplings of the nodal and
antinodal model.
"""
# %%
# Start from a system slightly above half filling.
from luttinger2d import MicroParams, coupling_for_gamma, derive_effective_params

p = MicroParams(t=1.0, V=2.0, nu=0.55)
eff = derive_effective_params(p)
for name in ("Q", "v_F", "c_F", "g1", "g2", "g3", "mu_a", "mu", "gamma"):
    print(f"{name:6s} {getattr(eff, name): .12f}")

# %%
# The nodal coupling is small here.  The bosonized theory stays stable
# while ``gamma < 1``, i.e. below ``V = 4 pi t / sin Q``.
print("stable:", eff.stable, " V bound:", coupling_for_gamma(1.0, p.t, eff.Q))

# %%
# On a finite system ``L/atilde`` must be odd and the filling snaps to a
# commensurate value.
q = MicroParams.on_grid(1.0, 2.0, cells=5, nu=0.55)
print("requested", q.nu_requested, "used", q.nu, "shift", q.nu_rounding)
