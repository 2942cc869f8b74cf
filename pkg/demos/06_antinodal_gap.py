"""
Mean-field charge-density-wave gap
==================================

The antinodal fermions, with the bosons integrated out, open a gap near
half filling.
"""
# %%
import numpy as np

from luttinger2d import AntinodalGrid, MicroParams, bisect_gap, derive_effective_params, gap_phase_scan, solve_gap

eff = derive_effective_params(MicroParams(t=1.0, V=4.0, nu=0.5))
grid = AntinodalGrid.for_params(eff, 64)
sol = solve_gap(eff, grid)
print(f"Delta = {sol.Delta:.10f} after {sol.iterations} iterations")
print(f"bisection: {bisect_gap(eff, grid):.10f}")

# %%
# Temperature dependence.
for T in (0.0, 0.05, 0.08, 0.1, 0.2):
    print(f"T={T:4.2f}  Delta={solve_gap(eff, grid, T=T).Delta:.6f}")

# %%
# Away from half filling ``mu_a`` moves the antinodal bands and the gap
# closes; the scan is symmetric about ``Q = pi/2``.
nus = 0.5 + np.array([-0.02, -0.01, -0.005, 0.0, 0.005, 0.01, 0.02])
for r in gap_phase_scan(1.0, 4.0, nus, n_grid=64):
    print(f"Q={r.Q:.4f}  Delta={r.Delta:.6f}  filling={r.filling: .2e}  gapped={r.gapped}")
