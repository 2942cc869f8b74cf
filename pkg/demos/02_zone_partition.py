"""
Partitioning the Brillouin zone
===============================

Every fermion momentum of a finite system belongs to exactly one of six
regions: two antinodal squares and four nodal strips.
"""
# %%
import numpy as np

from luttinger2d import MicroParams, filling_fractions, region_map

p = MicroParams.on_grid(1.0, 0.0, cells=3, nu=0.5)
m = region_map(p)
for idx, n in m.sizes().items():
    print(f"r={idx.r:+d} s={idx.s:+d}: {n} points")
print("total", sum(m.sizes().values()), "of", m.grid.n_points)

# %%
# Local momenta relative to each region's reference point.  The rows
# are plot-ready: ``k1, k2, r, s, k'+, k'-``.
rows = m.rows()
print(rows[:5])

# %%
# Contribution of each region to the reference-state filling.
fr = filling_fractions(p.Q)
print({f"{k.r:+d},{k.s:+d}": round(v, 6) for k, v in fr.items()}, "sum", sum(fr.values()))
print("distinct nodal windows:", np.unique(m.s[m.s != 0]))
