import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from luttinger2d import (
    REGIONS,
    BZGrid,
    MicroParams,
    RegionIndex,
    classify,
    filling_fractions,
    q_point,
    region_map,
    window_sizes,
)


def grid_params(cells, nu=0.5):
    return MicroParams.on_grid(1.0, 0.0, cells, nu)


@pytest.mark.parametrize("cells", [1, 3, 5, 7])
def test_exact_cover(cells):
    p = grid_params(cells)
    m = region_map(p)
    assert sum(m.sizes().values()) == BZGrid(cells).n_points == 8 * cells**2


def test_region_sizes_R3():
    sizes = region_map(grid_params(3)).sizes()
    assert sizes[RegionIndex(1, 0)] == sizes[RegionIndex(-1, 0)] == 9
    nodal = sorted(v for k, v in sizes.items() if k.nodal)
    assert nodal == [13, 13, 14, 14]
    for s in (1, -1):
        assert sizes[RegionIndex(1, s)] == sizes[RegionIndex(-1, s)]


@pytest.mark.parametrize("cells,nu", [(3, 0.5), (5, 0.5), (5, 0.4), (7, 0.6), (9, 0.3)])
def test_window_sizes_agree(cells, nu):
    p = grid_params(cells, nu)
    assert region_map(p).sizes() == window_sizes(p)


def test_classify_agrees_with_map():
    p = grid_params(3)
    m = region_map(p)
    k = m.grid.to_momentum(m.n_plus, m.n_minus)
    for i in range(0, m.n_plus.size, 7):
        idx, local = classify((k.k_plus[i], k.k_minus[i]), p)
        assert (idx.r, idx.s) == (m.r[i], m.s[i])
        lp, lm = m.grid.to_units(local)
        assert (lp, lm) == (m.local_plus[i], m.local_minus[i])


def test_local_momentum_reconstructs_point():
    p = grid_params(5, 0.4)
    m = region_map(p)
    rows = m.rows()
    for idx in REGIONS:
        sel = (rows[:, 2] == idx.r) & (rows[:, 3] == idx.s)
        q = q_point(idx, p.Q)
        k1 = q.k1 + (rows[sel, 4] + rows[sel, 5]) / math.sqrt(2)
        k2 = q.k2 + (rows[sel, 4] - rows[sel, 5]) / math.sqrt(2)
        # equal modulo the reciprocal lattice 2 pi Z^2
        d1 = (k1 - rows[sel, 0]) / (2 * math.pi)
        d2 = (k2 - rows[sel, 1]) / (2 * math.pi)
        np.testing.assert_allclose(d1, np.round(d1), atol=1e-9)
        np.testing.assert_allclose(d2, np.round(d2), atol=1e-9)


@given(st.floats(math.pi / 4 + 1e-6, 3 * math.pi / 4 - 1e-6))
def test_filling_fractions_sum(Q):
    assert abs(sum(filling_fractions(Q).values()) - Q / math.pi) <= 1e-14


def test_q_point_nodal():
    Q = 0.6 * math.pi
    q = q_point(RegionIndex(-1, 1), Q)
    assert (q.k1, q.k2) == pytest.approx((-Q, -Q))


def test_off_grid_momentum_rejected():
    p = grid_params(3)
    with pytest.raises(ValueError):
        classify((0.0, 0.0), p)


def test_Q_domain():
    with pytest.raises(ValueError):
        region_map(MicroParams.on_grid(1.0, 0.0, 3, 0.2))
