import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orliczlab.grid import Ball, Grid, GridError, GridField, MeasureData, region_mask
from orliczlab.maximal import load_maximal, restricted_M0, restricted_M1, riesz_mapping_check, save_maximal

G2 = Grid.cube(2, 1.0, 32)
ANCHOR = Ball((0.0, 0.0), 0.75)


def test_m0_of_constant():
    f = GridField(G2, np.full(G2.shape, 2.5))
    M = restricted_M0(f, ANCHOR)
    inside = region_mask(G2, ANCHOR) & ~M.uncovered
    assert np.allclose(M.values[inside], 2.5)
    assert np.all(M.values[M.out_of_domain] == 0)


@given(st.integers(0, 10_000))
@settings(max_examples=20, deadline=None)
def test_m0_bounds_and_monotonicity(seed):
    rng = np.random.default_rng(seed)
    a = rng.random(G2.shape)
    b = a + rng.random(G2.shape)
    radii = [0.5, 0.25, 0.125, G2.h]
    Ma = restricted_M0(GridField(G2, a), ANCHOR, radii, center_stride=1)
    Mb = restricted_M0(GridField(G2, b), ANCHOR, radii, center_stride=1)
    inside = region_mask(G2, ANCHOR) & ~Ma.uncovered
    # the smallest radius is h, whose open ball holds only its center node
    deep = region_mask(G2, Ball(ANCHOR.center, ANCHOR.radius - G2.h))
    assert np.all(Ma.values[deep] >= a[deep] - 1e-12)
    assert np.all(Ma.values[inside] <= a.max() + 1e-12)
    assert np.all(Mb.values >= Ma.values - 1e-12)


def test_m0_rejects_negative():
    with pytest.raises(GridError):
        restricted_M0(GridField(G2, -np.ones(G2.shape)), ANCHOR)


def test_m1_dirac_decay_2d():
    g = Grid.cube(2, 1.0, 128)
    M = restricted_M1(MeasureData.dirac((0.0, 0.0)), Ball((0.0, 0.0), 1.0), grid=g, center_stride=1)
    # in 2D the weighted mass |B|^(-1/2) of balls hitting the atom decays like 1/|x|
    pts = [(0.1, 0.0), (0.4, 0.0)]
    v = [M.values[g.node_index(p)] for p in pts]
    slope = math.log(v[1] / v[0]) / math.log(4.0)
    assert slope == pytest.approx(-1.0, abs=0.15)
    assert M.omega_factor == pytest.approx(math.pi ** (-0.5))


def test_m1_requires_grid_for_atoms():
    with pytest.raises(GridError):
        restricted_M1(MeasureData.dirac((0.0, 0.0)), ANCHOR)


def test_m1_density_matches_measure():
    dens = GridField(G2, np.exp(-G2.coords()[0] ** 2))
    a = restricted_M1(dens, ANCHOR)
    b = restricted_M1(MeasureData(density=dens), ANCHOR)
    assert np.array_equal(a.values, b.values)


def test_maximal_roundtrip(tmp_path):
    f = GridField(G2, np.random.default_rng(1).random(G2.shape))
    M = restricted_M0(f, ANCHOR)
    save_maximal(M, tmp_path / "m.olf")
    M2 = load_maximal(tmp_path / "m.olf")
    assert np.array_equal(M.values, M2.values)
    assert M2.anchor == ANCHOR and M2.order == "zero"


def test_riesz_item_i_constant_is_stable():
    rep = riesz_mapping_check(lambda x, y, z: np.exp(-8 * (x * x + y * y + z * z)), "i")
    assert np.isfinite(rep.empirical_constant) and rep.passed
