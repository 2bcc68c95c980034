import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orliczlab.grid import Annulus, Ball, Box, Grid, GridError, GridField, region_measure
from orliczlab.norms import (
    NormError,
    NormSpec,
    ZeroFieldWarning,
    embedding_chain_check,
    evaluate,
    lebesgue_norm,
    llogl_luxemburg,
    llogl_norm,
    lorentz_morrey_norm,
    lorentz_norm,
    marcinkiewicz_morrey_norm,
    marcinkiewicz_norm,
    morrey_norm,
    parse_normspec,
)

PAIRS = [(q, s) for q in (1.2, 1.5, 3.0) for s in (1.0, 2.0, 4.0)]


@pytest.fixture(scope="module")
def disk():
    g = Grid.cube(2, 1.0, 64)
    E = Ball((0.1, -0.2), 0.45)
    f = GridField.from_function(g, lambda x, y: ((x - 0.1) ** 2 + (y + 0.2) ** 2 < 0.45**2) * 1.0)
    return f, region_measure(g, E)


@pytest.mark.parametrize("q,s", PAIRS)
def test_lorentz_indicator_closed_form(disk, q, s):
    f, measE = disk
    want = (q / s) ** (1 / s) * measE ** (1 / q)
    assert lorentz_norm(f, q, s) == pytest.approx(want, rel=1e-12)
    assert lorentz_norm(f, q, s, method="quadrature") == pytest.approx(want, rel=1e-3)


def test_marcinkiewicz_indicator(disk):
    f, measE = disk
    assert marcinkiewicz_norm(f, 1.5) == pytest.approx(measE ** (1 / 1.5))


def random_field(seed, cells=32, blocks=8):
    rng = np.random.default_rng(seed)
    g = Grid.cube(2, 1.0, cells)
    coarse = rng.exponential(size=(blocks, blocks)) * (rng.random((blocks, blocks)) < 0.7)
    k = (cells + 1 + blocks - 1) // blocks
    vals = np.kron(coarse, np.ones((k, k)))[: cells + 1, : cells + 1]
    return GridField(g, vals)


@pytest.mark.parametrize("seed", range(4))
def test_lorentz_diagonal_is_lebesgue(seed):
    f = random_field(seed)
    for q in (1.0, 1.5, 3.0):
        assert lorentz_norm(f, q, q) == pytest.approx(lebesgue_norm(f, q), rel=1e-12)


@pytest.mark.parametrize("q", [1.0, 1.5, 3.0])
def test_quadrature_diagonal_on_smooth_profile(q):
    g = Grid((0, 0), (1, 1), (64, 64))
    f = GridField.from_function(g, lambda x, y: 1 + x * x + y)
    assert lorentz_norm(f, q, q, method="quadrature") == pytest.approx(lebesgue_norm(f, q), rel=1e-3)


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_chebyshev_and_chain(seed):
    f = random_field(seed)
    assert marcinkiewicz_norm(f, 1.5) <= lebesgue_norm(f, 1.5) * (1 + 1e-12)
    rep = embedding_chain_check(f, 1.0, 1.5, 2.0)
    assert rep.passed


def test_chain_rejects_bad_order():
    with pytest.raises(NormError):
        embedding_chain_check(random_field(0), 2.0, 1.5, 3.0)


def test_weak_norm_of_singular_profile():
    # |{|x|^-2 > lam}| is a ball of radius lam^-1/2, so the M^{3/2} norm is (4 pi / 3)^(2/3);
    # the nodes within 4h of the singularity are excluded
    g = Grid.cube(3, 1.0, 64)
    X = g.coords()
    r2 = np.maximum(sum(x * x for x in X), g.h**2)
    f = GridField(g, 1.0 / r2)
    val = marcinkiewicz_norm(f, 1.5, Annulus((0, 0, 0), 4 * g.h, 10.0))
    assert val == pytest.approx((4 * math.pi / 3) ** (2 / 3), rel=0.03)


def test_zero_field_warns():
    g = Grid.cube(2, 1.0, 8)
    with pytest.warns(ZeroFieldWarning):
        assert lorentz_norm(GridField(g, np.zeros(g.shape)), 2, 2) == 0.0


def test_morrey_theta_n_is_lebesgue():
    f = random_field(3)
    assert morrey_norm(f, 2.0, 2.0) == pytest.approx(lebesgue_norm(f, 2.0), rel=1e-12)


def test_morrey_constant_single_radius():
    # f = 1, q = 1, theta = 1: R^-1 |B_R| = pi R for an interior ball
    g = Grid((0, 0), (1, 1), (256, 256))
    f = GridField(g, np.ones(g.shape))
    val = morrey_norm(f, 1.0, 1.0, radii=[0.25], center_stride=1)
    assert val == pytest.approx(math.pi * 0.25, rel=2e-2)


def test_morrey_bracketed_scaling():
    # u(y) = f(R y) on the unit ball: [u] = R^(-theta/q) [f] with f = |x|^2 on B_R
    R, q, theta, N = 0.5, 2.0, 1.5, 64
    gR = Grid.cube(2, R, N)
    g1 = Grid.cube(2, 1.0, N)
    f = GridField.from_function(gR, lambda x, y: x * x + y * y)
    u = GridField.from_function(g1, lambda x, y: R**2 * (x * x + y * y))
    a = morrey_norm(f, q, theta, Ball((0, 0), R), variant="bracketed")
    b = morrey_norm(u, q, theta, Ball((0, 0), 1.0), variant="bracketed")
    assert b == pytest.approx(R ** (-theta / q) * a, rel=2e-2)


def test_lorentz_morrey_collapse():
    f = random_field(5)
    assert lorentz_morrey_norm(f, 1.5, 1.5, 2.0) == pytest.approx(lebesgue_norm(f, 1.5), rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_marcinkiewicz_morrey_below_morrey(seed):
    f = random_field(seed)
    assert marcinkiewicz_morrey_norm(f, 1.5, 1.0) <= morrey_norm(f, 1.5, 1.0) * (1 + 1e-12)


def test_lorentz_morrey_indicator_brute_force():
    g = Grid.cube(2, 1.0, 16)
    f = GridField.from_function(g, lambda x, y: (x > 0.2) * 1.0)
    t, q, theta = 1.5, 2.0, 1.0
    got = lorentz_morrey_norm(f, t, q, theta, radii=[0.5, 0.25], center_stride=1)
    best = 0.0
    X = g.coords()
    for r in (0.5, 0.25):
        for c in zip(X[0].ravel(), X[1].ravel()):
            inside = ((X[0] - c[0]) ** 2 + (X[1] - c[1]) ** 2 < r * r) & (X[0] > 0.2)
            m = inside.sum() * g.cell_volume
            best = max(best, (t / q) ** (1 / q) * m ** (1 / t) * r ** ((theta - 2) / t))
    assert got == pytest.approx(best, rel=1e-12)


def test_llogl_examples():
    g = Grid((0, 0), (1, 1), (64, 64))
    c = 3.0
    f = GridField(g, np.full(g.shape, c))
    assert llogl_norm(f, averaged=True) == pytest.approx(c * math.log(math.e + 1))
    X, _ = g.coords()
    half = GridField(g, (X < 0.5 - 1e-9) * 1.0)
    frac = half.values.mean()
    assert llogl_norm(half, averaged=True) == pytest.approx(frac * math.log(math.e + 1 / frac))


@pytest.mark.parametrize("seed", range(3))
def test_llogl_dominates_l1(seed):
    f = random_field(seed)
    assert llogl_norm(f) >= lebesgue_norm(f, 1.0)
    lam = llogl_luxemburg(f)
    x = f.values / lam
    assert np.sum(x * np.log(math.e + x)) * f.grid.cell_volume == pytest.approx(1.0, rel=1e-9)


def test_normspec_parsing():
    s = parse_normspec("lorentz:t=1.5,gamma=inf,averaged=1")
    assert s.family == "lorentz" and s.q == 1.5 and math.isinf(s.s) and s.averaged
    assert parse_normspec("llogl:theta=2").family == "llogltheta"
    for bad in ("nonsense", "morrey:q=2", "lorentz:q=x", "lorentz:foo=1", "morrey:q=0.5,theta=1"):
        with pytest.raises(NormError):
            parse_normspec(bad)
    f = random_field(1)
    assert evaluate(NormSpec("lebesgue", q=2.0), f, Box((0, 0), (1, 1))) == pytest.approx(
        lebesgue_norm(f, 2.0, Box((0, 0), (1, 1))))


def test_empty_region_rejected():
    f = random_field(1)
    with pytest.raises(GridError):
        lebesgue_norm(f, 2.0, Ball((0.01, 0.01), 1e-3))
