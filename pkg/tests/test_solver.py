import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orliczlab.grid import Annulus, Ball, Grid, GridError, GridField, MeasureData, integrate, region_mask
from orliczlab.norms import lebesgue_norm
from orliczlab.solver import (
    OperatorSpec,
    SolverError,
    _Discretization,
    energy,
    interior_mask,
    sola_sequence,
    solve_comparison,
    solve_dirichlet,
    truncate_measure,
)
from orliczlab.young import build_model, plaplace_normalized

LAPLACE = OperatorSpec(plaplace_normalized(2))


def test_affine_trace_reproduced():
    g = Grid.cube(3, 1.0, 12)
    res = solve_dirichlet(LAPLACE, None, "affine:3,2,0", g)
    assert res.converged
    D = res.Du.values
    assert np.allclose(D[0], 3, atol=1e-8) and np.allclose(D[1], 2, atol=1e-8) and np.allclose(D[2], 0, atol=1e-8)


def test_quadratic_manufactured_2d():
    # -Δ|x|^2 = -4; the five-point Laplacian is exact on quadratics
    g = Grid.cube(2, 1 / math.sqrt(2), 48)
    rhs = GridField(g, np.full(g.shape, -4.0))
    res = solve_dirichlet(LAPLACE, rhs, lambda x, y: x * x + y * y, g)
    X, Y = g.coords()
    assert res.converged
    assert np.max(np.abs(res.u.values - (X * X + Y * Y))) < 1e-8


def test_second_order_convergence():
    errs = []
    for N in (16, 32, 64):
        g = Grid((0, 0), (1, 1), (N, N))
        X, Y = g.coords()
        exact = np.sin(math.pi * X) * np.sin(math.pi * Y)
        res = solve_dirichlet(LAPLACE, GridField(g, 2 * math.pi**2 * exact), None, g)
        errs.append(np.max(np.abs(res.u.values - exact)))
    rates = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(rates) > 1.9


@pytest.mark.parametrize("model", [plaplace_normalized(3), plaplace_normalized(1.5), build_model("zygmund", p=2, alpha=1)])
def test_constant_gradient_null_case(model):
    g = Grid.cube(2, 1.0, 16)
    res = solve_dirichlet(OperatorSpec(model), None, "affine:1,0", g)
    X, _ = g.coords()
    assert res.converged
    assert np.max(np.abs(res.u.values - X)) < 1e-8


@given(st.integers(0, 10_000))
@settings(max_examples=10, deadline=None)
def test_discrete_maximum_principle(seed):
    g = Grid.cube(2, 1.0, 16)
    b = np.random.default_rng(seed).normal(size=g.shape)
    res = solve_dirichlet(LAPLACE, None, b, g)
    inner = interior_mask(g)
    lo, hi = b[~inner].min(), b[~inner].max()
    assert res.u.values[inner].min() >= lo - 1e-12
    assert res.u.values[inner].max() <= hi + 1e-12


def test_flux_conservation_nonlinear():
    g = Grid.cube(2, 1.0, 24)
    spec = OperatorSpec(plaplace_normalized(3))
    res = solve_dirichlet(spec, None, lambda x, y: np.sin(2 * x) * np.cosh(y), g)
    disc = _Discretization(g, spec, res.unknown, res.info["eps_reg"])
    r = disc.grad_energy(res.u.values.copy(), np.zeros(g.shape))
    # the net flux out of a nodal box is the sum of the nodal residuals inside it
    box = np.zeros(g.shape, bool)
    box[5:18, 3:20] = True
    assert abs(r[box].sum()) <= res.tolerance * math.sqrt(box.sum()) / g.h


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_homogeneity_scaling(p):
    g = Grid.cube(2, 1.0, 24)
    spec = OperatorSpec(plaplace_normalized(p))
    X, Y = g.coords()
    f = np.exp(-4 * (X * X + Y * Y))
    bnd = X + 0.3 * Y * Y
    lam = 3.7
    a = solve_dirichlet(spec, GridField(g, f), bnd, g, tol=1e-13)
    b = solve_dirichlet(spec, GridField(g, lam ** (p - 1) * f), lam * bnd, g, tol=1e-13)
    scale = np.max(np.abs(a.u.values))
    assert np.max(np.abs(b.u.values - lam * a.u.values)) <= 1e-8 * lam * scale


def test_energy_monotone():
    g = Grid.cube(2, 1.0, 24)
    spec = OperatorSpec(plaplace_normalized(3))
    rhs = truncate_measure(MeasureData.dirac((0.0, 0.0)), g, 100.0)
    res = solve_dirichlet(spec, rhs, None, g)
    assert res.converged
    E = np.array(res.energy_history)
    assert np.all(np.diff(E) <= 1e-12 * np.abs(E[:-1]))
    assert energy(spec, res.u, rhs) == pytest.approx(E[-1], rel=1e-12)


def test_eps_reg_stability():
    g = Grid.cube(2, 1.0, 24)
    model = plaplace_normalized(3)
    rhs = truncate_measure(MeasureData.dirac((0.0, 0.0)), g, 100.0)
    a = solve_dirichlet(OperatorSpec(model, eps_reg=1e-8), rhs, None, g)
    b = solve_dirichlet(OperatorSpec(model, eps_reg=1e-6), rhs, None, g)
    assert np.max(np.abs(a.u.values - b.u.values)) < 1e-4 * np.max(np.abs(a.u.values))


def test_harmonic_omega_accepted():
    g = Grid.cube(2, 1.0, 16)
    X, _ = g.coords()
    om = GridField(g, np.where(X > 0, 10.0, 1.0))
    res = solve_dirichlet(OperatorSpec(plaplace_normalized(2), om), None, "affine:0,1", g)
    _, Y = g.coords()
    assert np.max(np.abs(res.u.values - Y)) < 1e-8


def test_operator_validation():
    with pytest.raises(SolverError):
        OperatorSpec(SimpleNamespace(g=lambda t: 2 + np.sin(t)))
    with pytest.raises(SolverError):
        OperatorSpec(plaplace_normalized(2), omega=0.0)
    with pytest.raises(SolverError):
        OperatorSpec(plaplace_normalized(2), eps_reg=-1.0)
    spec = OperatorSpec(plaplace_normalized(3))
    assert 0 < spec.nu <= spec.L_bound


def test_iteration_budget_reported():
    g = Grid.cube(2, 1.0, 16)
    res = solve_dirichlet(OperatorSpec(plaplace_normalized(3)), None, lambda x, y: np.sin(3 * x) * y, g, max_iter=1)
    assert not res.converged and res.iterations == 1


def test_comparison_reproduces_homogeneous_solution():
    g = Grid.cube(2, 1.0, 32)
    spec = OperatorSpec(plaplace_normalized(3))
    u = solve_dirichlet(spec, None, lambda x, y: x * x - y * y + 0.5 * x, g, tol=1e-12)
    v = solve_comparison(spec, u, Ball((0.1, 0.0), 0.5), tol=1e-12)
    assert np.max(np.abs(v.u.values - u.u.values[v.window])) < 1e-9


def test_comparison_locality():
    g = Grid.cube(2, 1.0, 48)
    spec = OperatorSpec(plaplace_normalized(2))
    rhs = truncate_measure(MeasureData.dirac((0.6, 0.6)), g, 1e3)
    u = solve_dirichlet(spec, rhs, None, g, tol=1e-12)
    v = solve_comparison(spec, u, Ball((-0.3, -0.3), 0.3), tol=1e-12)
    diff = np.abs(v.u.values - u.u.values[v.window])
    assert diff.max() <= 10 * max(u.tolerance, v.tolerance)


def test_comparison_ball_too_small():
    g = Grid.cube(2, 1.0, 16)
    u = solve_dirichlet(LAPLACE, None, None, g)
    with pytest.raises(GridError):
        solve_comparison(LAPLACE, u, Ball((0.0, 0.0), g.h))


@given(st.floats(1.0, 1e4), st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
@settings(max_examples=30, deadline=None)
def test_truncation_properties(level, x, y):
    g = Grid.cube(2, 1.0, 32)
    mu = MeasureData(atoms=(((x, y), 1.0), ((0.0, 0.0), -0.5)))
    fk = truncate_measure(mu, g, level)
    assert np.max(np.abs(fk.values)) <= level * (1 + 1e-12)
    assert np.sum(np.abs(fk.values)) * g.cell_volume <= mu.total_variation() * (1 + 1e-12)


def test_truncation_conserves_mass_when_room():
    g = Grid.cube(3, 1.0, 16)
    fk = truncate_measure(MeasureData.dirac((0.0, 0.0, 0.0)), g, 100.0)
    assert integrate(fk) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        truncate_measure(MeasureData.dirac((0.0, 0.0, 0.0)), g, 0.0)


def test_sola_trivial_sequences():
    g = Grid.cube(2, 1.0, 16)
    dens = GridField(g, 0.5 + 0.1 * g.coords()[0])
    seq = sola_sequence(LAPLACE, MeasureData(density=dens), None, g, [10.0, 100.0])
    assert seq.w11_increments[0] < 1e-12 and seq.g_increments[0] < 1e-12
    seq0 = sola_sequence(LAPLACE, MeasureData(), "affine:1,1", g, [10.0, 100.0])
    assert seq0.w11_increments == [0.0] or seq0.w11_increments[0] < 1e-12
    with pytest.raises(ValueError):
        sola_sequence(LAPLACE, MeasureData(), None, g, [100.0, 10.0])


def test_sola_dirac_annulus_l1_stabilizes():
    g = Grid.cube(3, 1.0, 32)
    seq = sola_sequence(LAPLACE, MeasureData.dirac((0.0, 0.0, 0.0)), None, g, [1e2, 1e3, 1e4])
    ann = Annulus((0, 0, 0), 0.25, 0.75)
    l1 = [lebesgue_norm(m.Du, 1.0, ann) for m in seq.members]
    assert abs(l1[-1] - l1[-2]) <= 0.10 * l1[-1]
    assert seq.increments_decreasing
