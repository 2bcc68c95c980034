"""Finite-difference solver for ``-div(omega g(|Du|)/|Du| Du) = mu``.

Discretization
--------------
Each grid cell carries ``2**n`` corner gradients: at corner ``s`` the
``j``-th component is the difference quotient along the cell edge parallel
to axis ``j`` that touches the corner.  The discrete energy

    E(u) = sum_cells sum_corners h**n / 2**n * omega_c * G(|D_s u|_eps) - h**n sum f u,

with ``|z|_eps = sqrt(|z|**2 + eps**2)``, is convex, and its
Euler-Lagrange equations are a conservative flux scheme whose
frozen-coefficient operator is a 7-point (5-point in 2D) symmetric
M-matrix.  For ``g(t) = t`` it is exactly the standard discrete Laplacian.

Iteration
---------
Kačanov (frozen-coefficient) steps give a descent direction for the
energy; an Armijo backtracking line search with contraction factor 0.7
makes the energy decrease monotonically.  Once the relative residual drops
below ``newton_switch`` the direction is replaced by an inexact Newton
step (matrix-free Hessian, conjugate gradients preconditioned by algebraic
multigrid on the Kačanov matrix).
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import (
    Ball,
    Grid,
    GridError,
    GridField,
    MeasureData,
    ball_offsets,
    discretize_measure,
    gradient,
    load_field,
    region_mask,
)
from .young import YoungFunction, estimate_indices

__all__ = [
    "OperatorSpec",
    "SolveResult",
    "SolaSequence",
    "SolverError",
    "solve_dirichlet",
    "solve_comparison",
    "sola_sequence",
    "truncate_measure",
    "energy",
    "boundary_values",
    "interior_mask",
]

_DIRECT_LIMIT = {1: 10**6, 2: 40_000, 3: 6_000}


class SolverError(RuntimeError):
    """Invalid operator specification or failed linear algebra."""


# ---------------------------------------------------------------------------
# specification and results


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """Operator ``a(x, z) = omega(x) g(|z|) z / |z|``.

    Parameters
    ----------
    modular : YoungFunction
        Supplies ``g``; must be nondecreasing.
    omega : float or GridField
        Coefficient with values in ``[c_low, c_high] ⊂ (0, inf)``.
    eps_reg : float, optional
        Degeneracy regularization; default ``1e-8`` times the boundary
        data scale over the domain size (``1e-8`` when that is zero).
    nu, L_bound : float, optional
        Ellipticity and growth constants; default to
        ``c_low min(1, i_g)`` and ``c_high (1 + max(1, s_g))``.
    """

    modular: YoungFunction
    omega: Union[float, GridField] = 1.0
    eps_reg: Optional[float] = None
    nu: Optional[float] = None
    L_bound: Optional[float] = None

    def __post_init__(self):
        t = np.logspace(-6, 6, 1201)
        gv = self.modular.g(t)
        if not np.all(np.isfinite(gv)) or np.any(np.diff(gv) < -1e-12 * np.abs(gv[1:])) or np.any(gv < 0):
            raise SolverError("g must be nonnegative and nondecreasing")
        w = self.omega.values if isinstance(self.omega, GridField) else np.asarray(float(self.omega))
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise SolverError("omega must take values in (0, inf)")
        if self.eps_reg is not None and not self.eps_reg > 0:
            raise SolverError("eps_reg must be positive")
        lo, hi = float(np.min(w)), float(np.max(w))
        if self.nu is None or self.L_bound is None:
            ig = estimate_indices(self.modular, "g")
            object.__setattr__(self, "nu", self.nu if self.nu is not None else lo * min(1.0, ig.i_lower))
            object.__setattr__(
                self, "L_bound", self.L_bound if self.L_bound is not None else hi * (1.0 + max(1.0, ig.s_upper))
            )
        if not (0 < self.nu <= self.L_bound):
            raise SolverError("need 0 < nu <= L_bound")
        object.__setattr__(self, "c_low", lo)
        object.__setattr__(self, "c_high", hi)


@dataclass(frozen=True, eq=False)
class SolveResult:
    """A discrete solution.

    Attributes
    ----------
    u, Du : GridField
    residual_norm : float
        Discrete ``L^2`` norm of the strong residual on the unknown nodes.
    iterations : int
    converged : bool
    tolerance : float
        Absolute residual tolerance used.
    energy_history : tuple of float
    window : tuple of slice or None
        Location of ``u.grid`` inside the parent grid (comparison solves).
    unknown : ndarray of bool
        Nodes solved for.
    info : dict
        Wall time, linear iterations, eps_reg and method counters.
    """

    u: GridField
    Du: GridField
    residual_norm: float
    iterations: int
    converged: bool
    tolerance: float = math.nan
    energy_history: tuple = ()
    window: Optional[tuple] = None
    unknown: Optional[np.ndarray] = field(default=None, repr=False)
    info: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.u.grid


@dataclass
class SolaSequence:
    """Solutions for increasing truncation levels of the same measure."""

    truncation_levels: list
    members: list
    data: list
    w11_increments: list
    g_increments: list

    @property
    def increments_decreasing(self) -> bool:
        """True when the last W^{1,1} increment is below the first one."""
        inc = self.w11_increments
        return len(inc) < 2 or inc[-1] <= inc[0]


# ---------------------------------------------------------------------------
# helpers


def interior_mask(grid: Grid) -> np.ndarray:
    m = np.zeros(grid.shape, dtype=bool)
    m[tuple(slice(1, -1) for _ in grid.shape)] = True
    return m


def boundary_values(grid: Grid, boundary) -> np.ndarray:
    """Nodal values of boundary data.

    ``boundary`` may be ``None``/``"zero"``, ``"affine:a,b[,c][,d]"`` (``n``
    slopes and an optional constant), a callable on nodal coordinates, a
    :class:`GridField` on the same grid, an array, or a path to a field file.
    """
    if boundary is None:
        return np.zeros(grid.shape)
    if isinstance(boundary, GridField):
        if not boundary.grid.same_as(grid):
            raise GridError("boundary field lives on a different grid")
        return np.array(boundary.values)
    if isinstance(boundary, np.ndarray):
        if boundary.shape != grid.shape:
            raise GridError("boundary array has the wrong shape")
        return np.array(boundary, float)
    if callable(boundary):
        return np.broadcast_to(boundary(*grid.coords()), grid.shape).astype(float)
    if isinstance(boundary, str):
        text = boundary.strip()
        if text == "zero":
            return np.zeros(grid.shape)
        if text.startswith("affine:"):
            try:
                coef = [float(x) for x in text[7:].split(",")]
            except ValueError:
                raise GridError(f"malformed boundary descriptor {text!r}") from None
            if len(coef) not in (grid.n, grid.n + 1):
                raise GridError(f"affine boundary needs {grid.n} slopes and an optional constant")
            X = grid.coords()
            out = sum(c * x for c, x in zip(coef, X)) + (coef[grid.n] if len(coef) > grid.n else 0.0)
            return np.broadcast_to(out, grid.shape).astype(float)
        return boundary_values(grid, load_field(text))
    raise GridError(f"unsupported boundary specification {boundary!r}")


def _cell_omega(grid: Grid, omega) -> np.ndarray:
    cells = grid.cells_per_axis
    if not isinstance(omega, GridField):
        return np.full(cells, float(omega))
    if not omega.grid.same_as(grid):
        raise GridError("omega lives on a different grid")
    inv = np.zeros(cells)
    for s in itertools.product((0, 1), repeat=grid.n):
        inv += 1.0 / omega.values[tuple(slice(si, si + c) for si, c in zip(s, cells))]
    return 2**grid.n / inv


class _Discretization:
    def __init__(self, grid: Grid, spec: OperatorSpec, unknown: np.ndarray, eps: float):
        self.grid = grid
        self.spec = spec
        self.G = spec.modular
        self.n = grid.n
        self.h = grid.h
        self.cells = grid.cells_per_axis
        self.unknown = unknown
        self.U = np.flatnonzero(unknown.ravel())
        self.eps = eps
        self.omega_c = _cell_omega(grid, spec.omega)
        self.corners = list(itertools.product((0, 1), repeat=self.n))
        self.cw = self.h**self.n / 2**self.n

    # corner gradients -------------------------------------------------
    def _slice(self, s, j):
        return tuple(slice(0, self.cells[k]) if k == j else slice(s[k], s[k] + self.cells[k]) for k in range(self.n))

    def corner_parts(self, u: np.ndarray):
        """Yield ``(s, [a_j])`` with ``a_j`` the gradient components at corner ``s``."""
        D = [np.diff(u, axis=j) / self.h for j in range(self.n)]
        for s in self.corners:
            yield s, [D[j][self._slice(s, j)] for j in range(self.n)]

    def _teps(self, a):
        return np.sqrt(sum(x * x for x in a) + self.eps**2)

    def energy(self, u: np.ndarray, f: np.ndarray) -> float:
        e = 0.0
        for _, a in self.corner_parts(u):
            e += float(np.sum(self.omega_c * self.G.G(self._teps(a))))
        return e * self.cw - self.grid.cell_volume * float(np.sum(f.ravel()[self.U] * u.ravel()[self.U]))

    def _accumulate(self, per_corner):
        """Nodal divergence of edge fluxes given per-corner components ``c_j``."""
        F = [np.zeros(tuple(c if k == j else c + 1 for k, c in enumerate(self.cells))) for j in range(self.n)]
        for s, comps in per_corner:
            for j in range(self.n):
                F[j][self._slice(s, j)] += comps[j]
        out = np.zeros(self.grid.shape)
        for j in range(self.n):
            lo = [slice(None)] * self.n
            hi = [slice(None)] * self.n
            lo[j] = slice(1, None)
            hi[j] = slice(0, -1)
            out[tuple(lo)] += F[j]
            out[tuple(hi)] -= F[j]
        return out * (self.cw / self.h)

    def kappa(self, t):
        return self.omega_c * self.G.g(t) / t

    def grad_energy(self, u: np.ndarray, f: np.ndarray) -> np.ndarray:
        """``dE/du`` restricted to the unknowns, as a full array (zeros elsewhere)."""

        def parts():
            for s, a in self.corner_parts(u):
                k = self.kappa(self._teps(a))
                yield s, [k * x for x in a]

        g = self._accumulate(parts())
        g -= self.grid.cell_volume * f
        g[~self.unknown] = 0.0
        return g

    def residual_norm(self, u, f) -> float:
        r = self.grad_energy(u, f).ravel()[self.U] / self.grid.cell_volume
        return float(math.sqrt(self.grid.cell_volume * np.sum(r * r)))

    # linear operators -------------------------------------------------
    def kacanov_matrix(self, u: np.ndarray) -> sp.csr_matrix:
        n, cells = self.n, self.cells
        W = [np.zeros(tuple(c if k == j else c + 1 for k, c in enumerate(cells))) for j in range(n)]
        fac = self.h ** (n - 2) / 2**n
        for s, a in self.corner_parts(u):
            k = self.kappa(self._teps(a)) * fac
            for j in range(n):
                W[j][self._slice(s, j)] += k
        shape = self.grid.shape
        N = int(np.prod(shape))
        diag = np.zeros(N)
        offs, bands = [], []
        for j in range(n):
            wpad = np.zeros(shape)
            sl = [slice(None)] * n
            sl[j] = slice(0, cells[j])
            wpad[tuple(sl)] = W[j]
            w = wpad.ravel()
            st = int(np.prod(shape[j + 1 :]))
            diag += w
            diag[st:] += w[: N - st]
            offs += [st, -st]
            bands += [-w[: N - st], -w[: N - st]]
        A = sp.diags([diag] + bands, [0] + offs, shape=(N, N), format="csr")
        return A

    def hessian_operator(self, u: np.ndarray):
        """Matrix-free Hessian of the energy restricted to the unknowns."""
        data = []
        for s, a in self.corner_parts(u):
            t = self._teps(a)
            k = self.kappa(t)
            beta = self.omega_c * self.G.dg(t) / t**2 - k / t**2
            data.append((s, a, k, beta))
        U = self.U
        shape = self.grid.shape
        N = int(np.prod(shape))

        def matvec(x):
            v = np.zeros(N)
            v[U] = np.ravel(x)
            v = v.reshape(shape)
            D = [np.diff(v, axis=j) / self.h for j in range(self.n)]

            def parts():
                for s, a, k, beta in data:
                    b = [D[j][self._slice(s, j)] for j in range(self.n)]
                    ab = sum(x * y for x, y in zip(a, b))
                    yield s, [k * b[j] + beta * ab * a[j] for j in range(self.n)]

            return self._accumulate(parts()).ravel()[U]

        return spla.LinearOperator((len(U), len(U)), matvec=matvec, dtype=float)


def _restricted(A: sp.csr_matrix, U: np.ndarray):
    AU = A[U]
    return AU[:, U].tocsr(), AU


class _LinearSolver:
    """Direct factorization for small systems, AMG-preconditioned CG otherwise."""

    def __init__(self, A: sp.csr_matrix, n: int = 3):
        self.A = A
        self.direct = A.shape[0] <= _DIRECT_LIMIT.get(n, 6_000)
        if self.direct:
            self.lu = spla.splu(A.tocsc())
        else:
            import pyamg

            self.ml = pyamg.smoothed_aggregation_solver(A, symmetry="symmetric")
        self.iterations = 0

    def solve(self, b: np.ndarray, rtol: float, x0=None) -> np.ndarray:
        if self.direct:
            return self.lu.solve(b)
        res = []
        x = self.ml.solve(b, x0=x0, tol=rtol, accel="cg", maxiter=500, residuals=res)
        self.iterations += len(res)
        return x

    def preconditioner(self):
        if self.direct:
            return spla.LinearOperator(self.A.shape, matvec=self.lu.solve, dtype=float)
        return self.ml.aspreconditioner(cycle="V")


# ---------------------------------------------------------------------------
# main solves


def _default_eps(grid: Grid, bvals: np.ndarray) -> float:
    scale = float(np.ptp(bvals)) / max(grid.extent) if bvals.size else 0.0
    return 1e-8 * scale if scale > 0 else 1e-8


def energy(spec: OperatorSpec, u: GridField, rhs: Optional[GridField] = None, unknown=None) -> float:
    """Discrete energy of ``u`` (boundary nodes are fixed, so no boundary term)."""
    grid = u.grid
    unk = interior_mask(grid) if unknown is None else unknown
    f = np.zeros(grid.shape) if rhs is None else rhs.values
    eps = spec.eps_reg if spec.eps_reg is not None else _default_eps(grid, u.values[~unk])
    return _Discretization(grid, spec, unk, eps).energy(u.values, f)


def solve_dirichlet(
    spec: OperatorSpec,
    rhs: Optional[GridField],
    boundary=None,
    grid: Optional[Grid] = None,
    *,
    tol: float = 1e-10,
    max_iter: int = 200,
    u0: Optional[np.ndarray] = None,
    unknown: Optional[np.ndarray] = None,
    newton: bool = True,
    newton_switch: float = 1e-1,
) -> SolveResult:
    """Solve the Dirichlet problem with bounded right-hand side.

    Parameters
    ----------
    spec : OperatorSpec
    rhs : GridField or None
        Bounded data ``f``; ``None`` means zero (then ``grid`` is required).
    boundary
        See :func:`boundary_values`; values are imposed on all nodes outside
        ``unknown``.
    grid : Grid, optional
    tol : float
        Relative tolerance; the absolute target is ``tol`` times the larger
        of ``||f||`` and the residuals of the initial guess and of the cold start
        (zero on the unknowns), in discrete ``L^2`` norms.
    max_iter : int
    u0 : ndarray, optional
        Initial values on the unknown nodes.
    unknown : ndarray of bool, optional
        Nodes to solve for; default is every interior node of the box.
    newton : bool
        Allow the Newton tail.
    newton_switch : float
        Relative residual below which Newton steps are used.

    Returns
    -------
    SolveResult
        ``converged`` is False when the budget is exhausted.
    """
    t0 = time.perf_counter()
    if grid is None:
        if rhs is None:
            raise GridError("a grid is required when rhs is None")
        grid = rhs.grid
    f = np.zeros(grid.shape) if rhs is None else np.asarray(rhs.values, float)
    if rhs is not None and not rhs.grid.same_as(grid):
        raise GridError("rhs lives on a different grid")
    unk = interior_mask(grid) if unknown is None else np.asarray(unknown, bool)
    if not unk.any():
        raise GridError("no unknown nodes")
    bvals = boundary_values(grid, boundary)
    u = bvals.copy()
    if u0 is not None:
        u[unk] = np.asarray(u0)[unk] if np.shape(u0) == grid.shape else np.asarray(u0)
    else:
        u[unk] = 0.0
    eps = spec.eps_reg if spec.eps_reg is not None else _default_eps(grid, bvals[~unk])
    disc = _Discretization(grid, spec, unk, eps)
    U = disc.U
    vol = grid.cell_volume
    fU = f.ravel()[U]
    fnorm = math.sqrt(vol * float(np.sum(fU * fU)))
    res = disc.residual_norm(u, f)
    # the scale is the residual of the cold start, so warm starts share the target
    cold = res
    if u0 is not None:
        c = bvals.copy()
        c[unk] = 0.0
        cold = disc.residual_norm(c, f)
    target = tol * max(fnorm, res, cold)
    E = disc.energy(u, f)
    history = [E]
    info = {"eps_reg": eps, "kacanov_steps": 0, "newton_steps": 0, "linear_iterations": 0, "line_search_cuts": 0}
    linear = spec.modular.is_linear
    scale = max(fnorm, res, cold, 1e-300)
    it = 0
    lin = None
    while res > target and it < max_iter:
        it += 1
        rel = res / scale
        use_newton = newton and not linear and rel <= newton_switch
        A = disc.kacanov_matrix(u)
        AUU, AU = _restricted(A, U)
        if lin is None or not linear:
            lin = _LinearSolver(AUU, grid.n)
        grad = disc.grad_energy(u, f).ravel()[U]
        if use_newton:
            H = disc.hessian_operator(u)
            d, _ = spla.cg(H, -grad, rtol=min(1e-2, max(1e-6, rel)), maxiter=200, M=lin.preconditioner())
            info["newton_steps"] += 1
        else:
            u_fixed = u.ravel().copy()
            u_fixed[U] = 0.0
            b = vol * fU - AU @ u_fixed
            rtol = 1e-13 if linear else max(1e-13, min(1e-3, 1e-2 * rel))
            x = lin.solve(b, rtol, x0=u.ravel()[U])
            d = x - u.ravel()[U]
            info["kacanov_steps"] += 1
        info["linear_iterations"] = getattr(lin, "iterations", 0)
        slope = float(grad @ d)
        if slope >= 0:
            # not a descent direction (inexact solve); use a scaled gradient step
            d = -grad / max(np.abs(AUU.diagonal()).max(), 1e-300)
            slope = float(grad @ d)
        alpha = 1.0
        flat = u.ravel()
        base = flat[U].copy()
        while True:
            flat[U] = base + alpha * d
            En = disc.energy(u, f)
            if En <= E + 1e-4 * alpha * slope or alpha < 1e-10:
                break
            alpha *= 0.7
            info["line_search_cuts"] += 1
        if En > E:
            flat[U] = base
            break
        E = En
        history.append(E)
        res = disc.residual_norm(u, f)
    uf = GridField(grid, u)
    info["wall_time"] = time.perf_counter() - t0
    return SolveResult(
        u=uf,
        Du=gradient(uf),
        residual_norm=res,
        iterations=it,
        converged=bool(res <= target),
        tolerance=target,
        energy_history=tuple(history),
        unknown=unk,
        info=info,
    )


# ---------------------------------------------------------------------------
# comparison maps


def _window_for_ball(grid: Grid, ball: Ball):
    h = grid.h
    lo = [int(math.floor((c - ball.radius - o) / h)) - 1 for c, o in zip(ball.center, grid.origin)]
    hi = [int(math.ceil((c + ball.radius - o) / h)) + 2 for c, o in zip(ball.center, grid.origin)]
    if any(a < 0 for a in lo) or any(b > s for b, s in zip(hi, grid.shape)):
        raise GridError("comparison ball (with one boundary layer) must lie inside the grid box")
    return tuple(slice(a, b) for a, b in zip(lo, hi))


def solve_comparison(
    spec: OperatorSpec,
    u: SolveResult,
    ball: Ball,
    *,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> SolveResult:
    """Homogeneous solve on a ball with the trace of ``u``.

    The unknowns are the nodes strictly inside ``ball``; every other node
    of the surrounding window keeps the value of ``u`` (the first nodal
    layer outside the ball acts as the Dirichlet trace).

    Returns
    -------
    SolveResult
        On the window subgrid; ``window`` locates it in ``u.grid``.
    """
    grid = u.grid
    if 2.0 * ball.radius < 4.0 * grid.h:
        raise GridError("comparison ball must be at least 4 cells across")
    win = _window_for_ball(grid, ball)
    sub = grid.subgrid(win)
    bvals = u.u.values[win]
    unk = region_mask(sub, ball)
    omega = spec.omega
    if isinstance(omega, GridField):
        omega = omega.restrict(win)
    eps = spec.eps_reg if spec.eps_reg is not None else u.info.get("eps_reg")
    sub_spec = OperatorSpec(spec.modular, omega, eps, spec.nu, spec.L_bound)
    res = solve_dirichlet(sub_spec, None, bvals, sub, tol=tol, max_iter=max_iter, unknown=unk, u0=bvals)
    return SolveResult(
        res.u, res.Du, res.residual_norm, res.iterations, res.converged, res.tolerance,
        res.energy_history, win, unk, res.info,
    )


# ---------------------------------------------------------------------------
# SOLA


def truncate_measure(mu: MeasureData, grid: Grid, level: float) -> GridField:
    """Bounded approximant ``mu_k`` with ``|mu_k| <= level``.

    Each atom is spread uniformly over the smallest nodal ball around its
    node on which the resulting density does not exceed ``level`` (this
    conserves its mass), the density part is added, and the sum is clamped
    at ``level`` preserving sign.  Hence ``|mu_k|(Omega) <= |mu|(Omega)``
    and ``mu_k -> mu`` weakly as ``level -> inf``.
    """
    if not level > 0:
        raise ValueError("truncation level must be positive")
    vol = grid.cell_volume
    out = np.zeros(grid.shape)
    if mu.density is not None:
        out += discretize_measure(MeasureData((), mu.density), grid).values
    for loc, mass in mu.atoms:
        idx = np.array(grid.node_index(loc))
        need = abs(mass) / (level * vol)
        if need <= 1.0:
            out[tuple(idx)] += mass / vol
            continue
        r = grid.h * (((3.0 * need) / (4.0 * math.pi)) ** (1.0 / grid.n) if grid.n == 3 else math.sqrt(need / math.pi))
        r = max(r, grid.h)
        while True:
            offs = ball_offsets(r, grid.h, grid.n)
            pts = idx + offs
            ok = np.all((pts >= 0) & (pts < np.array(grid.shape)), axis=1)
            if ok.sum() >= need:
                break
            r *= 1.05
        # shrink to the smallest admissible discrete ball
        while r > grid.h:
            r2 = r * 0.98
            offs2 = ball_offsets(r2, grid.h, grid.n)
            pts2 = idx + offs2
            ok2 = np.all((pts2 >= 0) & (pts2 < np.array(grid.shape)), axis=1)
            if ok2.sum() < need:
                break
            r, pts, ok = r2, pts2, ok2
        sel = pts[ok]
        np.add.at(out, tuple(sel.T), mass / (len(sel) * vol))
    np.clip(out, -level, level, out=out)
    return GridField(grid, out)


def _l1(grid: Grid, arr: np.ndarray) -> float:
    return float(np.sum(arr)) * grid.cell_volume


def sola_sequence(
    spec: OperatorSpec,
    mu: MeasureData,
    boundary,
    grid: Grid,
    levels: Sequence[float],
    *,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> SolaSequence:
    """Solve for a sequence of truncation levels and record increments.

    Raises
    ------
    SolverError
        If a member does not converge; the partial sequence is attached as
        ``err.partial``.
    """
    levels = [float(k) for k in levels]
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("truncation levels must increase")
    tv = mu.total_variation()
    members, data, w11, ginc = [], [], [], []
    prev = None
    for k in levels:
        fk = truncate_measure(mu, grid, k)
        assert _l1(grid, np.abs(fk.values)) <= tv * (1 + 1e-12) + 1e-12
        res = solve_dirichlet(
            spec, fk, boundary, grid, tol=tol, max_iter=max_iter, u0=None if prev is None else prev.u.values
        )
        if not res.converged:
            err = SolverError(f"SOLA member at level {k:g} did not converge (residual {res.residual_norm:.3g})")
            err.partial = SolaSequence(levels[: len(members)], members, data, w11, ginc)
            raise err
        if prev is not None:
            dDu = np.sqrt(np.sum((res.Du.values - prev.Du.values) ** 2, axis=0))
            w11.append(_l1(grid, dDu))
            g1 = spec.modular.g(res.Du.magnitude().values)
            g0 = spec.modular.g(prev.Du.magnitude().values)
            ginc.append(_l1(grid, np.abs(g1 - g0)))
        members.append(res)
        data.append(fk)
        prev = res
    return SolaSequence(levels, members, data, w11, ginc)
