"""Solved problem instances shared by the checks.

Instances are cached per parameter tuple so that a suite touching the same
problem from several checks solves it once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from ..grid import Ball, Grid, GridField, MeasureData, gradient
from ..solver import OperatorSpec, SolveResult, sola_sequence, solve_dirichlet, truncate_measure
from ..young import YoungFunction, build_model, parse_descriptor, plaplace_normalized

__all__ = [
    "Instance",
    "dirac_instance",
    "density_instance",
    "homogeneous_instance",
    "dirac_sola",
    "build_instance",
    "rescale",
    "clear_cache",
    "HOMOGENEOUS_BOUNDARY",
]

_CACHE: dict = {}


def clear_cache() -> None:
    _CACHE.clear()


def HOMOGENEOUS_BOUNDARY(x, y, *rest):
    """Harmonic trace ``x + (x**2 - y**2) / 2`` used by the homogeneous fixtures."""
    return x + 0.5 * (x * x - y * y)


@dataclass(frozen=True, eq=False)
class Instance:
    """A solved Dirichlet problem together with its data.

    Attributes
    ----------
    name : str
    kind : {"dirac", "density", "homogeneous"}
    spec : OperatorSpec
    measure : MeasureData or None
        The measure the instance represents (``None`` for zero data).
    data : GridField
        Bounded right-hand side actually solved (``mu_k`` or the density).
    solution : SolveResult
    level : float or None
        Truncation level for atomic measures.
    scale : float
        Homogeneity factor applied to the base problem.
    """

    name: str
    kind: str
    spec: OperatorSpec
    measure: Optional[MeasureData]
    data: GridField
    boundary: object
    solution: SolveResult
    level: Optional[float] = None
    scale: float = 1.0
    params: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.solution.grid

    @property
    def u(self) -> GridField:
        return self.solution.u

    @property
    def Du(self) -> GridField:
        return self.solution.Du

    @cached_property
    def grad_norm(self) -> GridField:
        return self.Du.magnitude()

    @cached_property
    def g_grad(self) -> GridField:
        return self.grad_norm.map(self.spec.modular.g)

    @cached_property
    def abs_data(self) -> GridField:
        return self.data.map(np.abs)

    @property
    def has_atoms(self) -> bool:
        return self.measure is not None and bool(self.measure.atoms)

    @property
    def is_homogeneous(self) -> bool:
        return not np.any(self.data.values)

    def label(self) -> str:
        return f"{self.name}@{self.grid.cells_per_axis[0]}"


def _model(model) -> YoungFunction:
    if isinstance(model, YoungFunction):
        return model
    return parse_descriptor(str(model))


def _power_exponent(model: YoungFunction) -> float:
    if model.kind != "power":
        raise ValueError("homogeneity rescaling is exact only for power models")
    return float(model.params["p"])


def _solve(spec, data, boundary, grid, tol):
    res = solve_dirichlet(spec, data, boundary, grid, tol=tol)
    if not res.converged:
        raise RuntimeError(f"instance solve did not converge (residual {res.residual_norm:.3g})")
    return res


def dirac_instance(
    cells: int = 64,
    level: float = 100.0,
    p: float = 2.0,
    scale: float = 1.0,
    n: int = 3,
    tol: float = 1e-10,
) -> Instance:
    """Unit Dirac at the origin of ``[-1, 1]**n`` with zero boundary values.

    The bounded data is the truncation of the atom at ``level``; under
    ``scale = lam`` the data is multiplied by ``lam**(p-1)`` (the solution
    then scales by ``lam``).
    """
    key = ("dirac", cells, float(level), float(p), float(scale), n, tol)
    if key not in _CACHE:
        grid = Grid.cube(n, 1.0, cells)
        model = plaplace_normalized(p)
        spec = OperatorSpec(model)
        mu = MeasureData.dirac((0.0,) * n, 1.0)
        base = truncate_measure(mu, grid, level)
        data = GridField(grid, base.values * scale ** (p - 1))
        sol = _solve(spec, data, "zero", grid, tol)
        _CACHE[key] = Instance(
            f"dirac-p{p:g}", "dirac", spec, mu, data, "zero", sol, level, scale,
            {"cells": cells, "level": level, "p": p},
        )
    return _CACHE[key]


def _gaussian(grid: Grid, sigma: float) -> np.ndarray:
    r2 = sum(x * x for x in grid.coords())
    return np.exp(-0.5 * r2 / sigma**2) / (2 * math.pi * sigma**2) ** (grid.n / 2)


def density_instance(
    cells: int = 64,
    sigma: float = 0.15,
    p: float = 2.0,
    scale: float = 1.0,
    n: int = 3,
    tol: float = 1e-10,
) -> Instance:
    """Unit-mass Gaussian density of width ``sigma`` at the origin, zero boundary."""
    key = ("density", cells, float(sigma), float(p), float(scale), n, tol)
    if key not in _CACHE:
        grid = Grid.cube(n, 1.0, cells)
        spec = OperatorSpec(plaplace_normalized(p))
        dens = GridField(grid, _gaussian(grid, sigma))
        mu = MeasureData(density=dens)
        data = GridField(grid, dens.values * scale ** (p - 1))
        sol = _solve(spec, data, "zero", grid, tol)
        _CACHE[key] = Instance(
            f"density-p{p:g}", "density", spec, mu, data, "zero", sol, None, scale,
            {"cells": cells, "sigma": sigma, "p": p},
        )
    return _CACHE[key]


def homogeneous_instance(
    model="power:p=2",
    cells: int = 32,
    scale: float = 1.0,
    n: int = 3,
    tol: float = 1e-10,
) -> Instance:
    """Zero data with the harmonic trace :func:`HOMOGENEOUS_BOUNDARY` times ``scale``."""
    G = _model(model)
    key = ("homogeneous", G.descriptor, cells, float(scale), n, tol)
    if key not in _CACHE:
        grid = Grid.cube(n, 1.0, cells)
        spec = OperatorSpec(G)
        bvals = scale * HOMOGENEOUS_BOUNDARY(*grid.coords())
        data = GridField(grid, np.zeros(grid.shape))
        sol = _solve(spec, None, bvals, grid, tol)
        _CACHE[key] = Instance(
            f"homogeneous-{G.descriptor}", "homogeneous", spec, None, data, bvals, sol, None, scale,
            {"cells": cells, "model": G.descriptor},
        )
    return _CACHE[key]


def dirac_sola(cells: int, levels, p: float = 2.0, n: int = 3, tol: float = 1e-10):
    """SOLA sequence for the unit Dirac; members are also cached as instances."""
    key = ("sola", cells, tuple(float(k) for k in levels), float(p), n, tol)
    if key not in _CACHE:
        grid = Grid.cube(n, 1.0, cells)
        spec = OperatorSpec(plaplace_normalized(p))
        mu = MeasureData.dirac((0.0,) * n, 1.0)
        seq = sola_sequence(spec, mu, "zero", grid, levels, tol=tol)
        for k, res, data in zip(seq.truncation_levels, seq.members, seq.data):
            ikey = ("dirac", cells, float(k), float(p), 1.0, n, tol)
            _CACHE.setdefault(
                ikey,
                Instance(f"dirac-p{p:g}", "dirac", spec, mu, data, "zero", res, k, 1.0,
                         {"cells": cells, "level": k, "p": p}),
            )
        _CACHE[key] = seq
    return _CACHE[key]


def rescale(inst: Instance, lam: float) -> Instance:
    """The same problem under ``u -> lam u`` (power models only), re-solved."""
    p = _power_exponent(inst.spec.modular)
    cells = inst.grid.cells_per_axis[0]
    n = inst.grid.n
    scale = inst.scale * lam
    if inst.kind == "dirac":
        return dirac_instance(cells, inst.level, p, scale, n)
    if inst.kind == "density":
        return density_instance(cells, inst.params["sigma"], p, scale, n)
    return homogeneous_instance(inst.spec.modular, cells, scale, n)


def build_instance(kind: str, **kw) -> Instance:
    """Dispatch on ``kind`` for manifest-driven construction."""
    kind = kind.strip().lower()
    if kind == "dirac":
        return dirac_instance(**kw)
    if kind == "density":
        return density_instance(**kw)
    if kind == "homogeneous":
        return homogeneous_instance(**kw)
    raise ValueError(f"unknown instance kind {kind!r}")
