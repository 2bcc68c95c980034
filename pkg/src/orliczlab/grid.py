"""Uniform grids, nodal fields, finite measures and ball families.

Every quantity in the package lives on a :class:`Grid`: a box in
``R^n`` (``n`` = 2 or 3) sampled at the nodes of a uniform lattice with
spacing ``h``.  Integrals are nodal sums ``h**n * sum(values)``, a node
belongs to a ball iff ``|node - center| < radius`` and level sets are
counted nodewise, so that every norm in :mod:`orliczlab.norms` is the
layer-cake integral of one and the same counter.
"""
from __future__ import annotations

import csv
import math
import struct
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterator, Optional, Sequence, Union

import numpy as np

__all__ = [
    "GridError",
    "Grid",
    "GridField",
    "Ball",
    "Box",
    "Annulus",
    "MeasureData",
    "BallFamily",
    "gradient",
    "gradient_magnitude",
    "distribution_function",
    "discretize_measure",
    "enumerate_balls",
    "dyadic_ladder",
    "region_mask",
    "region_measure",
    "integrate",
    "save_field",
    "load_field",
    "save_field_csv",
    "load_field_csv",
    "save_measure",
    "load_measure",
    "DEFAULT_NODE_BUDGET",
]

DEFAULT_NODE_BUDGET = 1 << 25


class GridError(ValueError):
    """Inconsistent grid, field or measure data."""


# ---------------------------------------------------------------------------
# geometry


@dataclass(frozen=True)
class Ball:
    """Open ball ``{x : |x - center| < radius}``."""

    center: tuple
    radius: float

    def __post_init__(self):
        c = tuple(float(x) for x in np.atleast_1d(self.center))
        object.__setattr__(self, "center", c)
        if not (self.radius > 0 and np.isfinite(self.radius)):
            raise GridError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def n(self) -> int:
        return len(self.center)

    def scaled(self, factor: float) -> "Ball":
        """Concentric ball ``factor * B``."""
        return Ball(self.center, self.radius * factor)

    def volume(self) -> float:
        """Lebesgue measure ``omega_n R**n``."""
        return unit_ball_volume(self.n) * self.radius**self.n

    def contains_ball(self, other: "Ball") -> bool:
        d = math.dist(self.center, other.center)
        return d + other.radius <= self.radius * (1 + 1e-12)


@dataclass(frozen=True)
class Box:
    """Axis-aligned closed box ``[lo, hi]``."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(x) for x in self.lo)
        hi = tuple(float(x) for x in self.hi)
        if len(lo) != len(hi) or any(a >= b for a, b in zip(lo, hi)):
            raise GridError("box needs lo < hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)


@dataclass(frozen=True)
class Annulus:
    """Open shell ``r_in <= |x - center| < r_out``."""

    center: tuple
    r_in: float
    r_out: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(x) for x in self.center))
        if not (0 <= self.r_in < self.r_out):
            raise GridError("annulus needs 0 <= r_in < r_out")


Region = Union[None, Ball, Box, Annulus, np.ndarray]


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform node lattice over the box ``origin + [0, extent]``.

    Parameters
    ----------
    origin, extent : sequence of float
        Lower corner and side lengths of the box.
    cells_per_axis : sequence of int
        Number of cells along each axis; nodes are one more.
    node_budget : int
        Upper bound on the total number of nodes.
    """

    origin: tuple
    extent: tuple
    cells_per_axis: tuple
    node_budget: int = field(default=DEFAULT_NODE_BUDGET, repr=False)

    def __post_init__(self):
        origin = tuple(float(x) for x in self.origin)
        extent = tuple(float(x) for x in self.extent)
        cells = tuple(int(c) for c in self.cells_per_axis)
        if not (len(origin) == len(extent) == len(cells)):
            raise GridError("origin, extent and cells_per_axis must have equal length")
        if len(cells) not in (2, 3):
            raise GridError("only dimensions 2 and 3 are supported")
        if any(c < 2 for c in cells) or any(e <= 0 for e in extent):
            raise GridError("need at least 2 cells and positive extent per axis")
        hs = [e / c for e, c in zip(extent, cells)]
        if max(hs) - min(hs) > 1e-12 * max(hs):
            raise GridError(f"cell width must be identical on all axes, got {hs}")
        if math.prod(c + 1 for c in cells) > self.node_budget:
            raise GridError("grid exceeds the configured node budget")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "extent", extent)
        object.__setattr__(self, "cells_per_axis", cells)

    @classmethod
    def cube(cls, n: int, half_width: float = 1.0, cells: int = 64, **kw) -> "Grid":
        """Grid on ``[-half_width, half_width]**n``."""
        return cls((-half_width,) * n, (2.0 * half_width,) * n, (cells,) * n, **kw)

    @property
    def n(self) -> int:
        return len(self.cells_per_axis)

    @property
    def h(self) -> float:
        return self.extent[0] / self.cells_per_axis[0]

    @property
    def shape(self) -> tuple:
        return tuple(c + 1 for c in self.cells_per_axis)

    @property
    def cell_volume(self) -> float:
        return self.h**self.n

    @property
    def volume(self) -> float:
        return math.prod(self.extent)

    def axes(self) -> list:
        return [o + self.h * np.arange(s) for o, s in zip(self.origin, self.shape)]

    def coords(self) -> list:
        """Nodal coordinate arrays, one per axis (``indexing='ij'``)."""
        return _coords(self)

    def node_index(self, point) -> tuple:
        """Index of the node nearest to ``point`` (error if outside the box)."""
        p = np.asarray(point, float)
        rel = (p - np.asarray(self.origin)) / self.h
        if np.any(rel < -1e-9) or np.any(rel > np.asarray(self.cells_per_axis) + 1e-9):
            raise GridError(f"point {tuple(p)} lies outside the grid box")
        idx = np.clip(np.floor(rel + 0.5).astype(int), 0, np.asarray(self.cells_per_axis))
        return tuple(int(i) for i in idx)

    def node_position(self, index) -> np.ndarray:
        return np.asarray(self.origin) + self.h * np.asarray(index, float)

    def subgrid(self, slices: Sequence[slice]) -> "Grid":
        """Grid formed by a contiguous block of nodes."""
        starts = [s.start or 0 for s in slices]
        stops = [s.stop if s.stop is not None else sh for s, sh in zip(slices, self.shape)]
        origin = tuple(o + self.h * a for o, a in zip(self.origin, starts))
        cells = tuple(b - a - 1 for a, b in zip(starts, stops))
        extent = tuple(self.h * c for c in cells)
        return Grid(origin, extent, cells, self.node_budget)

    def same_as(self, other: "Grid") -> bool:
        return (
            self.cells_per_axis == other.cells_per_axis
            and np.allclose(self.origin, other.origin, rtol=0, atol=1e-12 * self.h)
            and np.allclose(self.extent, other.extent, rtol=1e-12)
        )

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.origin, self.extent, tuple(c * factor for c in self.cells_per_axis), self.node_budget)


@lru_cache(maxsize=16)
def _coords_cached(origin, extent, cells):
    g = Grid(origin, extent, cells, node_budget=1 << 62)
    arrs = np.meshgrid(*g.axes(), indexing="ij")
    for a in arrs:
        a.flags.writeable = False
    return arrs


def _coords(grid: Grid):
    return _coords_cached(grid.origin, grid.extent, grid.cells_per_axis)


@dataclass(frozen=True, eq=False)
class GridField:
    """Scalar or vector nodal field on a :class:`Grid`.

    Scalar fields have ``values.shape == grid.shape``; vector fields carry
    a leading axis of length ``grid.n``.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape == self.grid.shape:
            pass
        elif v.shape == (self.grid.n,) + self.grid.shape:
            pass
        else:
            raise GridError(f"values of shape {v.shape} do not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise GridError("field values must be finite")
        v = v.copy() if v is self.values and v.flags.writeable else v
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def rank(self) -> str:
        return "scalar" if self.values.shape == self.grid.shape else "vector"

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "GridField":
        """Sample ``fn(*coords)`` at the nodes."""
        return cls(grid, np.broadcast_to(fn(*grid.coords()), grid.shape).astype(float))

    def magnitude(self) -> "GridField":
        if self.rank == "scalar":
            return GridField(self.grid, np.abs(self.values))
        return GridField(self.grid, np.sqrt(np.sum(self.values**2, axis=0)))

    def restrict(self, slices) -> "GridField":
        slices = tuple(slices)
        if self.rank == "vector":
            return GridField(self.grid.subgrid(slices), self.values[(slice(None),) + slices])
        return GridField(self.grid.subgrid(slices), self.values[slices])

    def map(self, fn) -> "GridField":
        return GridField(self.grid, fn(self.values))


# ---------------------------------------------------------------------------
# regions


def region_mask(grid: Grid, region: Region = None) -> np.ndarray:
    """Boolean nodal indicator of a region (``None`` means the whole grid)."""
    if region is None:
        return np.ones(grid.shape, dtype=bool)
    if isinstance(region, np.ndarray):
        if region.shape != grid.shape or region.dtype != bool:
            raise GridError("mask regions must be boolean arrays of the grid shape")
        return region
    X = grid.coords()
    if isinstance(region, Ball):
        _check_dim(grid, region.center)
        d2 = sum((x - c) ** 2 for x, c in zip(X, region.center))
        return d2 < region.radius**2
    if isinstance(region, Annulus):
        _check_dim(grid, region.center)
        d2 = sum((x - c) ** 2 for x, c in zip(X, region.center))
        return (d2 >= region.r_in**2) & (d2 < region.r_out**2)
    if isinstance(region, Box):
        _check_dim(grid, region.lo)
        tol = 1e-9 * grid.h
        m = np.ones(grid.shape, dtype=bool)
        for x, a, b in zip(X, region.lo, region.hi):
            m &= (x >= a - tol) & (x <= b + tol)
        return m
    raise GridError(f"unsupported region {region!r}")


def _check_dim(grid, point):
    if len(point) != grid.n:
        raise GridError(f"region of dimension {len(point)} on a grid of dimension {grid.n}")


def region_measure(grid: Grid, region: Region = None) -> float:
    """Nodal measure ``h**n * #nodes`` of a region."""
    return float(region_mask(grid, region).sum()) * grid.cell_volume


def region_bbox(grid: Grid, mask: np.ndarray, pad: int = 0) -> tuple:
    """Slices of the bounding box of ``mask`` grown by ``pad`` nodes."""
    idx = np.nonzero(mask)
    if idx[0].size == 0:
        raise GridError("region contains no grid nodes")
    return tuple(
        slice(max(int(i.min()) - pad, 0), min(int(i.max()) + pad + 1, s)) for i, s in zip(idx, grid.shape)
    )


def integrate(f: GridField, region: Region = None) -> float:
    """Nodal integral ``h**n * sum f`` over a region."""
    if f.rank != "scalar":
        raise GridError("integrate expects a scalar field")
    m = region_mask(f.grid, region)
    return float(f.values[m].sum()) * f.grid.cell_volume


# ---------------------------------------------------------------------------
# differential and level-set operations


def gradient(u: GridField) -> GridField:
    """Nodal gradient: central differences inside, second-order one-sided at the boundary.

    Exact for affine fields.

    Examples
    --------
    >>> g = Grid.cube(2, cells=8)
    >>> u = GridField.from_function(g, lambda x, y: 3 * x + 2 * y)
    >>> np.allclose(gradient(u).values[0], 3.0)
    True
    """
    if u.rank != "scalar":
        raise GridError("gradient expects a scalar field")
    parts = np.gradient(u.values, u.grid.h, edge_order=2)
    return GridField(u.grid, np.stack(parts))


def gradient_magnitude(u: GridField) -> GridField:
    """``|Du|`` at the nodes."""
    return gradient(u).magnitude()


def distribution_function(f: GridField, lam: float, region: Region = None) -> float:
    """Nodal measure of ``{|f| > lam}`` within a region."""
    if lam < 0:
        raise GridError("lambda must be nonnegative")
    mag = f.magnitude().values
    m = region_mask(f.grid, region)
    return float(np.count_nonzero(mag[m] > lam)) * f.grid.cell_volume


# ---------------------------------------------------------------------------
# measures


@dataclass(frozen=True, eq=False)
class MeasureData:
    """Finite signed measure: point atoms plus an optional nodal density.

    Parameters
    ----------
    atoms : sequence of (location, mass)
    density : GridField, optional
        Scalar density with respect to Lebesgue measure.
    total_mass_bound : float, optional
        Declared bound on the total variation; defaults to the computed value.
    """

    atoms: tuple = ()
    density: Optional[GridField] = None
    total_mass_bound: Optional[float] = None

    def __post_init__(self):
        atoms = []
        for loc, mass in self.atoms:
            loc = tuple(float(x) for x in np.atleast_1d(loc))
            mass = float(mass)
            if not np.isfinite(mass) or not all(np.isfinite(loc)):
                raise GridError("atom location and mass must be finite")
            atoms.append((loc, mass))
        object.__setattr__(self, "atoms", tuple(atoms))
        if self.density is not None and self.density.rank != "scalar":
            raise GridError("measure density must be a scalar field")
        tv = self.total_variation()
        if self.total_mass_bound is None:
            object.__setattr__(self, "total_mass_bound", tv)
        elif tv > self.total_mass_bound * (1 + 1e-12):
            raise GridError(f"total variation {tv:g} exceeds declared bound {self.total_mass_bound:g}")

    def total_variation(self) -> float:
        tv = sum(abs(m) for _, m in self.atoms)
        if self.density is not None:
            tv += float(np.abs(self.density.values).sum()) * self.density.grid.cell_volume
        return tv

    def total_mass(self) -> float:
        tm = sum(m for _, m in self.atoms)
        if self.density is not None:
            tm += float(self.density.values.sum()) * self.density.grid.cell_volume
        return tm

    @classmethod
    def dirac(cls, location, mass: float = 1.0) -> "MeasureData":
        return cls(atoms=((tuple(location), mass),))


def _tent_stencil(n: int) -> tuple[np.ndarray, np.ndarray]:
    w1 = np.array([0.25, 0.5, 0.25])
    offs = np.array(np.meshgrid(*([np.arange(-1, 2)] * n), indexing="ij")).reshape(n, -1).T
    w = np.ones(len(offs))
    for j in range(n):
        w *= w1[offs[:, j] + 1]
    return offs, w


def discretize_measure(mu: MeasureData, grid: Grid, mollifier: str = "cell") -> GridField:
    """Bounded nodal density representing ``mu``.

    Each atom is loaded as ``mass / h**n`` on the node whose dual cell
    contains it (``mollifier="cell"``) or spread with the tensor tent
    weights ``(1/4, 1/2, 1/4)`` (``mollifier="tent"``, renormalized where
    the stencil leaves the box).  The nodal integral equals the total mass.

    Raises
    ------
    GridError
        If an atom lies outside the grid box or the density lives on a
        different grid.
    """
    out = np.zeros(grid.shape)
    if mu.density is not None:
        if not mu.density.grid.same_as(grid):
            raise GridError("measure density is defined on a different grid")
        out += mu.density.values
    vol = grid.cell_volume
    if mollifier == "tent":
        offs, w = _tent_stencil(grid.n)
    elif mollifier != "cell":
        raise GridError(f"unknown mollifier {mollifier!r}")
    for loc, mass in mu.atoms:
        if len(loc) != grid.n:
            raise GridError("atom dimension does not match the grid")
        idx = np.array(grid.node_index(loc))
        if mollifier == "cell":
            out[tuple(idx)] += mass / vol
            continue
        pts = idx + offs
        ok = np.all((pts >= 0) & (pts < np.array(grid.shape)), axis=1)
        ww = w[ok] / w[ok].sum()
        np.add.at(out, tuple(pts[ok].T), mass * ww / vol)
    return GridField(grid, out)


# ---------------------------------------------------------------------------
# balls


@lru_cache(maxsize=256)
def _ball_offsets(ratio_key: float, n: int) -> np.ndarray:
    ratio = ratio_key
    R = int(math.ceil(ratio))
    rng = np.arange(-R, R + 1)
    grid = np.array(np.meshgrid(*([rng] * n), indexing="ij")).reshape(n, -1).T
    d2 = np.sum(grid.astype(float) ** 2, axis=1)
    out = grid[d2 < ratio**2 * (1 - 1e-13)]
    out.flags.writeable = False
    return out


def ball_offsets(radius: float, h: float, n: int) -> np.ndarray:
    """Integer node offsets ``k`` with ``|k| h < radius``."""
    return _ball_offsets(round(radius / h, 12), n)


def dyadic_ladder(r_max: float, h: float, levels: Optional[int] = None) -> tuple[list, bool]:
    """Radii ``r_max * 2**-j`` not smaller than ``h``.

    Returns the ladder and a flag set when requested levels were dropped
    for falling below the grid resolution.
    """
    if r_max <= 0:
        raise GridError("ladder needs r_max > 0")
    radii = []
    j = 0
    truncated = False
    while levels is None or j <= levels:
        r = r_max * 2.0**-j
        if r < h * (1 - 1e-12):
            truncated = levels is not None
            break
        radii.append(r)
        j += 1
    return radii, truncated


@dataclass
class BallLevel:
    """All balls of one radius: nodal centers as an ``(m, n)`` index array."""

    radius: float
    centers: np.ndarray
    stride: int = 1


@dataclass
class BallFamily:
    """Ball family organized by radius; iterating yields :class:`Ball` objects."""

    grid: Grid
    levels: list
    truncated: bool = False

    def __len__(self) -> int:
        return sum(len(lv.centers) for lv in self.levels)

    def __iter__(self) -> Iterator[Ball]:
        for lv in self.levels:
            for idx in lv.centers:
                yield Ball(tuple(self.grid.node_position(idx)), lv.radius)

    @property
    def radii(self) -> list:
        return [lv.radius for lv in self.levels]


def _auto_stride(r: float, h: float) -> int:
    return max(1, int(r / (4.0 * h)))


def enumerate_balls(
    grid: Grid,
    outer: Union[Ball, Box, None],
    radii: Optional[Sequence[float]] = None,
    *,
    restricted: bool = False,
    center_stride: Union[int, str] = 1,
    center_mask: Optional[np.ndarray] = None,
) -> BallFamily:
    """Balls centred at grid nodes inside ``outer``, one set per ladder radius.

    Parameters
    ----------
    grid : Grid
    outer : Ball or Box or None
        Centers are nodes inside ``outer`` (``None``: the whole grid).
    radii : sequence of float, optional
        Descending radii; defaults to the dyadic ladder from the size of
        ``outer`` down to ``h``.
    restricted : bool
        Keep only balls contained in ``outer``.
    center_stride : int or "auto"
        Use every ``k``-th node along each axis as a center.  ``"auto"``
        picks ``max(1, r / (4h))`` per radius.
    center_mask : ndarray of bool, optional
        Additional restriction of the admissible centers.

    Returns
    -------
    BallFamily
        ``truncated`` is set when ladder radii below ``h`` were dropped.
    """
    h = grid.h
    if radii is None:
        if isinstance(outer, Ball):
            rmax = outer.radius
        elif isinstance(outer, Box):
            rmax = max(b - a for a, b in zip(outer.lo, outer.hi))
        else:
            rmax = max(grid.extent)
        radii, truncated = dyadic_ladder(rmax, h)
    else:
        radii = [float(r) for r in radii]
        if any(r <= 0 for r in radii):
            raise GridError("radii must be positive")
        truncated = any(r < h * (1 - 1e-12) for r in radii)
        radii = [r for r in radii if r >= h * (1 - 1e-12)]
        if truncated:
            warnings.warn("ball ladder truncated at the grid resolution", RuntimeWarning, stacklevel=2)
    base = region_mask(grid, outer)
    if center_mask is not None:
        base = base & center_mask
    if isinstance(outer, Ball):
        anchor = np.array(grid.node_index(np.clip(outer.center, grid.origin, np.add(grid.origin, grid.extent))))
    else:
        anchor = np.zeros(grid.n, dtype=int)
    X = grid.coords()
    levels = []
    for r in radii:
        stride = _auto_stride(r, h) if center_stride == "auto" else int(center_stride)
        if stride < 1:
            raise GridError("center stride must be >= 1")
        m = base.copy()
        if restricted:
            if isinstance(outer, Ball):
                d = np.sqrt(sum((x - c) ** 2 for x, c in zip(X, outer.center)))
                m &= d + r <= outer.radius * (1 + 1e-12)
            elif isinstance(outer, Box):
                for x, a, b in zip(X, outer.lo, outer.hi):
                    m &= (x - r >= a - 1e-12) & (x + r <= b + 1e-12)
            elif outer is None:
                for x, a, e in zip(X, grid.origin, grid.extent):
                    m &= (x - r >= a - 1e-12) & (x + r <= a + e + 1e-12)
        if stride > 1:
            for ax in range(grid.n):
                idx = np.arange(grid.shape[ax])
                keep = ((idx - anchor[ax]) % stride) == 0
                shp = [1] * grid.n
                shp[ax] = -1
                m &= keep.reshape(shp)
        levels.append(BallLevel(r, np.argwhere(m), stride))
    return BallFamily(grid, levels, truncated)


class BallReducer:
    """Per-ball sums and gathers of nodal arrays.

    Arrays are zero-padded so that balls may stick out of the grid;
    nodes outside the grid contribute nothing, which realizes
    ``B_R ∩ Ω``.
    """

    def __init__(self, grid: Grid, max_radius: float):
        self.grid = grid
        self.pad = int(math.ceil(max_radius / grid.h)) + 1

    def padded(self, arr: np.ndarray) -> np.ndarray:
        return np.pad(np.asarray(arr, float), self.pad)

    def sums(self, arr: np.ndarray, centers: np.ndarray, radius: float) -> np.ndarray:
        """Sums of ``arr`` over the nodes of each ball, by chord prefix sums."""
        P = self.padded(arr)
        return self.sums_padded(P, centers, radius)

    def sums_padded(self, P: np.ndarray, centers: np.ndarray, radius: float) -> np.ndarray:
        n = self.grid.n
        S = np.concatenate([np.zeros(P.shape[:-1] + (1,)), np.cumsum(P, axis=-1)], axis=-1)
        c = np.asarray(centers) + self.pad
        out = np.zeros(len(c))
        for off, w in _chords(round(radius / self.grid.h, 12), n):
            head = tuple(c[:, j] + off[j] for j in range(n - 1))
            last = c[:, n - 1]
            out += S[head + (last + w + 1,)] - S[head + (last - w,)]
        return out

    def gather(self, P: np.ndarray, centers: np.ndarray, radius: float) -> np.ndarray:
        """Matrix of padded values at each ball's nodes, shape ``(m, k)``."""
        offs = ball_offsets(radius, self.grid.h, self.grid.n)
        c = np.asarray(centers) + self.pad
        flat = np.ravel_multi_index(tuple(c.T), P.shape)
        strides = np.array([int(np.prod(P.shape[j + 1 :])) for j in range(P.ndim)])
        delta = offs @ strides
        return P.ravel()[flat[:, None] + delta[None, :]]


@lru_cache(maxsize=256)
def _chords(ratio: float, n: int):
    """Chords of the discrete ball along the last axis: (offset, half-width)."""
    R = int(math.ceil(ratio))
    rng = np.arange(-R, R + 1)
    heads = np.array(np.meshgrid(*([rng] * (n - 1)), indexing="ij")).reshape(n - 1, -1).T
    out = []
    lim = ratio**2 * (1 - 1e-13)
    for hd in heads:
        rem = lim - float(np.sum(hd.astype(float) ** 2))
        if rem <= 0:
            continue
        w = int(math.floor(math.sqrt(rem)))
        while w * w >= rem:
            w -= 1
        while (w + 1) ** 2 < rem:
            w += 1
        if w < 0:
            continue
        out.append((tuple(int(x) for x in hd), w))
    return tuple(out)


# ---------------------------------------------------------------------------
# serialization

_MAGIC = b"OLF1"


def save_field(f: GridField, path) -> None:
    """Write a field in the flat little-endian binary layout.

    Layout: magic ``OLF1``, ``int64`` dimension, ``int64`` rank (1 or n),
    ``n`` ``int64`` cells per axis, ``n`` ``float64`` origin, ``n``
    ``float64`` extent, then ``float64`` node values in row-major order.
    """
    g = f.grid
    rank = 1 if f.rank == "scalar" else g.n
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack(f"<qq{g.n}q", g.n, rank, *g.cells_per_axis))
        fh.write(struct.pack(f"<{2 * g.n}d", *g.origin, *g.extent))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def load_field(path) -> GridField:
    """Read a field written by :func:`save_field`."""
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise GridError(f"{path}: not a field file")
    n, rank = struct.unpack_from("<qq", data, 4)
    if n not in (2, 3) or rank not in (1, n):
        raise GridError(f"{path}: corrupt header")
    off = 20
    cells = struct.unpack_from(f"<{n}q", data, off)
    off += 8 * n
    vals = struct.unpack_from(f"<{2 * n}d", data, off)
    off += 16 * n
    grid = Grid(vals[:n], vals[n:], cells)
    shape = grid.shape if rank == 1 else (n,) + grid.shape
    count = math.prod(shape)
    if len(data) - off != 8 * count:
        raise GridError(f"{path}: payload size does not match the header")
    arr = np.frombuffer(data, dtype="<f8", count=count, offset=off).reshape(shape)
    return GridField(grid, arr.astype(float))


def save_field_csv(f: GridField, path) -> None:
    """CSV with one row per node: coordinates then value(s)."""
    if f.grid.shape and math.prod(f.grid.shape) > 1_000_000:
        raise GridError("CSV export is meant for small grids")
    g = f.grid
    X = [x.ravel() for x in g.coords()]
    names = ["x", "y", "z"][: g.n]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["# grid", g.n, *g.cells_per_axis, *g.origin, *g.extent])
        if f.rank == "scalar":
            w.writerow(names + ["value"])
            cols = X + [f.values.ravel()]
        else:
            w.writerow(names + [f"v{j}" for j in range(g.n)])
            cols = X + [f.values[j].ravel() for j in range(g.n)]
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])


def load_field_csv(path) -> GridField:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head = rows[0]
    n = int(head[1])
    cells = [int(x) for x in head[2 : 2 + n]]
    nums = [float(x) for x in head[2 + n : 2 + 3 * n]]
    grid = Grid(nums[:n], nums[n:], cells)
    body = np.array(rows[2:], dtype=float)
    vals = body[:, n:]
    if vals.shape[1] == 1:
        return GridField(grid, vals[:, 0].reshape(grid.shape))
    return GridField(grid, vals.T.reshape((n,) + grid.shape))


def save_measure(mu: MeasureData, path, density_path=None) -> None:
    """Text manifest: one ``atom x y [z] mass`` line per atom, optional ``density <file>``."""
    lines = ["# measure manifest"]
    for loc, mass in mu.atoms:
        lines.append("atom " + " ".join(repr(x) for x in loc) + f" {mass!r}")
    if mu.density is not None:
        if density_path is None:
            density_path = Path(path).with_suffix(".density.bin")
        save_field(mu.density, density_path)
        lines.append(f"density {Path(density_path).name if Path(density_path).parent == Path(path).parent else density_path}")
    if mu.total_mass_bound is not None:
        lines.append(f"bound {mu.total_mass_bound!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_measure(path) -> MeasureData:
    """Read a measure manifest written by :func:`save_measure`."""
    atoms, density, bound = [], None, None
    base = Path(path).parent
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        try:
            if key == "atom":
                vals = [float(x) for x in rest]
                if len(vals) not in (3, 4):
                    raise GridError
                atoms.append((tuple(vals[:-1]), vals[-1]))
            elif key == "density":
                p = Path(rest[0])
                density = load_field(p if p.is_absolute() else base / p)
            elif key == "bound":
                bound = float(rest[0])
            else:
                raise GridError
        except (GridError, ValueError, IndexError):
            raise GridError(f"{path}:{lineno}: malformed line {raw!r}") from None
    return MeasureData(tuple(atoms), density, bound)
