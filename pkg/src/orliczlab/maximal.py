"""Restricted maximal operators of order zero and one.

For an anchor ball ``A`` (playing the role of ``2B_0``)

    M0(f)(x) = sup { avg_{B} f : x in B, B ⊂ A }
    M1(mu)(x) = sup { |mu|(B) |B|**(1/n - 1) : x in B, B ⊂ A }

where the balls run over the node-centred dyadic family of
:func:`orliczlab.grid.enumerate_balls`.  The first-order weight uses the
Lebesgue measure ``|B| = omega_n R**n``; the factor relating it to the
radius form ``R**(1/n - 1)`` is ``omega_n**(1/n - 1)`` and is stored on
every :class:`MaximalField`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .grid import (
    Ball,
    BallReducer,
    Grid,
    GridError,
    GridField,
    MeasureData,
    ball_offsets,
    dyadic_ladder,
    enumerate_balls,
    region_bbox,
    region_mask,
    save_field,
    load_field,
    unit_ball_volume,
)
from .reports import EstimateReport, stability

__all__ = [
    "MaximalField",
    "restricted_M0",
    "restricted_M1",
    "riesz_mapping_check",
    "save_maximal",
    "load_maximal",
]


@dataclass(frozen=True, eq=False)
class MaximalField:
    """Output of a restricted maximal operator.

    Attributes
    ----------
    base : GridField
        Operator values; zero outside the anchor.
    anchor : Ball
    order : {"zero", "one"}
    out_of_domain : ndarray of bool
        Nodes outside the anchor (values there are 0 by convention).
    uncovered : ndarray of bool
        Anchor nodes contained in no ball of the family.
    radii : tuple of float
    center_stride : int or str
    omega_factor : float
        ``omega_n**(1/n - 1)``, converting the volume weight to the radius weight.
    """

    base: GridField
    anchor: Ball
    order: str
    out_of_domain: np.ndarray = field(repr=False)
    uncovered: np.ndarray = field(repr=False)
    radii: tuple = ()
    center_stride: Union[int, str] = "auto"
    omega_factor: float = 1.0

    @property
    def values(self) -> np.ndarray:
        return self.base.values

    def metadata(self) -> dict:
        return {
            "anchor_center": list(self.anchor.center),
            "anchor_radius": self.anchor.radius,
            "order": self.order,
            "radii": list(self.radii),
            "center_stride": self.center_stride,
            "omega_factor": self.omega_factor,
        }


def _scatter_max(out: np.ndarray, pad: int, centers: np.ndarray, vals: np.ndarray, offs: np.ndarray):
    """``out[c + o] = max(out[c + o], vals[c])`` for every ball offset ``o``."""
    shape = out.shape
    strides = np.array([int(np.prod(shape[j + 1 :])) for j in range(len(shape))])
    flat_c = (np.asarray(centers) + pad) @ strides
    delta = offs @ strides
    flat = out.reshape(-1)
    if len(offs) <= len(flat_c):
        for d in delta:
            idx = flat_c + d
            flat[idx] = np.maximum(flat[idx], vals)
    else:
        for j in range(len(flat_c)):
            idx = flat_c[j] + delta
            flat[idx] = np.maximum(flat[idx], vals[j])


class _AnchorScan:
    def __init__(self, grid: Grid, anchor: Ball, radii, center_stride):
        if anchor.n != grid.n:
            raise GridError("anchor dimension does not match the grid")
        amask = region_mask(grid, anchor)
        if not amask.any():
            raise GridError("anchor ball contains no grid nodes")
        self.grid = grid
        self.anchor = anchor
        self.amask = amask
        self.sl = region_bbox(grid, amask)
        self.sub = grid.subgrid(self.sl)
        if radii is None:
            radii, _ = dyadic_ladder(anchor.radius, grid.h)
        self.radii = tuple(float(r) for r in radii)
        self.family = enumerate_balls(self.sub, anchor, self.radii, restricted=True, center_stride=center_stride)
        self.red = BallReducer(self.sub, max(self.radii))
        self.stride = center_stride

    def new_output(self):
        return np.full(tuple(s + 2 * self.red.pad for s in self.sub.shape), -1.0)

    def finish(self, out: np.ndarray, order: str, omega_factor: float = 1.0) -> MaximalField:
        p = self.red.pad
        inner = out[tuple(slice(p, s - p) for s in out.shape)]
        full = np.full(self.grid.shape, -1.0)
        full[self.sl] = inner
        uncovered = self.amask & (full < 0)
        full[~self.amask] = -1.0
        vals = np.maximum(full, 0.0)
        return MaximalField(
            GridField(self.grid, vals),
            self.anchor,
            order,
            ~self.amask,
            uncovered,
            self.radii,
            self.stride,
            omega_factor,
        )


def restricted_M0(
    f: GridField,
    anchor: Ball,
    radii: Optional[Sequence[float]] = None,
    center_stride: Union[int, str] = "auto",
) -> MaximalField:
    """Restricted Hardy-Littlewood maximal function of a nonnegative field.

    Parameters
    ----------
    f : GridField
        Nonnegative scalar field (a vector field is replaced by its magnitude).
    anchor : Ball
        Every admissible ball lies inside it.
    radii : sequence of float, optional
        Radius ladder; default ``anchor.radius * 2**-j`` down to ``h``.
    center_stride : int or "auto"

    Returns
    -------
    MaximalField
    """
    vals = f.magnitude().values if f.rank == "vector" else f.values
    if np.any(vals < 0):
        raise GridError("M0 expects a nonnegative field")
    scan = _AnchorScan(f.grid, anchor, radii, center_stride)
    sub_vals = vals[scan.sl]
    P = scan.red.padded(sub_vals)
    ones = scan.red.padded(np.ones(scan.sub.shape))
    out = scan.new_output()
    for lv in scan.family.levels:
        if not len(lv.centers):
            continue
        avg = scan.red.sums_padded(P, lv.centers, lv.radius) / scan.red.sums_padded(ones, lv.centers, lv.radius)
        _scatter_max(out, scan.red.pad, lv.centers, avg, ball_offsets(lv.radius, f.grid.h, f.grid.n))
    return scan.finish(out, "zero")


def _measure_density(mu, grid: Grid) -> tuple[np.ndarray, tuple]:
    if isinstance(mu, GridField):
        if not mu.grid.same_as(grid):
            raise GridError("density lives on a different grid")
        return np.abs(mu.values), ()
    if isinstance(mu, MeasureData):
        dens = np.zeros(grid.shape)
        if mu.density is not None:
            if not mu.density.grid.same_as(grid):
                raise GridError("measure density lives on a different grid")
            dens = np.abs(mu.density.values)
        return dens, mu.atoms
    raise GridError("expected a MeasureData or a density GridField")


def restricted_M1(
    mu,
    anchor: Ball,
    grid: Optional[Grid] = None,
    radii: Optional[Sequence[float]] = None,
    center_stride: Union[int, str] = "auto",
) -> MaximalField:
    """Restricted first-order maximal function ``sup |mu|(B) |B|**(1/n-1)``.

    ``|mu|(B)`` adds the nodal integral of ``|density|`` over the ball and
    the masses of atoms lying strictly inside it.

    Parameters
    ----------
    mu : MeasureData or GridField
        Measure, or a density field.
    anchor : Ball
    grid : Grid, optional
        Needed when ``mu`` consists of atoms only.
    """
    if grid is None:
        if isinstance(mu, GridField):
            grid = mu.grid
        elif isinstance(mu, MeasureData) and mu.density is not None:
            grid = mu.density.grid
        else:
            raise GridError("a grid is required for atom-only measures")
    dens, atoms = _measure_density(mu, grid)
    scan = _AnchorScan(grid, anchor, radii, center_stride)
    P = scan.red.padded(dens[scan.sl])
    n = grid.n
    wn = unit_ball_volume(n)
    out = scan.new_output()
    for lv in scan.family.levels:
        if not len(lv.centers):
            continue
        mass = scan.red.sums_padded(P, lv.centers, lv.radius) * grid.cell_volume
        if atoms:
            pos = scan.sub.node_position(lv.centers)
            for loc, m in atoms:
                inside = np.sum((pos - np.asarray(loc)) ** 2, axis=1) < lv.radius**2
                mass = mass + abs(m) * inside
        weight = (wn * lv.radius**n) ** (1.0 / n - 1.0)
        _scatter_max(out, scan.red.pad, lv.centers, mass * weight, ball_offsets(lv.radius, grid.h, n))
    return scan.finish(out, "one", wn ** (1.0 / n - 1.0))


def save_maximal(mf: MaximalField, path) -> None:
    """Write the field file plus a ``.json`` metadata sidecar."""
    save_field(mf.base, path)
    Path(str(path) + ".json").write_text(json.dumps(mf.metadata(), indent=2))


def load_maximal(path) -> MaximalField:
    base = load_field(path)
    meta = json.loads(Path(str(path) + ".json").read_text())
    anchor = Ball(tuple(meta["anchor_center"]), meta["anchor_radius"])
    amask = region_mask(base.grid, anchor)
    return MaximalField(
        base, anchor, meta["order"], ~amask, np.zeros_like(amask), tuple(meta["radii"]), meta["center_stride"], meta["omega_factor"]
    )


# ---------------------------------------------------------------------------
# mapping properties


def riesz_mapping_check(
    density: Callable,
    item: str,
    n: int = 3,
    q: float = 1.2,
    s: float = 1.2,
    theta: Optional[float] = None,
    ball_radius: float = 0.5,
    resolutions: Sequence[int] = (12, 24),
    threshold: float = 0.25,
) -> EstimateReport:
    """Measure the constant in the mapping bounds of ``M1`` between data spaces.

    Parameters
    ----------
    density : callable
        ``density(*coords)`` giving the data on nodal coordinates; it is
        restricted to the ball ``B`` of radius ``ball_radius`` at the origin.
    item : {"i", "ii", "iii", "iv"}
        ``i``: ``||M1_{2B}||_{L(nq/(n-q), s)(B)} <= c ||mu||_{L(q,s)(B)}``, ``1<q<n``.
        ``ii``: ``||M1_B||_{L^{n/(n-1)}(B)} <= c |B|**(1/n) ||mu||_{LlogL(B)}``.
        ``iii``: ``||M1_B||_{L^{theta q/(theta-q), theta}(B)} <= c ||mu||_{L^{q,theta}(B)}``.
        ``iv``: Lorentz-Morrey analogue of ``iii`` with second indices ``theta s/(theta-q)`` and ``s``.
    resolutions : sequence of int
        Values of ``ball_radius / h`` for the two grid levels.
    """
    from . import norms

    item = item.lower()
    if item not in ("i", "ii", "iii", "iv"):
        raise ValueError("item must be one of i, ii, iii, iv")
    if item == "i" and not (1 < q < n):
        raise ValueError(f"item i needs 1 < q < {n}")
    if item in ("iii", "iv"):
        if theta is None or not (1 < q < theta <= n):
            raise ValueError(f"items iii/iv need 1 < q < theta <= {n}")
    if item == "iv" and not (0 < s < math.inf):
        raise ValueError("item iv needs 0 < s < inf")
    R = float(ball_radius)
    B = Ball((0.0,) * n, R)
    anchor = B.scaled(2.0) if item == "i" else B
    consts, levels = [], []
    for k in resolutions:
        h = R / k
        cells = int(math.ceil(anchor.radius / h)) * 2 + 2
        half = cells * h / 2
        grid = Grid((-half,) * n, (2 * half,) * n, (cells,) * n)
        X = grid.coords()
        bmask = region_mask(grid, B)
        dens = np.where(bmask, np.abs(np.broadcast_to(density(*X), grid.shape)), 0.0)
        mu = GridField(grid, dens)
        M = restricted_M1(mu, anchor).base
        if item == "i":
            lhs = norms.lorentz_norm(M, n * q / (n - q), s, B)
            rhs = norms.lorentz_norm(mu, q, s, B)
        elif item == "ii":
            lhs = norms.lebesgue_norm(M, n / (n - 1.0), B)
            rhs = B.volume() ** (1.0 / n) * norms.llogl_norm(mu, B)
        elif item == "iii":
            lhs = norms.morrey_norm(M, theta * q / (theta - q), theta, B)
            rhs = norms.morrey_norm(mu, q, theta, B)
        else:
            t = theta * q / (theta - q)
            lhs = norms.lorentz_morrey_norm(M, t, theta * s / (theta - q), theta, B)
            rhs = norms.lorentz_morrey_norm(mu, q, s, theta, B)
        c = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
        consts.append(c)
        levels.append({"h": h, "lhs": lhs, "rhs": rhs, "c": c})
    drift = stability(consts[0], consts[-1])
    vacuous = all(lv["rhs"] == 0 and lv["lhs"] == 0 for lv in levels)
    passed = vacuous or (all(math.isfinite(c) for c in consts) and drift <= threshold)
    return EstimateReport(
        estimate_id="A3-Riesz",
        lhs=levels[-1]["lhs"],
        rhs_terms={"data": levels[-1]["rhs"]},
        empirical_constant=consts[-1],
        params={"item": item, "n": n, "q": q, "s": s, "theta": theta, "R": R},
        refinement_stability=drift,
        passed=bool(passed),
        details={"levels": levels, "omega_factor": unit_ball_volume(n) ** (1.0 / n - 1.0)},
    )
