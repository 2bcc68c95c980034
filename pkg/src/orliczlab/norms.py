"""Lebesgue, Lorentz, Marcinkiewicz, Morrey, Lorentz-Morrey and L log L norms.

Nodal fields are step functions (each node carries the measure ``h**n``
of its dual cell), so the layer-cake integral defining the Lorentz norm

    ||f||_{L(q,s)} = ( q * int_0^inf (lam**q * mu_f(lam))**(s/q) dlam/lam )**(1/s)

is evaluated exactly from the sorted nodal values.  A 512-point
log-spaced trapezoid quadrature of the same integral is available as an
independent evaluator and provides the error estimate reported in CSV
output.

Ball suprema (Morrey and Lorentz-Morrey families) run over the finite
family of :func:`orliczlab.grid.enumerate_balls`: node centers times a
dyadic radius ladder.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .grid import (
    Ball,
    BallReducer,
    Box,
    Grid,
    GridError,
    GridField,
    Region,
    dyadic_ladder,
    enumerate_balls,
    region_bbox,
    region_mask,
)

__all__ = [
    "NormSpec",
    "NormError",
    "ZeroFieldWarning",
    "parse_normspec",
    "lebesgue_norm",
    "lorentz_norm",
    "marcinkiewicz_norm",
    "morrey_norm",
    "lorentz_morrey_norm",
    "marcinkiewicz_morrey_norm",
    "llogl_norm",
    "llogl_luxemburg",
    "embedding_chain_check",
    "evaluate",
    "norm_rows_csv",
    "QUADRATURE_POINTS",
]

QUADRATURE_POINTS = 512
_FAMILIES = (
    "lebesgue",
    "lorentz",
    "marcinkiewicz",
    "morrey",
    "lorentzmorrey",
    "marcinkiewiczmorrey",
    "llogl",
    "llogltheta",
)
_ALIASES = {
    "lp": "lebesgue",
    "lq": "lebesgue",
    "marc": "marcinkiewicz",
    "weak": "marcinkiewicz",
    "lorentz-morrey": "lorentzmorrey",
    "lorentz_morrey": "lorentzmorrey",
    "marcmorrey": "marcinkiewiczmorrey",
    "marcinkiewicz-morrey": "marcinkiewiczmorrey",
    "marcinkiewicz_morrey": "marcinkiewiczmorrey",
}


class NormError(ValueError):
    """Parameters outside a family's admissible range."""


class ZeroFieldWarning(RuntimeWarning):
    """The field vanishes identically on the region; the norm is 0."""


# ---------------------------------------------------------------------------
# specification objects


@dataclass(frozen=True)
class NormSpec:
    """A function space and its parameters.

    For the Lorentz-Morrey family ``q`` is the integrability index (``t``
    in the usual notation) and ``s`` the second Lorentz index.
    """

    family: str
    q: float = 1.0
    s: float = math.inf
    theta: Optional[float] = None
    averaged: bool = False
    bracketed: bool = False

    def __post_init__(self):
        fam = _ALIASES.get(self.family.lower(), self.family.lower())
        if fam == "llogl" and self.theta is not None:
            fam = "llogltheta"
        if fam not in _FAMILIES:
            raise NormError(f"unknown norm family {self.family!r}")
        object.__setattr__(self, "family", fam)
        if fam in ("llogl", "llogltheta"):
            if fam == "llogltheta" and self.theta is None:
                raise NormError("llogl with theta needs a theta value")
            return
        if not (self.q > 0 and np.isfinite(self.q)):
            raise NormError("integrability index must be positive and finite")
        if fam in ("lorentz", "lorentzmorrey") and not self.s > 0:
            raise NormError("second Lorentz index must be positive")
        if fam in ("morrey", "lorentzmorrey", "marcinkiewiczmorrey"):
            if self.theta is None:
                raise NormError(f"{fam} needs theta")
            if fam == "morrey" and self.q < 1:
                raise NormError("Morrey spaces need q >= 1")
            if self.theta < 0:
                raise NormError("theta must lie in [0, n]")

    def label(self) -> str:
        parts = []
        if self.family not in ("llogl",):
            if self.family != "llogltheta":
                parts.append(f"q={self.q:g}")
            if self.family in ("lorentz", "lorentzmorrey"):
                parts.append(f"s={self.s:g}")
            if self.theta is not None:
                parts.append(f"theta={self.theta:g}")
        if self.averaged:
            parts.append("averaged=1")
        if self.bracketed:
            parts.append("bracketed=1")
        fam = "llogl" if self.family == "llogltheta" else self.family
        return fam + (":" + ",".join(parts) if parts else "")


def parse_normspec(text: str) -> NormSpec:
    """Parse ``lorentz:q=1.2,s=2``, ``morrey:q=1.5,theta=2.5``, ``llogl``, ``llogl:theta=2``.

    Flags ``averaged=1`` and ``bracketed=1`` may be appended; ``s=inf``
    is accepted.
    """
    fam, _, rest = text.strip().partition(":")
    kw: dict = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, val = item.partition("=")
        key = key.strip().lower()
        if not eq:
            raise NormError(f"malformed parameter {item!r}")
        if key in ("averaged", "bracketed"):
            kw[key] = val.strip().lower() in ("1", "true", "yes")
            continue
        if key == "t":
            key = "q"
        if key == "gamma":
            key = "s"
        if key not in ("q", "s", "theta"):
            raise NormError(f"unknown parameter {key!r}")
        try:
            kw[key] = float(val)
        except ValueError:
            raise NormError(f"non-numeric value in {text!r}") from None
    return NormSpec(fam, **kw)


# ---------------------------------------------------------------------------
# layer-cake kernels


def _sorted_desc(v: np.ndarray, axis: int = -1) -> np.ndarray:
    return -np.sort(-v, axis=axis)


def _lorentz_from_sorted(vd: np.ndarray, unit, q: float, s: float) -> np.ndarray:
    """Exact layer-cake Lorentz norm of step functions.

    ``vd`` holds nonnegative values sorted descending along the last axis;
    every entry carries measure ``unit`` (scalar or broadcastable).
    """
    k = vd.shape[-1]
    m = np.arange(1, k + 1) * np.asarray(unit, float)[..., None] if np.ndim(unit) else np.arange(1, k + 1) * unit
    if math.isinf(s):
        return np.max(vd * m ** (1.0 / q), axis=-1)
    vs = vd**s
    dv = vs - np.concatenate([vs[..., 1:], np.zeros(vs.shape[:-1] + (1,))], axis=-1)
    total = np.sum(m ** (s / q) * dv, axis=-1)
    return (q / s * total) ** (1.0 / s)


def _lorentz_quadrature(vals: np.ndarray, unit: float, q: float, s: float, points: int = QUADRATURE_POINTS) -> float:
    """Trapezoid rule in ``log(lambda)`` on a log grid ``[min/10, 10 max]``."""
    pos = vals[vals > 0]
    if pos.size == 0:
        return 0.0
    asc = np.sort(pos)
    lam = np.logspace(math.log10(asc[0] / 10.0), math.log10(asc[-1] * 10.0), points)
    mu = (asc.size - np.searchsorted(asc, lam, side="right")) * unit
    if math.isinf(s):
        cand = np.concatenate([lam * mu ** (1.0 / q), asc * ((asc.size - np.arange(asc.size)) * unit) ** (1.0 / q)])
        return float(cand.max())
    integrand = (lam**q * mu) ** (s / q)
    body = np.trapezoid(integrand, np.log(lam))
    head = lam[0] ** s / s * (asc.size * unit) ** (s / q)  # exact: mu is constant below min
    return float((q * (body + head)) ** (1.0 / s))


def _prepare(f: GridField, region: Region):
    mask = region_mask(f.grid, region)
    vals = f.magnitude().values[mask]
    return vals, int(mask.sum()), mask


def _warn_zero(vals):
    if vals.size == 0 or not np.any(vals > 0):
        warnings.warn("field vanishes on the region; norm is 0", ZeroFieldWarning, stacklevel=3)
        return True
    return False


def lebesgue_norm(f: GridField, q: float, region: Region = None, averaged: bool = False) -> float:
    """``(int |f|**q)**(1/q)`` as a nodal sum; ``q=inf`` gives the max."""
    vals, count, _ = _prepare(f, region)
    if count == 0:
        raise GridError("region contains no grid nodes")
    if math.isinf(q):
        return float(vals.max())
    unit = f.grid.cell_volume if not averaged else 1.0 / count
    return float((np.sum(vals**q) * unit) ** (1.0 / q))


def lorentz_norm(
    f: GridField,
    q: float,
    s: float,
    region: Region = None,
    averaged: bool = False,
    method: str = "exact",
) -> float:
    """Lorentz norm ``L(q, s)`` on a region.

    Parameters
    ----------
    f : GridField
        Scalar or vector field (vectors are measured by their magnitude).
    q, s : float
        Lorentz indices; ``s = inf`` gives the Marcinkiewicz norm.
    region : Ball, Box, Annulus, bool array or None
    averaged : bool
        Divide level-set measures by the measure of the region.
    method : {"exact", "quadrature"}
        Exact evaluation from sorted values, or the 512-point log-lambda
        trapezoid rule.

    Returns
    -------
    float
    """
    if not (q > 0 and s > 0):
        raise NormError("Lorentz indices must be positive")
    vals, count, _ = _prepare(f, region)
    if count == 0:
        raise GridError("region contains no grid nodes")
    if _warn_zero(vals):
        return 0.0
    unit = f.grid.cell_volume if not averaged else 1.0 / count
    if method == "quadrature":
        return _lorentz_quadrature(vals, unit, q, s)
    if method != "exact":
        raise NormError(f"unknown method {method!r}")
    return float(_lorentz_from_sorted(_sorted_desc(vals[vals > 0]), unit, q, s))


def marcinkiewicz_norm(f: GridField, q: float, region: Region = None, averaged: bool = False, method="exact") -> float:
    """Marcinkiewicz (weak-``L^q``) norm ``sup lam * mu_f(lam)**(1/q)``.

    The supremum over ``lambda`` is attained just below a nodal value, so
    the exact evaluation scans the sorted values.
    """
    return lorentz_norm(f, q, math.inf, region, averaged, method)


# ---------------------------------------------------------------------------
# ball suprema


def _default_rmax(grid: Grid, region: Region, mask: np.ndarray, bracketed: bool) -> float:
    if isinstance(region, Ball):
        return region.radius if bracketed else 2.0 * region.radius
    idx = np.nonzero(mask)
    span = [grid.h * (int(i.max()) - int(i.min())) for i in idx]
    return math.sqrt(sum(x * x for x in span)) + grid.h


class _BallScan:
    """Crop a region, enumerate admissible balls and reduce over them."""

    def __init__(self, f: Optional[GridField], grid: Grid, region: Region, radii, bracketed: bool, center_stride):
        self.grid = grid
        mask = region_mask(grid, region)
        if not mask.any():
            raise GridError("region contains no grid nodes")
        self.sl = region_bbox(grid, mask)
        self.sub = grid.subgrid(self.sl)
        self.mask = mask[self.sl]
        if radii is None:
            radii, _ = dyadic_ladder(_default_rmax(grid, region, mask, bracketed), grid.h)
        self.radii = [float(r) for r in radii]
        self.truncated = any(r < grid.h * (1 - 1e-12) for r in self.radii)
        if self.truncated:
            warnings.warn("ball ladder truncated at the grid resolution", RuntimeWarning, stacklevel=3)
            self.radii = [r for r in self.radii if r >= grid.h * (1 - 1e-12)]
        self.red = BallReducer(self.sub, max(self.radii) if self.radii else grid.h)
        if bracketed and isinstance(region, (Ball, Box)):
            self.family = enumerate_balls(
                self.sub, region, self.radii, restricted=True, center_stride=center_stride, center_mask=self.mask
            )
        else:
            self.family = enumerate_balls(self.sub, None, self.radii, center_stride=center_stride, center_mask=self.mask)
            if bracketed:
                # generic mask: keep balls whose nodes all lie in the region
                Pout = self.red.padded(~self.mask)
                Pout[self._pad_frame(Pout.shape)] = 1.0
                for lv in self.family.levels:
                    if len(lv.centers):
                        bad = self.red.sums_padded(Pout, lv.centers, lv.radius)
                        lv.centers = lv.centers[bad == 0]
        self.mask_padded = self.red.padded(self.mask)

    def _pad_frame(self, shape):
        frame = np.ones(shape, dtype=bool)
        inner = tuple(slice(self.red.pad, s - self.red.pad) for s in shape)
        frame[inner] = False
        return frame

    def levels(self):
        for lv in self.family.levels:
            if len(lv.centers):
                yield lv

    def counts(self, lv) -> np.ndarray:
        return self.red.sums_padded(self.mask_padded, lv.centers, lv.radius)

    def gathered(self, P: np.ndarray, lv, budget: int = 4_000_000):
        """Yield ``(center_slice, matrix)`` chunks of per-ball nodal values."""
        k = max(1, len(_offsets_for(self.sub, lv.radius)))
        step = max(1, budget // k)
        for a in range(0, len(lv.centers), step):
            yield slice(a, a + step), self.red.gather(P, lv.centers[a : a + step], lv.radius)


def _offsets_for(grid, r):
    from .grid import ball_offsets

    return ball_offsets(r, grid.h, grid.n)


def _average_factor(grid: Grid, mask: np.ndarray, exponent: float) -> float:
    return (float(mask.sum()) * grid.cell_volume) ** exponent


def morrey_norm(
    f: GridField,
    q: float,
    theta: float,
    region: Region = None,
    variant: str = "centered",
    radii: Optional[Sequence[float]] = None,
    center_stride="auto",
    return_argmax: bool = False,
):
    """Morrey norm ``sup R**((theta-n)/q) ||f||_{L^q(B_R ∩ region)}``.

    Parameters
    ----------
    f : GridField
    q : float
        ``q >= 1``.
    theta : float
        In ``[0, n]``.
    region : Region
    variant : {"centered", "bracketed", "averaged", "averaged-literal"}
        ``centered``: balls centred in the region, intersected with it.
        ``bracketed``: balls contained in the region.
        ``averaged``: the centered norm divided by ``|region|**(theta/(n q))``,
        a scale-consistent normalization with the units of ``f``.
        ``averaged-literal``: the per-ball mean ``(avg_{B_R ∩ region} |f|**q)**(1/q)``.
    radii : sequence of float, optional
        Ball ladder; defaults to the dyadic ladder from the region size to ``h``.
    center_stride : int or "auto"
    return_argmax : bool
        Also return ``(center, radius)`` of the maximizing ball.
    """
    n = f.grid.n
    if q < 1:
        raise NormError("Morrey norms need q >= 1")
    if not (0 <= theta <= n):
        raise NormError(f"theta must lie in [0, {n}]")
    if variant not in ("centered", "bracketed", "averaged", "averaged-literal"):
        raise NormError(f"unknown variant {variant!r}")
    scan = _BallScan(f, f.grid, region, radii, variant == "bracketed", center_stride)
    mag = f.magnitude().values[scan.sl] * scan.mask
    P = scan.red.padded(mag**q)
    best, arg = 0.0, None
    for lv in scan.levels():
        sums = scan.red.sums_padded(P, lv.centers, lv.radius)
        if variant == "averaged-literal":
            vals = (sums / scan.counts(lv)) ** (1.0 / q)
        else:
            vals = (sums * f.grid.cell_volume) ** (1.0 / q)
        vals = vals * lv.radius ** ((theta - n) / q)
        j = int(np.argmax(vals))
        if vals[j] > best:
            best, arg = float(vals[j]), (tuple(scan.sub.node_position(lv.centers[j])), lv.radius)
    if variant == "averaged":
        best /= _average_factor(f.grid, scan.mask, theta / (n * q))
    return (best, arg) if return_argmax else best


def lorentz_morrey_norm(
    f: GridField,
    t: float,
    q: float,
    theta: float,
    region: Region = None,
    variant: str = "centered",
    radii: Optional[Sequence[float]] = None,
    center_stride="auto",
    return_argmax: bool = False,
):
    """Lorentz-Morrey norm ``sup R**((theta-n)/t) ||f||_{L(t,q)(B_R ∩ region)}``.

    ``q = inf`` gives the Marcinkiewicz-Morrey norm.  Variants are as in
    :func:`morrey_norm`; the averaged normalization divides by
    ``|region|**(theta/(n t))``.
    """
    n = f.grid.n
    if not (t > 0 and q > 0):
        raise NormError("Lorentz indices must be positive")
    if not (0 <= theta <= n):
        raise NormError(f"theta must lie in [0, {n}]")
    if variant not in ("centered", "bracketed", "averaged", "averaged-literal"):
        raise NormError(f"unknown variant {variant!r}")
    scan = _BallScan(f, f.grid, region, radii, variant == "bracketed", center_stride)
    mag = f.magnitude().values[scan.sl] * scan.mask
    P = scan.red.padded(mag)
    best, arg = 0.0, None
    for lv in scan.levels():
        counts = scan.counts(lv) if variant == "averaged-literal" else None
        for sl, M in scan.gathered(P, lv):
            vd = _sorted_desc(M, axis=1)
            unit = 1.0 / counts[sl] if counts is not None else f.grid.cell_volume
            vals = _lorentz_from_sorted(vd, unit, t, q) * lv.radius ** ((theta - n) / t)
            j = int(np.argmax(vals))
            if vals[j] > best:
                best, arg = float(vals[j]), (tuple(scan.sub.node_position(lv.centers[sl][j])), lv.radius)
    if variant == "averaged":
        best /= _average_factor(f.grid, scan.mask, theta / (n * t))
    return (best, arg) if return_argmax else best


def marcinkiewicz_morrey_norm(f: GridField, t: float, theta: float, region: Region = None, **kw):
    """Marcinkiewicz-Morrey norm, the ``q = inf`` Lorentz-Morrey norm."""
    return lorentz_morrey_norm(f, t, math.inf, theta, region, **kw)


# ---------------------------------------------------------------------------
# L log L


def _llogl_values(vals: np.ndarray, unit: float) -> float:
    mean = vals.mean()
    if mean <= 0:
        return 0.0
    return float(np.sum(vals * np.log(math.e + vals / mean)) * unit)


def llogl_norm(
    f: GridField,
    region: Region = None,
    theta: Optional[float] = None,
    averaged: bool = False,
    radii: Optional[Sequence[float]] = None,
    center_stride="auto",
    variant: str = "centered",
) -> float:
    """Integral form of the ``L log L`` norm, ``int |f| log(e + |f| / mean|f|)``.

    With ``theta`` the supremum over balls of ``R**(theta-n)`` times the
    same quantity on ``B_R ∩ region`` (mean taken over that set).
    ``averaged`` divides the plain form by ``|region|``.
    """
    if theta is None:
        vals, count, _ = _prepare(f, region)
        if count == 0:
            raise GridError("region contains no grid nodes")
        if _warn_zero(vals):
            return 0.0
        val = _llogl_values(vals, f.grid.cell_volume)
        return val / (count * f.grid.cell_volume) if averaged else val
    n = f.grid.n
    if not (0 <= theta <= n):
        raise NormError(f"theta must lie in [0, {n}]")
    scan = _BallScan(f, f.grid, region, radii, variant == "bracketed", center_stride)
    mag = f.magnitude().values[scan.sl] * scan.mask
    P = scan.red.padded(mag)
    best = 0.0
    for lv in scan.levels():
        counts = scan.counts(lv)
        for sl, M in scan.gathered(P, lv):
            mean = M.sum(axis=1) / counts[sl]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(mean[:, None] > 0, M / mean[:, None], 0.0)
            vals = np.sum(M * np.log(math.e + ratio), axis=1) * f.grid.cell_volume * lv.radius ** (theta - n)
            best = max(best, float(vals.max()))
    if averaged:
        best /= _average_factor(f.grid, scan.mask, theta / n)
    return best


def llogl_luxemburg(f: GridField, region: Region = None, rtol: float = 1e-12) -> float:
    """Luxemburg ``L log L`` norm ``inf{lam : int |f/lam| log(e + |f/lam|) <= 1}``."""
    vals, count, _ = _prepare(f, region)
    if count == 0:
        raise GridError("region contains no grid nodes")
    if not np.any(vals > 0):
        return 0.0
    unit = f.grid.cell_volume

    def modular(lam):
        x = vals / lam
        return float(np.sum(x * np.log(math.e + x)) * unit)

    lo, hi = 1e-300, max(float(vals.max()), 1.0)
    while modular(hi) > 1.0:
        hi *= 2.0
    lo = hi / 2.0
    while modular(lo) <= 1.0 and lo > 1e-300:
        hi = lo
        lo /= 2.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if modular(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return hi


# ---------------------------------------------------------------------------
# embedding chain


def embedding_chain_check(f: GridField, q: float, t: float, r: float, region: Region = None, rtol: float = 1e-10):
    """Check the chain ``L^r ⊂ L(t,q) ⊂ L^t ⊂ L(t,r) ⊂ L^q`` with explicit constants.

    On a set ``A`` of finite measure the inclusions hold with

    * ``||f||_{L(t,q)} <= (q (1/t - 1/r))**(-1/q) |A|**(1/t-1/r) ||f||_{L^r}``
    * ``||f||_{L^t} <= (q/t)**(1/q - 1/t) ||f||_{L(t,q)}``
    * ``||f||_{L(t,r)} <= ||f||_{L^t}`` (``r > t``)
    * ``||f||_{L^q} <= (t/(t-q))**(1/q) |A|**(1/q-1/t) ||f||_{M^t}`` and
      ``||f||_{M^t} <= (r/t)**(1/r) ||f||_{L(t,r)}``.

    Returns
    -------
    EstimateReport
        ``lhs`` / ``rhs_terms`` hold the norms; ``details`` lists every
        step with its bound and empirical constant.
    """
    from .reports import EstimateReport

    if not (0 < q < t < r <= math.inf):
        raise NormError("need 0 < q < t < r <= inf")
    mask = region_mask(f.grid, region)
    A = float(mask.sum()) * f.grid.cell_volume
    nr = lebesgue_norm(f, r, region)
    ntq = lorentz_norm(f, t, q, region)
    nt = lebesgue_norm(f, t, region)
    ntr = lorentz_norm(f, t, r, region) if not math.isinf(r) else marcinkiewicz_norm(f, t, region)
    nq = lebesgue_norm(f, q, region)
    mt = marcinkiewicz_norm(f, t, region)
    inv_r = 0.0 if math.isinf(r) else 1.0 / r
    steps = [
        ("L^r -> L(t,q)", nr, ntq, (q * (1 / t - inv_r)) ** (-1 / q) * A ** (1 / t - inv_r)),
        ("L(t,q) -> L^t", ntq, nt, (q / t) ** (1 / q - 1 / t)),
        ("L^t -> L(t,r)", nt, ntr, 1.0),
        ("L(t,r) -> M^t", ntr, mt, 1.0 if math.isinf(r) else (r / t) ** (1 / r)),
        ("M^t -> L^q", mt, nq, (t / (t - q)) ** (1 / q) * A ** (1 / q - 1 / t)),
    ]
    details, ok = [], True
    worst = 0.0
    for name, small, big, const in steps:
        emp = big / small if small > 0 else 0.0
        holds = big <= const * small * (1 + rtol) + 1e-300
        ok &= holds
        worst = max(worst, emp / const if const > 0 else 0.0)
        details.append({"step": name, "bound": const, "empirical": emp, "holds": bool(holds)})
    return EstimateReport(
        estimate_id="A1-EmbeddingChain",
        lhs=nq,
        rhs_terms={"L^r": nr, "L(t,q)": ntq, "L^t": nt, "L(t,r)": ntr, "M^t": mt},
        empirical_constant=worst,
        params={"q": q, "t": t, "r": r, "measure": A},
        refinement_stability=float("nan"),
        passed=bool(ok),
        details={"steps": details},
    )


# ---------------------------------------------------------------------------
# generic evaluation and CSV


def evaluate(spec: NormSpec, f: GridField, region: Region = None, method: str = "exact", **kw) -> float:
    """Evaluate a :class:`NormSpec` on a field."""
    fam = spec.family
    morrey_variant = "bracketed" if spec.bracketed else ("averaged" if spec.averaged else "centered")
    if fam == "lebesgue":
        return lebesgue_norm(f, spec.q, region, spec.averaged)
    if fam == "lorentz":
        return lorentz_norm(f, spec.q, spec.s, region, spec.averaged, method)
    if fam == "marcinkiewicz":
        return marcinkiewicz_norm(f, spec.q, region, spec.averaged, method)
    if fam == "morrey":
        return morrey_norm(f, spec.q, spec.theta, region, morrey_variant, **kw)
    if fam == "lorentzmorrey":
        return lorentz_morrey_norm(f, spec.q, spec.s, spec.theta, region, morrey_variant, **kw)
    if fam == "marcinkiewiczmorrey":
        return lorentz_morrey_norm(f, spec.q, math.inf, spec.theta, region, morrey_variant, **kw)
    if fam == "llogl":
        return llogl_norm(f, region, None, spec.averaged)
    return llogl_norm(f, region, spec.theta, spec.averaged, variant="bracketed" if spec.bracketed else "centered", **kw)


def quadrature_error(spec: NormSpec, f: GridField, region: Region = None) -> float:
    """Relative gap between the exact and the 512-point quadrature evaluation.

    Only the Lorentz and Marcinkiewicz families have a quadrature path;
    other families report 0.
    """
    if spec.family not in ("lorentz", "marcinkiewicz"):
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroFieldWarning)
        a = evaluate(spec, f, region, "exact")
        b = evaluate(spec, f, region, "quadrature")
    return abs(a - b) / a if a > 0 else 0.0


def norm_rows_csv(rows) -> str:
    """CSV text with columns ``spec, region, value, quadrature_error``."""
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["spec", "region", "value", "quadrature_error"])
    for spec, region, value, err in rows:
        w.writerow([spec, region, repr(float(value)), repr(float(err))])
    return buf.getvalue()


def describe_region(region: Region) -> str:
    if region is None:
        return "grid"
    if isinstance(region, Ball):
        return "ball(" + ",".join(f"{c:g}" for c in region.center) + f";{region.radius:g})"
    if isinstance(region, Box):
        return "box(" + ",".join(f"{c:g}" for c in region.lo) + ";" + ",".join(f"{c:g}" for c in region.hi) + ")"
    return type(region).__name__.lower()


def with_averaged(spec: NormSpec, averaged: bool = True) -> NormSpec:
    return replace(spec, averaged=averaged)
