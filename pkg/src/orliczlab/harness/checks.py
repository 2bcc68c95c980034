"""Both sides of the quantitative estimates, evaluated on solved instances.

Every check takes one instance or a sequence of the same problem at
increasing resolution.  The empirical constant is read off the finest
member; ``refinement_stability`` compares the last two members and is
``nan`` (hence a failing report) when only one resolution is given.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from ..grid import Annulus, Ball, Box, GridField, gradient, integrate, region_mask, region_measure
from ..maximal import restricted_M0, restricted_M1
from ..norms import (
    lebesgue_norm,
    llogl_norm,
    lorentz_morrey_norm,
    lorentz_norm,
    marcinkiewicz_norm,
    morrey_norm,
)
from ..reports import EstimateReport, SuperLevelParams, stability
from ..solver import solve_comparison
from ..young import admissible_fraction, estimate_indices, plaplace_normalized
from .instances import Instance, dirac_sola

__all__ = [
    "PreconditionError",
    "theorem1_bound",
    "morrey_bound",
    "check_theorem1_lorentz",
    "check_corollary_llogl",
    "check_theorem2_morrey",
    "check_corollary_borderline_morrey",
    "check_theorem3_lorentz_morrey",
    "check_comparison",
    "check_superlevel",
    "check_maximal_lorentz",
    "check_prelim_morrey",
    "check_reverse_holder",
    "check_higher_integrability",
    "check_caccioppoli",
    "check_morrey_decay",
    "fit_higher_integrability",
    "probe_sharpness",
    "CHI_STEP",
]

CHI_STEP = 1.0 / 32.0
DEFAULT_THRESHOLD = 0.25


class PreconditionError(ValueError):
    """Parameters outside the range where an estimate is claimed.

    ``interval`` holds the admissible interval as printable text.
    """

    def __init__(self, message: str, interval: Optional[str] = None):
        super().__init__(message)
        self.interval = interval


# ---------------------------------------------------------------------------
# ranges


def _indices(inst: Instance):
    G = inst.spec.modular
    cache = getattr(_indices, "_cache", None)
    if cache is None:
        cache = _indices._cache = {}
    key = G.descriptor
    if key not in cache:
        ip = estimate_indices(G, "G")
        # snap estimates that agree with a simple fraction to it
        cache[key] = tuple(_snap(v) for v in (ip.i_lower, ip.s_upper))
    return cache[key]


def _snap(x: float, tol: float = 1e-8) -> float:
    fr = Fraction(x).limit_denominator(64)
    return float(fr) if abs(float(fr) - x) <= tol * max(1.0, abs(x)) else x


def theorem1_bound(i_G: float, s_G: float, n: int) -> float:
    """Upper end ``n i_G / (n s_G - n + i_G)`` of the Lorentz-data range."""
    return n * i_G / (n * s_G - n + i_G)


def morrey_bound(i_G: float, s_G: float, theta: float) -> float:
    """Upper end ``theta i_G / (theta s_G - theta + i_G)`` of the Morrey-data range."""
    return theta * i_G / (theta * s_G - theta + i_G)


def _require_q(q: float, bound: float, what: str):
    if not (1.0 < q <= bound * (1 + 1e-12)):
        interval = f"(1, {admissible_fraction(bound)}]"
        raise PreconditionError(f"{what}: q={q:g} outside the admissible range {interval}", interval)


def _require_theta(theta: float, i_G: float, n: int):
    if not (i_G - 1e-12 <= theta <= n):
        raise PreconditionError(
            f"theta={theta:g} outside [i_G, n] = [{admissible_fraction(i_G)}, {n}]",
            f"[{admissible_fraction(i_G)}, {n}]",
        )


# ---------------------------------------------------------------------------
# helpers


def _family(instances) -> list:
    if isinstance(instances, Instance):
        return [instances]
    fam = list(instances)
    if not fam:
        raise ValueError("no instances given")
    return fam


def _center(inst: Instance, center):
    return tuple(center) if center is not None else (0.0,) * inst.grid.n


def _mean(f: GridField, region) -> float:
    return integrate(f, region) / region_measure(f.grid, region)


def _ratio(lhs: float, rhs: float) -> float:
    if rhs > 0:
        return lhs / rhs
    return 0.0 if lhs == 0 else math.inf


def _assemble(estimate_id, fam, rows, params, threshold, extra=None) -> EstimateReport:
    """``rows`` holds ``(lhs, rhs_terms, details)`` per instance."""
    consts = [_ratio(lhs, sum(rhs.values())) for lhs, rhs, _ in rows]
    drift = stability(consts[-2], consts[-1]) if len(consts) > 1 else math.nan
    lhs, rhs, det = rows[-1]
    c = consts[-1]
    details = {
        "constants": consts,
        "resolutions": [inst.grid.cells_per_axis[0] for inst in fam],
        "per_resolution": [d for _, _, d in rows],
        "threshold": threshold,
    }
    if extra:
        details.update(extra)
    passed = bool(math.isfinite(c) and drift <= threshold)
    return EstimateReport(estimate_id, float(lhs), dict(rhs), float(c), dict(params), float(drift), passed, details)


def _ladder_report(estimate_id, fam, per_inst, params, threshold, extra=None) -> EstimateReport:
    """Reports whose constant is the max over a ball ladder.

    ``per_inst`` holds, per instance, a list of ``(lhs, rhs)`` per radius.
    Pass requires finiteness, refinement drift and ladder spread
    ``(max - min) / max`` all within the threshold.
    """
    consts, spreads = [], []
    for rows in per_inst:
        ratios = [_ratio(l, r) for l, r in rows]
        finite = [x for x in ratios if math.isfinite(x)]
        cmax = max(ratios)
        consts.append(cmax)
        spreads.append((cmax - min(finite)) / cmax if finite and cmax > 0 and math.isfinite(cmax) else math.nan)
    drift = stability(consts[-2], consts[-1]) if len(consts) > 1 else math.nan
    last = per_inst[-1]
    j = int(np.argmax([_ratio(l, r) for l, r in last]))
    details = {
        "constants": consts,
        "ladder_spread": spreads,
        "ratios": [[_ratio(l, r) for l, r in rows] for rows in per_inst],
        "resolutions": [inst.grid.cells_per_axis[0] for inst in fam],
        "threshold": threshold,
    }
    if extra:
        details.update(extra)
    c = consts[-1]
    passed = bool(
        math.isfinite(c) and drift <= threshold and all(s <= threshold for s in spreads if not math.isnan(s))
        and not any(math.isnan(s) for s in spreads)
    )
    return EstimateReport(
        estimate_id, float(last[j][0]), {"rhs": float(last[j][1])}, float(c), dict(params), float(drift), passed, details
    )


# ---------------------------------------------------------------------------
# main theorems


def check_theorem1_lorentz(instances, q: float = 1.1, s: float = 1.1, R: float = 0.4, center=None,
                           threshold: float = DEFAULT_THRESHOLD) -> EstimateReport:
    """Averaged ``L(nq/(n-q), s)`` norm of ``g(|Du|)`` on ``B_{R/2}`` against
    ``g(avg_{B_2R} |Du|) + ||mu||`` (averaged ``L(q, s)`` on ``B_R``)."""
    fam = _family(instances)
    n = fam[0].grid.n
    i_G, s_G = _indices(fam[0])
    bound = theorem1_bound(i_G, s_G, n)
    _require_q(q, bound, "Lorentz-data estimate")
    if not s > 0:
        raise PreconditionError("s must be positive")
    target = n * q / (n - q)
    rows = []
    for inst in fam:
        c = _center(inst, center)
        lhs = lorentz_norm(inst.g_grad, target, s, Ball(c, R / 2), averaged=True)
        mean = _mean(inst.grad_norm, Ball(c, 2 * R))
        rhs = {
            "g(avg|Du|)": float(inst.spec.modular.g(mean)),
            "mu": lorentz_norm(inst.abs_data, q, s, Ball(c, R), averaged=True) if not inst.is_homogeneous else 0.0,
        }
        rows.append((lhs, rhs, {"avg_grad": mean}))
    params = {"q": q, "s": s, "R": R, "instance": fam[-1].name, "target_q": target}
    return _assemble("Thm1-Lorentz", fam, rows, params, threshold, {"q_bound": bound})


def check_corollary_llogl(instances, R: float = 0.4, center=None,
                          threshold: float = DEFAULT_THRESHOLD) -> EstimateReport:
    """Averaged ``L^{n/(n-1)}`` norm of ``g(|Du|)`` on ``B_{R/2}`` against the
    averaged ``L log L`` norm of the density on ``B_R``."""
    fam = _family(instances)
    for inst in fam:
        if inst.has_atoms:
            raise PreconditionError("the L log L estimate needs data given by a density; this measure has atoms")
    n = fam[0].grid.n
    e = n / (n - 1)
    rows, integrals = [], []
    for inst in fam:
        c = _center(inst, center)
        lhs = lebesgue_norm(inst.g_grad, e, Ball(c, R / 2), averaged=True)
        mean = _mean(inst.grad_norm, Ball(c, R))
        rhs = {
            "g(avg|Du|)": float(inst.spec.modular.g(mean)),
            "mu": llogl_norm(inst.abs_data, Ball(c, R), averaged=True) if not inst.is_homogeneous else 0.0,
        }
        gi = integrate(inst.g_grad.map(lambda v: v**e), Ball(c, R))
        integrals.append(gi)
        rows.append((lhs, rhs, {"int_g_pow": gi}))
    gdrift = stability(integrals[-2], integrals[-1]) if len(integrals) > 1 else math.nan
    rep = _assemble("Cor-LlogL", fam, rows, {"R": R, "instance": fam[-1].name}, threshold,
                    {"int_g_pow": integrals, "int_g_pow_drift": gdrift})
    rep.passed = bool(rep.passed and all(math.isfinite(x) for x in integrals) and gdrift <= threshold)
    return rep


def check_theorem2_morrey(instances, q: float = 1.1, theta: float = 2.5, R: float = 0.4, center=None,
                          threshold: float = DEFAULT_THRESHOLD) -> EstimateReport:
    """Averaged Morrey norm ``L^{theta q/(theta-q), theta}`` of ``g(|Du|)`` on
    ``B_{R/2}`` against ``R**((theta-q)/q - n) g(avg_{B_2R}|Du|)`` plus the
    averaged ``L^{q, theta}`` norm of the data on ``B_R``."""
    fam = _family(instances)
    n = fam[0].grid.n
    i_G, s_G = _indices(fam[0])
    _require_theta(theta, i_G, n)
    bound = morrey_bound(i_G, s_G, theta)
    _require_q(q, bound, "Morrey-data estimate")
    target = theta * q / (theta - q)
    rows = []
    for inst in fam:
        c = _center(inst, center)
        lhs = morrey_norm(inst.g_grad, target, theta, Ball(c, R / 2), variant="averaged")
        mean = _mean(inst.grad_norm, Ball(c, 2 * R))
        rhs = {
            "R-weighted g(avg|Du|)": R ** ((theta - q) / q - n) * float(inst.spec.modular.g(mean)),
            "mu": morrey_norm(inst.abs_data, q, theta, Ball(c, R), variant="averaged") if not inst.is_homogeneous else 0.0,
        }
        rows.append((lhs, rhs, {"avg_grad": mean}))
    params = {"q": q, "theta": theta, "R": R, "instance": fam[-1].name}
    return _assemble("Thm2-Morrey", fam, rows, params, threshold, {"q_bound": bound})


def check_corollary_borderline_morrey(instances, theta: float = 2.5, R: float = 0.4, center=None,
                                      threshold: float = DEFAULT_THRESHOLD) -> EstimateReport:
    """Borderline ``q = 1`` Morrey case: Marcinkiewicz-Morrey ``M^{theta/(theta-1), theta}``
    of ``g(|Du|)`` on ``B_{R/2}`` against the averaged ``L^{1, theta}`` data norm."""
    fam = _family(instances)
    n = fam[0].grid.n
    i_G, _ = _indices(fam[0])
    _require_theta(theta, i_G, n)
    t = theta / (theta - 1)
    rows = []
    for inst in fam:
        c = _center(inst, center)
        lhs = lorentz_morrey_norm(inst.g_grad, t, math.inf, theta, Ball(c, R / 2), variant="averaged")
        mean = _mean(inst.grad_norm, Ball(c, 2 * R))
        rhs = {
            "R-weighted g(avg|Du|)": R ** ((theta - 1) - n) * float(inst.spec.modular.g(mean)),
            "mu": morrey_norm(inst.abs_data, 1.0, theta, Ball(c, R), variant="averaged") if not inst.is_homogeneous else 0.0,
        }
        rows.append((lhs, rhs, {"avg_grad": mean}))
    return _assemble("Cor-BorderlineMorrey", fam, rows, {"theta": theta, "R": R, "instance": fam[-1].name}, threshold)


def check_theorem3_lorentz_morrey(instances, q: float = 1.1, s: float = math.inf, theta: float = 2.5,
                                  R: float = 0.4, center=None, threshold: float = DEFAULT_THRESHOLD) -> EstimateReport:
    """Averaged ``L^theta(theta q/(theta-q), theta s/(theta-q))`` norm of
    ``g(|Du|)`` on ``B_{R/4}`` against ``g(avg_{B_R}|Du|)`` plus the averaged
    ``L^theta(q, s)`` data norm on ``B_R``; ``s = inf`` is the
    Marcinkiewicz-Morrey branch."""
    fam = _family(instances)
    n = fam[0].grid.n
    i_G, s_G = _indices(fam[0])
    _require_theta(theta, i_G, n)
    bound = morrey_bound(i_G, s_G, theta)
    _require_q(q, bound, "Lorentz-Morrey-data estimate")
    if not s > 0:
        raise PreconditionError("s must be positive")
    t_lhs = theta * q / (theta - q)
    s_lhs = theta * s / (theta - q) if math.isfinite(s) else math.inf
    rows = []
    for inst in fam:
        c = _center(inst, center)
        lhs = lorentz_morrey_norm(inst.g_grad, t_lhs, s_lhs, theta, Ball(c, R / 4), variant="averaged")
        mean = _mean(inst.grad_norm, Ball(c, R))
        rhs = {
            "g(avg|Du|)": float(inst.spec.modular.g(mean)),
            "mu": lorentz_morrey_norm(inst.abs_data, q, s, theta, Ball(c, R), variant="averaged")
            if not inst.is_homogeneous else 0.0,
        }
        rows.append((lhs, rhs, {"avg_grad": mean}))
    params = {"q": q, "s": s, "theta": theta, "R": R, "instance": fam[-1].name}
    return _assemble("Thm3-LorentzMorrey", fam, rows, params, threshold, {"q_bound": bound})


def check_maximal_lorentz(instances, t: float = 1.5, gamma: float = 1.5, R: float = 0.4, chi: float = 1.0,
                          center=None, threshold: float = DEFAULT_THRESHOLD) -> EstimateReport:
    """Averaged ``L(t, gamma)`` of ``g(|Du|)`` on ``B/2`` against
    ``g(avg_{2B}|Du|)`` plus the averaged ``L(t, gamma)`` norm of ``M*_{1;2B}`` of
    the data on ``B``; ``t`` must lie in ``[1, chi i_G/(s_G-1))``."""
    fam = _family(instances)
    i_G, s_G = _indices(fam[0])
    upper = chi * i_G / (s_G - 1) if s_G > 1 else math.inf
    if not (1.0 <= t < upper):
        raise PreconditionError(f"t={t:g} outside [1, {upper:.6g})", f"[1, {upper:.6g})")
    rows = []
    for inst in fam:
        c = _center(inst, center)
        lhs = lorentz_norm(inst.g_grad, t, gamma, Ball(c, R / 2), averaged=True)
        mean = _mean(inst.grad_norm, Ball(c, 2 * R))
        if inst.is_homogeneous:
            mterm = 0.0
        else:
            M1 = restricted_M1(inst.abs_data, Ball(c, 2 * R))
            mterm = lorentz_norm(GridField(inst.grid, M1.values), t, gamma, Ball(c, R), averaged=True)
        rhs = {"g(avg|Du|)": float(inst.spec.modular.g(mean)), "M1 mu": mterm}
        rows.append((lhs, rhs, {"avg_grad": mean}))
    params = {"t": t, "gamma": gamma, "R": R, "chi": chi, "instance": fam[-1].name}
    return _assemble("Prop53-MaximalLorentz", fam, rows, params, threshold, {"t_interval": [1.0, upper]})


def check_prelim_morrey(instances, q: float = 1.1, theta: float = 2.5, inner: float = 0.25, outer: float = 0.5,
                        center=None, threshold: float = DEFAULT_THRESHOLD) -> EstimateReport:
    """Bracketed ``L^{1, (theta-q)/q}`` seminorm of ``g(|Du|)`` on the box of
    half-width ``inner`` against ``dist**((theta-q)/q - n) ||g(|Du|)||_{L^1}``
    plus ``||mu||_{L^{q, theta}}`` on the box of half-width ``outer``."""
    fam = _family(instances)
    n = fam[0].grid.n
    if not outer > inner:
        raise PreconditionError("nested regions need positive separation")
    if not (0 < q <= theta <= n):
        raise PreconditionError(f"need 0 < q <= theta <= {n}")
    th1 = (theta - q) / q
    rows = []
    for inst in fam:
        c = np.asarray(_center(inst, center))
        om1 = Box(tuple(c - inner), tuple(c + inner))
        om2 = Box(tuple(c - outer), tuple(c + outer))
        dist = outer - inner
        if dist < inst.grid.h:
            raise PreconditionError("nested regions are less than one cell apart")
        lhs = morrey_norm(inst.g_grad, 1.0, th1, om1, variant="bracketed")
        rhs = {
            "dist-weighted L1": dist ** (th1 - n) * integrate(inst.g_grad, om2),
            "mu": morrey_norm(inst.abs_data, q, theta, om2) if not inst.is_homogeneous else 0.0,
        }
        rows.append((lhs, rhs, {"dist": dist}))
    params = {"q": q, "theta": theta, "inner": inner, "outer": outer, "instance": fam[-1].name}
    return _assemble("Prop54-PrelimMorrey", fam, rows, params, threshold)


# ---------------------------------------------------------------------------
# comparison estimate


def check_comparison(instances, radii: Sequence[float] = (0.9, 0.45, 0.225, 0.1125), center=None,
                     q: float = 1.1, theta: float = 2.5, threshold: float = DEFAULT_THRESHOLD) -> EstimateReport:
    """``avg_{B_R} g(|Du - Dv|)`` against ``|mu|(B_R) / R**(n-1)`` on a ball ladder.

    Balls with no data mass are reported (their left side should vanish to
    solver tolerance) but excluded from the ratio.  For density data the
    variants ``int g(|Du-Dv|) <= c R int |f|`` and
    ``int g(|Du-Dv|) <= c R**((q-theta)/q) ||f||_{L^{q,theta}}`` are recorded too.
    """
    fam = _family(instances)
    per_inst, skipped, variants = [], [], []
    for inst in fam:
        n = inst.grid.n
        c = _center(inst, center)
        rows, sk, var = [], [], []
        for R in radii:
            ball = Ball(c, R)
            v = solve_comparison(inst.spec, inst.solution, ball)
            diff = GridField(v.grid, inst.u.values[v.window] - v.u.values)
            gd = inst.spec.modular.g(gradient(diff).magnitude().values[v.unknown])
            lhs = float(np.mean(gd))
            mass = integrate(inst.abs_data, ball)
            if mass == 0:
                sk.append({"R": R, "lhs": lhs, "solver_tol": v.tolerance})
                continue
            rows.append((lhs, mass * R ** (1 - n)))
            if inst.kind == "density":
                total = lhs * float(v.unknown.sum()) * inst.grid.cell_volume
                mor = morrey_norm(inst.abs_data, q, theta, ball)
                var.append({"R": R, "first": total / (R * mass), "morrey": total / (R ** ((q - theta) / q) * mor)})
        if not rows:
            raise PreconditionError("no ladder ball carries data mass")
        per_inst.append(rows)
        skipped.append(sk)
        variants.append(var)
    params = {"radii": ",".join(f"{r:g}" for r in radii), "instance": fam[-1].name}
    return _ladder_report("Prop42-Comparison", fam, per_inst, params, threshold,
                          {"skipped": skipped, "variants": variants})


# ---------------------------------------------------------------------------
# homogeneous problem


def _ball_mean(values: np.ndarray, mask: np.ndarray) -> float:
    return float(values[mask].mean())


def _homog_rows(inst: Instance, radii, center, fn):
    c = _center(inst, center)
    rows = []
    for R in radii:
        mR = region_mask(inst.grid, Ball(c, R))
        m2R = region_mask(inst.grid, Ball(c, 2 * R))
        rows.append(fn(inst, R, mR, m2R))
    return rows


def check_reverse_holder(instances, radii: Sequence[float] = (0.2, 0.3, 0.4), center=None,
                         threshold: float = DEFAULT_THRESHOLD) -> EstimateReport:
    """``avg_{B_R} G(|Dv|)`` against ``G(avg_{B_2R} |Dv|)``."""
    fam = _family(instances)

    def fn(inst, R, mR, m2R):
        G = inst.spec.modular
        gn = inst.grad_norm.values
        return _ball_mean(G.G(gn), mR), float(G.G(_ball_mean(gn, m2R)))

    per = [_homog_rows(inst, radii, center, fn) for inst in fam]
    return _ladder_report("P41i-RevHolder", fam, per, {"radii": _rstr(radii), "instance": fam[-1].name}, threshold)


def check_caccioppoli(instances, radii: Sequence[float] = (0.2, 0.3, 0.4), center=None,
                      threshold: float = DEFAULT_THRESHOLD) -> EstimateReport:
    """``int_{B_R} G(|Dv|)`` against ``int_{B_2R} G(|v - (v)_{B_R}| / R)``."""
    fam = _family(instances)

    def fn(inst, R, mR, m2R):
        G = inst.spec.modular
        vol = inst.grid.cell_volume
        u = inst.u.values
        mean = _ball_mean(u, mR)
        lhs = float(np.sum(G.G(inst.grad_norm.values[mR]))) * vol
        rhs = float(np.sum(G.G(np.abs(u[m2R] - mean) / R))) * vol
        return lhs, rhs

    per = [_homog_rows(inst, radii, center, fn) for inst in fam]
    return _ladder_report("P41iii-Caccioppoli", fam, per, {"radii": _rstr(radii), "instance": fam[-1].name}, threshold)


def check_morrey_decay(instances, R: float = 0.4, rhos: Sequence[float] = (0.1, 0.2, 0.3), center=None,
                       threshold: float = DEFAULT_THRESHOLD) -> EstimateReport:
    """``avg_{B_rho} g(|Dv|) <= c (rho/R)**(-beta) avg_{B_2R} g(|Dv|)``.

    ``beta`` is the least-squares log-log slope (clipped at 0) on the finest
    instance; the per-radius constants are ``ratio * (rho/R)**beta``.
    """
    fam = _family(instances)
    ratios = []
    for inst in fam:
        c = _center(inst, center)
        gv = inst.g_grad.values
        ref = _ball_mean(gv, region_mask(inst.grid, Ball(c, 2 * R)))
        ratios.append([_ball_mean(gv, region_mask(inst.grid, Ball(c, rho))) / ref for rho in rhos])
    x = np.log(R / np.asarray(rhos))
    y = np.log(np.asarray(ratios[-1]))
    beta = max(0.0, float(np.polyfit(x, y, 1)[0])) if len(rhos) > 1 else 0.0
    per = [[(r * (rho / R) ** beta, 1.0) for r, rho in zip(rs, rhos)] for rs in ratios]
    return _ladder_report("P41iv-MorreyDecay", fam, per,
                          {"R": R, "rhos": _rstr(rhos), "instance": fam[-1].name}, threshold, {"beta": beta})


def _higher_ratio(fam, radii, center, chi):
    out = []
    for inst in fam:
        G = inst.spec.modular
        gn = inst.grad_norm.values
        rows = []
        for R, mR, m2R in _masks(inst, radii, center):
            lhs = _ball_mean(G.G(gn) ** chi, mR)
            rhs = float(G.G(_ball_mean(gn, m2R))) ** chi
            rows.append((lhs, rhs))
        out.append(rows)
    return out


def _masks(inst, radii, center):
    c = _center(inst, center)
    for R in radii:
        yield R, region_mask(inst.grid, Ball(c, R)), region_mask(inst.grid, Ball(c, 2 * R))


def fit_higher_integrability(instances, radii: Sequence[float] = (0.2, 0.3, 0.4), center=None,
                             bound: float = 10.0, step: float = CHI_STEP) -> float:
    """Largest ``chi`` in the grid ``1 + k*step`` (up to 2) whose ratio
    ``avg_{B_R} G**chi(|Dv|) / G**chi(avg_{B_2R}|Dv|)`` stays below ``bound``
    on every ladder ball and resolution.  Returns ``1 + step`` when no
    larger value passes."""
    fam = _family(instances)
    grid_vals = [1.0 + k * step for k in range(1, int(round(1.0 / step)) + 1)]
    best = grid_vals[0]
    for chi in grid_vals:
        per = _higher_ratio(fam, radii, center, chi)
        if all(_ratio(l, r) <= bound for rows in per for l, r in rows):
            best = chi
    return best


def check_higher_integrability(instances, radii: Sequence[float] = (0.2, 0.3, 0.4), center=None,
                               chi: Optional[float] = None, threshold: float = DEFAULT_THRESHOLD) -> EstimateReport:
    """Ratio of the higher integrability estimate at ``chi`` (fitted when omitted)."""
    fam = _family(instances)
    chi = fit_higher_integrability(fam, radii, center) if chi is None else chi
    per = _higher_ratio(fam, radii, center, chi)
    return _ladder_report("P41ii-HigherInt", fam, per, {"chi": chi, "radii": _rstr(radii), "instance": fam[-1].name},
                          threshold, {"chi_hat": chi})


def _rstr(radii):
    return ",".join(f"{r:g}" for r in radii)


# ---------------------------------------------------------------------------
# super-level sets


def superlevel_eps(G, H: float, T: float, chi: float, n: int) -> float:
    """``eps = c_star H T / G(H T)**chi`` with ``c_star = H / 20**n``."""
    c_star = H / 20.0**n
    return c_star * H * T / float(G.G(H * T)) ** chi


def superlevel_lambda0(G, H, T, chi, cn, r1, r2, mean_grad, n) -> float:
    return cn / (r2 - r1) ** n * float(G.G(H * T)) ** chi / (H * T) * mean_grad


def _level_grid(lam0: float, top: float, per_octave: int = 2, cap: int = 80) -> list:
    out, k = [], 0
    while k < cap:
        lam = lam0 * 2.0 ** (k / per_octave)
        out.append(lam)
        if lam > top:
            break
        k += 1
    return out


class _SuperLevelData:
    def __init__(self, inst: Instance, B0: Ball):
        anchor = B0.scaled(2.0)
        self.inst = inst
        self.B0 = B0
        self.M0 = restricted_M0(inst.grad_norm, anchor).values
        if inst.is_homogeneous:
            self.M1 = np.zeros(inst.grid.shape)
        else:
            self.M1 = restricted_M1(inst.abs_data, anchor).values
        self.mean_grad = _mean(inst.grad_norm, anchor)
        self.vol = inst.grid.cell_volume
        self.masks = {}

    def mask(self, r):
        if r not in self.masks:
            self.masks[r] = region_mask(self.inst.grid, self.B0.scaled(r))
        return self.masks[r]

    def evaluate(self, G, H, T, chi, eps, lambdas, r1, r2):
        m1, m2 = self.mask(r1), self.mask(r2)
        M0_1, M0_2, M1_1 = self.M0[m1], self.M0[m2], self.M1[m1]
        viol, worst, rows = 0, 0.0, []
        decay = 1.0 / float(G.G(H * T)) ** chi
        for lam in lambdas:
            lhs = np.count_nonzero(M0_1 > H * T * lam) * self.vol
            first = decay * np.count_nonzero(M0_2 > lam) * self.vol
            second = np.count_nonzero(M1_1 > float(G.g(eps * lam))) * self.vol
            rhs = first + second
            r = _ratio(lhs, rhs)
            worst = max(worst, r)
            if lhs > rhs * (1 + 1e-12):
                viol += 1
            rows.append((lam, lhs, first, second))
        return viol, worst, rows


def check_superlevel(instances, params: Optional[SuperLevelParams] = None, *, chi_hat: float = 1.0 + CHI_STEP,
                     H_values: Sequence[float] = (8.0, 16.0), T_values: Sequence[float] = (2.0, 4.0),
                     cn_values: Optional[Sequence[float]] = None, B0: Optional[Ball] = None,
                     r1: float = 0.5, r2: float = 0.75, threshold: float = DEFAULT_THRESHOLD) -> EstimateReport:
    """Super-level set inequality for ``M*_{0;2B0}(|Du|)`` on a lambda grid.

    With ``params`` the single configuration ``(H, T, eps, chi_hat,
    lambda_grid, r1, r2)`` is checked (the grid must lie above ``lambda_0``
    for every swept ``c(n)``).  Otherwise ``H`` and ``T`` are swept,
    ``eps`` follows its coupling to ``(H, T, chi)`` and each lambda grid
    starts at ``lambda_0``.  The report's constant is the largest
    ``lhs / rhs`` over all lambdas (at most 1 when the inequality holds);
    ``details["chi_min"]`` is the smallest ``chi`` on the ``1/32`` grid in
    ``[1, 2]`` with no violation.
    """
    fam = _family(instances)
    n = fam[0].grid.n
    cn_values = tuple(cn_values) if cn_values is not None else (1.0, 2.0**n)
    B0 = B0 or Ball((0.0,) * n, 0.4)
    data = [_SuperLevelData(inst, B0) for inst in fam]
    G = fam[0].spec.modular

    def configs(chi, d):
        if params is not None:
            for cn in cn_values:
                lam0 = superlevel_lambda0(G, params.H, params.T, params.chi_hat, cn, params.r1, params.r2,
                                          d.mean_grad, n)
                if min(params.lambda_grid) < lam0 * (1 - 1e-12):
                    raise PreconditionError(f"lambda grid starts below lambda_0 = {lam0:.6g} (c(n)={cn:g})")
                yield (params.H, params.T, params.chi_hat, params.eps, list(params.lambda_grid), params.r1,
                       params.r2, cn)
            return
        top = float(d.M0.max()) + 1.0
        for H in H_values:
            for T in T_values:
                eps = superlevel_eps(G, H, T, chi, n)
                for cn in cn_values:
                    lam0 = superlevel_lambda0(G, H, T, chi, cn, r1, r2, d.mean_grad, n)
                    yield H, T, chi, eps, _level_grid(lam0, top), r1, r2, cn

    def run(chi, d):
        viol, worst, table = 0, 0.0, []
        for H, T, ch, eps, lams, a, b, cn in configs(chi, d):
            v, w, rows = d.evaluate(G, H, T, ch, eps, lams, a, b)
            viol += v
            worst = max(worst, w)
            entry = {"H": H, "T": T, "cn": cn, "eps": eps, "lambda0": lams[0], "violations": v,
                     "nonzero_lhs": sum(1 for r in rows if r[1] > 0)}
            if params is None:
                # diagnostic only: the same inequality below the threshold lambda_0
                below = [x for x in _level_grid(d.mean_grad / (H * T), lams[0]) if x < lams[0]]
                if below:
                    vb, _, rb = d.evaluate(G, H, T, ch, eps, below, a, b)
                    entry["below_lambda0"] = {"count": len(below), "violations": vb,
                                              "nonzero_lhs": sum(1 for r in rb if r[1] > 0)}
            table.append(entry)
        return viol, worst, table

    chi_use = params.chi_hat if params is not None else chi_hat
    results = [run(chi_use, d) for d in data]
    chi_min = []
    for d in data:
        found = math.nan
        for k in range(0, int(round(1 / CHI_STEP)) + 1):
            chi = 1.0 + k * CHI_STEP
            if params is None and run(chi, d)[0] == 0:
                found = chi
                break
        chi_min.append(found if params is None else chi_use)
    consts = [w for _, w, _ in results]
    viol = sum(v for v, _, _ in results)
    drift = stability(consts[-2], consts[-1]) if len(consts) > 1 else math.nan
    c = consts[-1]
    passed = bool(viol == 0 and math.isfinite(c) and drift <= threshold)
    p = {"chi_hat": chi_use, "instance": fam[-1].name, "H": _rstr(H_values) if params is None else params.H,
         "T": _rstr(T_values) if params is None else params.T, "r1": r1, "r2": r2}
    details = {
        "violations": viol,
        "chi_min": chi_min,
        "tables": [t for _, _, t in results],
        "mean_grad": [d.mean_grad for d in data],
        "constants": consts,
        "resolutions": [inst.grid.cells_per_axis[0] for inst in fam],
    }
    return EstimateReport("Prop52-SuperLevel", float(viol), {"violations": 0.0}, float(c), p, float(drift), passed,
                          details)


# ---------------------------------------------------------------------------
# sharpness probe


def probe_sharpness(cells: Sequence[int] = (64, 128), levels: Sequence[float] = (1e2, 1e3, 1e4),
                    annulus: tuple = (0.125, 0.5), inner_radii: Sequence[float] = (0.25, 0.125, 0.0625),
                    p: float = 2.0, n: int = 3, drift_threshold: float = 0.10,
                    growth_threshold: float = 0.15) -> EstimateReport:
    """Weak-type stability against strong-type divergence for the unit Dirac.

    The Marcinkiewicz ``M^{n/(n-1)}`` norm of ``g(|Du_k|)`` on a fixed
    annulus should settle across the last two truncation levels and across
    the two resolutions, while the ``L^{n/(n-1)}`` norm on annuli with
    halving inner radius keeps growing.  Inner radii must stay at least
    ``4h`` from the atom on the grid where they are evaluated.
    """
    cells = list(cells)
    e = n / (n - 1)
    seqs = [dirac_sola(c, levels, p, n) for c in cells]
    hs = [seq.members[0].grid.h for seq in seqs]
    if annulus[0] < 4 * max(hs) - 1e-12:
        raise PreconditionError(f"annulus inner radius {annulus[0]:g} is closer than 4h to the atom")
    if min(inner_radii) < 4 * hs[-1] - 1e-12:
        raise PreconditionError("inner radii must be at least 4h on the finest grid")
    c0 = (0.0,) * n
    ann = Annulus(c0, annulus[0], annulus[1])
    g = plaplace_normalized(p).g
    weak = [[marcinkiewicz_norm(res.Du.magnitude().map(g), e, ann) for res in seq.members] for seq in seqs]
    gfine = seqs[-1].members[-1].Du.magnitude().map(g)
    strong = [lebesgue_norm(gfine, e, Annulus(c0, r, annulus[1])) for r in inner_radii]
    growth = [b / a - 1.0 for a, b in zip(strong, strong[1:])]
    drift_levels = [stability(row[-2], row[-1]) for row in weak]
    drift_h = stability(weak[-2][-1], weak[-1][-1]) if len(weak) > 1 else math.nan
    passed = bool(
        max(drift_levels) <= drift_threshold and drift_h <= drift_threshold
        and all(g >= growth_threshold for g in growth)
    )
    details = {
        "weak_norms": weak,
        "strong_norms": strong,
        "growth": growth,
        "drift_levels": drift_levels,
        "drift_h": drift_h,
        "w11_increments": [seq.w11_increments for seq in seqs],
        "g_increments": [seq.g_increments for seq in seqs],
        "increments_decreasing": [seq.increments_decreasing for seq in seqs],
    }
    params = {"cells": _rstr(cells), "levels": _rstr(levels), "annulus": _rstr(annulus), "p": p}
    return EstimateReport("Probe-Sharpness", float(weak[-1][-1]), {"strong_last": strong[-1]}, float(weak[-1][-1]),
                          params, float(max(drift_levels + [drift_h])), passed, details)
