"""Report records shared by the norm, maximal-operator and harness modules."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

__all__ = ["EstimateReport", "SuperLevelParams", "ESTIMATE_IDS", "reports_to_csv", "reports_to_text", "stability"]

ESTIMATE_IDS = (
    "Thm1-Lorentz",
    "Cor-LlogL",
    "Thm2-Morrey",
    "Cor-BorderlineMorrey",
    "Thm3-LorentzMorrey",
    "Prop42-Comparison",
    "Prop52-SuperLevel",
    "Prop53-MaximalLorentz",
    "Prop54-PrelimMorrey",
    "P41i-RevHolder",
    "P41ii-HigherInt",
    "P41iii-Caccioppoli",
    "P41iv-MorreyDecay",
    "A3-Riesz",
    "A1-EmbeddingChain",
    "Probe-Sharpness",
)


def stability(coarse: float, fine: float) -> float:
    """Relative drift ``|fine - coarse| / coarse`` (``inf`` if undefined)."""
    if not (math.isfinite(coarse) and math.isfinite(fine)) or coarse == 0:
        return 0.0 if coarse == fine == 0 else math.inf
    return abs(fine - coarse) / abs(coarse)


@dataclass
class EstimateReport:
    """Both sides of an inequality with its empirical constant.

    Attributes
    ----------
    estimate_id : str
    lhs : float
        Left side at the finest resolution.
    rhs_terms : dict
        Labelled right-side terms at the finest resolution.
    empirical_constant : float
        ``lhs / sum(rhs_terms)`` (or the check-specific ratio).
    params : dict
    refinement_stability : float
        Relative drift of the constant between two resolutions.
    passed : bool
    details : dict
        Per-level values and diagnostics.
    """

    estimate_id: str
    lhs: float
    rhs_terms: dict
    empirical_constant: float
    params: dict
    refinement_stability: float
    passed: bool
    details: dict = field(default_factory=dict)

    def summary(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (
            f"{flag} {self.estimate_id:<22s} c={self.empirical_constant:.6g} "
            f"drift={self.refinement_stability:.3g} {_params_str(self.params)}"
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SuperLevelParams:
    """Parameters of the super-level set estimate.

    ``eps`` follows ``c_star * H * T / G**chi(H T)`` with ``c_star = H / 20**n``.
    """

    H: float
    T: float
    eps: float
    chi_hat: float
    lambda_grid: Sequence[float]
    r1: float = 0.5
    r2: float = 0.75

    def __post_init__(self):
        if not (0 < self.r1 < self.r2 <= 1):
            raise ValueError("need 0 < r1 < r2 <= 1")
        if self.H <= 0 or self.T <= 0 or self.eps <= 0 or self.chi_hat < 1:
            raise ValueError("H, T, eps must be positive and chi_hat >= 1")


def _params_str(params: dict) -> str:
    return " ".join(f"{k}={_fmt(v)}" for k, v in sorted(params.items()))


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def reports_to_csv(reports: Sequence[EstimateReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["estimate_id", "passed", "lhs", "rhs_terms", "empirical_constant", "refinement_stability", "params"])
    for r in reports:
        w.writerow(
            [
                r.estimate_id,
                int(r.passed),
                repr(float(r.lhs)),
                json.dumps({k: float(v) for k, v in r.rhs_terms.items()}),
                repr(float(r.empirical_constant)),
                repr(float(r.refinement_stability)),
                json.dumps(r.params, default=str, sort_keys=True),
            ]
        )
    return buf.getvalue()


def reports_to_text(reports: Sequence[EstimateReport]) -> str:
    """Aligned human-readable summary table."""
    rows = [("result", "estimate", "constant", "drift", "lhs", "params")]
    for r in reports:
        rows.append(
            (
                "PASS" if r.passed else "FAIL",
                r.estimate_id,
                f"{r.empirical_constant:.6g}",
                f"{r.refinement_stability:.3g}",
                f"{r.lhs:.6g}",
                _params_str(r.params),
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]) - 1)]
    lines = []
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row[:-1], widths)) + "  " + row[-1])
    n_pass = sum(r.passed for r in reports)
    lines.append(f"{n_pass}/{len(reports)} checks passed")
    return "\n".join(lines) + "\n"
