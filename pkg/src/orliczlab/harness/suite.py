"""Manifest-driven suite runner.

A suite manifest is an INI file.  Every section other than ``[suite]``
describes one check::

    [thm1-dirac]
    check = theorem1
    instance = dirac
    cells = 64, 128
    level = 100
    q = 1.1
    s = 1.1

Values are floats (``inf`` allowed) or comma-separated lists.  Reports are
sorted by estimate id and parameters, written as CSV and as an aligned
text table.  Exit status: 0 when every check passes, 1 when a check fails
(including precondition failures), 2 for configuration errors.
"""
from __future__ import annotations

import configparser
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from ..maximal import riesz_mapping_check
from ..reports import EstimateReport, SuperLevelParams, reports_to_csv, reports_to_text
from . import checks as C
from .instances import build_instance

__all__ = ["ManifestError", "SuiteResult", "run_suite", "parse_manifest", "CHECK_TYPES", "ACCEPTANCE_MANIFEST"]

ACCEPTANCE_MANIFEST = Path(__file__).with_name("acceptance.ini")


class ManifestError(ValueError):
    """Malformed manifest (configuration error, exit status 2)."""


@dataclass
class SuiteResult:
    exit_code: int
    reports: list
    failures: list = field(default_factory=list)

    @property
    def csv(self) -> str:
        return reports_to_csv(self.reports)

    @property
    def text(self) -> str:
        out = reports_to_text(self.reports)
        for name, msg in self.failures:
            out += f"[{name}] {msg}\n"
        return out


# check name -> (estimate id, function, allowed parameter keys)
CHECK_TYPES = {
    "theorem1": ("Thm1-Lorentz", C.check_theorem1_lorentz, {"q", "s", "R"}),
    "llogl": ("Cor-LlogL", C.check_corollary_llogl, {"R"}),
    "theorem2": ("Thm2-Morrey", C.check_theorem2_morrey, {"q", "theta", "R"}),
    "borderline_morrey": ("Cor-BorderlineMorrey", C.check_corollary_borderline_morrey, {"theta", "R"}),
    "theorem3": ("Thm3-LorentzMorrey", C.check_theorem3_lorentz_morrey, {"q", "s", "theta", "R"}),
    "comparison": ("Prop42-Comparison", C.check_comparison, {"radii", "q", "theta"}),
    "superlevel": ("Prop52-SuperLevel", C.check_superlevel, {"chi_hat", "H", "T", "cn", "r1", "r2", "b0",
                                                             "eps", "lambdas", "chi_model", "chi_cells"}),
    "maximal_lorentz": ("Prop53-MaximalLorentz", C.check_maximal_lorentz, {"t", "gamma", "R", "chi"}),
    "prelim_morrey": ("Prop54-PrelimMorrey", C.check_prelim_morrey, {"q", "theta", "inner", "outer"}),
    "reverse_holder": ("P41i-RevHolder", C.check_reverse_holder, {"radii"}),
    "higher_integrability": ("P41ii-HigherInt", C.check_higher_integrability, {"radii", "chi"}),
    "caccioppoli": ("P41iii-Caccioppoli", C.check_caccioppoli, {"radii"}),
    "morrey_decay": ("P41iv-MorreyDecay", C.check_morrey_decay, {"R", "rhos"}),
    "riesz": ("A3-Riesz", None, {"item", "density", "q", "s", "theta", "ball_radius", "resolutions"}),
    "probe_sharpness": ("Probe-Sharpness", C.probe_sharpness, {"cells", "levels", "annulus", "inner_radii", "p"}),
}

_INSTANCE_KEYS = {"instance", "cells", "level", "p", "sigma", "model", "scale"}
_COMMON_KEYS = {"check", "threshold"}


def _value(text: str):
    text = text.strip()
    if "," in text:
        return [_scalar(x) for x in text.split(",") if x.strip()]
    return _scalar(text)


def _scalar(text: str):
    t = text.strip()
    if t.lower() in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        v = float(t)
    except ValueError:
        return t
    return int(v) if v.is_integer() and "." not in t and "e" not in t.lower() else v


def parse_manifest(source) -> tuple[dict, list]:
    """Parse a manifest path or text into ``(suite options, [(name, options)])``."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
            with open(source) as fh:
                cp.read_file(fh)
        elif isinstance(source, str):
            cp.read_string(source)
        else:
            raise ManifestError(f"cannot read manifest {source!r}")
    except configparser.Error as exc:
        raise ManifestError(f"manifest parse error: {exc}") from None
    suite = {k: _value(v) for k, v in cp["suite"].items()} if cp.has_section("suite") else {}
    entries = []
    for name in cp.sections():
        if name == "suite":
            continue
        opts = {k: _value(v) for k, v in cp[name].items()}
        kind = opts.get("check")
        if kind not in CHECK_TYPES:
            raise ManifestError(f"[{name}] unknown or missing check type {kind!r}")
        allowed = CHECK_TYPES[kind][2] | _COMMON_KEYS | (set() if kind in ("riesz", "probe_sharpness") else _INSTANCE_KEYS)
        unknown = set(opts) - allowed
        if unknown:
            raise ManifestError(f"[{name}] unknown keys: {', '.join(sorted(unknown))}")
        entries.append((name, opts))
    return suite, entries


def _as_list(v):
    return list(v) if isinstance(v, list) else [v]


def _instances(opts: dict) -> list:
    kind = opts.get("instance")
    if kind is None:
        raise ManifestError("missing 'instance'")
    kw = {}
    for key in ("level", "p", "sigma", "scale"):
        if key in opts:
            kw[key] = float(opts[key])
    if "model" in opts:
        kw["model"] = str(opts["model"]) if not isinstance(opts["model"], list) else ",".join(map(str, opts["model"]))
    cells = [int(c) for c in _as_list(opts.get("cells", [32, 64]))]
    try:
        return [build_instance(kind, cells=c, **kw) for c in cells]
    except TypeError as exc:
        raise ManifestError(f"bad instance options: {exc}") from None
    except ValueError as exc:
        raise ManifestError(str(exc)) from None


_DENSITIES = {
    "const": lambda a: (lambda *X: np.full(np.broadcast(*X).shape, a)),
    "gaussian": lambda s: (lambda *X: np.exp(-0.5 * sum(x * x for x in X) / s**2)),
    "radial": lambda a: (lambda *X: (sum(x * x for x in X) + 1e-4) ** (-a / 2)),
}


def _density(text: str):
    kind, _, arg = str(text).partition(":")
    if kind not in _DENSITIES:
        raise ManifestError(f"unknown density {text!r} (const:c, gaussian:s, radial:a)")
    try:
        return _DENSITIES[kind](float(arg))
    except ValueError:
        raise ManifestError(f"bad density parameter in {text!r}") from None


def _run_one(opts: dict) -> EstimateReport:
    kind = opts["check"]
    _, fn, keys = CHECK_TYPES[kind]
    kw = {}
    if "threshold" in opts:
        kw["threshold"] = float(opts["threshold"])
    if kind == "riesz":
        args = {k: opts[k] for k in ("q", "s", "theta", "ball_radius") if k in opts}
        if "resolutions" in opts:
            args["resolutions"] = [int(x) for x in _as_list(opts["resolutions"])]
        return riesz_mapping_check(_density(opts.get("density", "gaussian:0.2")), str(opts.get("item", "i")),
                                   threshold=kw.get("threshold", 0.25), **args)
    if kind == "probe_sharpness":
        args = {}
        for key in ("cells", "levels", "annulus", "inner_radii"):
            if key in opts:
                args[key] = _as_list(opts[key])
        if "cells" in args:
            args["cells"] = [int(c) for c in args["cells"]]
        if "p" in opts:
            args["p"] = float(opts["p"])
        return fn(**args)
    fam = _instances(opts)
    for key in keys:
        if key not in opts:
            continue
        v = opts[key]
        if key in ("radii", "rhos"):
            kw[key] = [float(x) for x in _as_list(v)]
        elif key not in ("H", "T", "cn", "b0", "eps", "lambdas", "chi_model", "chi_cells", "chi_hat"):
            kw[key] = float(v)
    if kind == "superlevel":
        return _superlevel(fam, opts, kw)
    return fn(fam, **kw)


def _superlevel(fam, opts, kw):
    chi = opts.get("chi_hat", "fit")
    if chi == "fit":
        model = opts.get("chi_model", "power:p=2")
        model = model if not isinstance(model, list) else ",".join(map(str, model))
        cells = [int(c) for c in _as_list(opts.get("chi_cells", [32, 64]))]
        homog = [build_instance("homogeneous", model=model, cells=c) for c in cells]
        chi = C.fit_higher_integrability(homog)
    chi = float(chi)
    for key, name in (("H", "H_values"), ("T", "T_values"), ("cn", "cn_values")):
        if key in opts:
            kw[name] = [float(x) for x in _as_list(opts[key])]
    for key in ("r1", "r2"):
        if key in opts:
            kw[key] = float(opts[key])
    if "b0" in opts:
        from ..grid import Ball

        vals = [float(x) for x in _as_list(opts["b0"])]
        kw["B0"] = Ball(tuple(vals[:-1]), vals[-1])
    if "lambdas" in opts:
        H = float(_as_list(opts.get("H", 8.0))[0])
        T = float(_as_list(opts.get("T", 2.0))[0])
        eps = float(opts["eps"]) if "eps" in opts else C.superlevel_eps(fam[0].spec.modular, H, T, chi, fam[0].grid.n)
        params = SuperLevelParams(H, T, eps, chi, [float(x) for x in _as_list(opts["lambdas"])],
                                  kw.pop("r1", 0.5), kw.pop("r2", 0.75))
        kw.pop("H_values", None)
        kw.pop("T_values", None)
        return C.check_superlevel(fam, params, **kw)
    return C.check_superlevel(fam, chi_hat=chi, **kw)


def _failure(estimate_id: str, name: str, msg: str, params: dict) -> EstimateReport:
    return EstimateReport(estimate_id, math.nan, {}, math.nan, {"section": name, **params}, math.nan, False,
                          {"error": msg})


def _sort_key(rep: EstimateReport):
    return (rep.estimate_id, json.dumps(rep.params, sort_keys=True, default=str))


def run_suite(manifest, out_dir: Optional[str] = None, echo: Optional[Callable[[str], None]] = None) -> SuiteResult:
    """Run every check of a manifest.

    Parameters
    ----------
    manifest : path or str
        Manifest file or manifest text.
    out_dir : str, optional
        Directory receiving ``report.csv`` and ``report.txt``.
    echo : callable, optional
        Called with one line per finished check.

    Raises
    ------
    ManifestError
        On configuration errors (the caller maps these to exit status 2).
    """
    suite, entries = parse_manifest(manifest)
    reports, failures = [], []
    for name, opts in entries:
        eid = CHECK_TYPES[opts["check"]][0]
        try:
            rep = _run_one(opts)
            rep.params.setdefault("section", name)
        except ManifestError:
            raise
        except C.PreconditionError as exc:
            msg = f"precondition failed: {exc}"
            if exc.interval and exc.interval not in msg:
                msg += f" (admissible interval {exc.interval})"
            rep = _failure(eid, name, msg, {})
            failures.append((name, msg))
        except (RuntimeError, ValueError, ArithmeticError) as exc:
            msg = f"{type(exc).__name__}: {exc}"
            rep = _failure(eid, name, msg, {})
            failures.append((name, msg))
        reports.append(rep)
        if echo:
            line = rep.summary() if "error" not in rep.details else f"FAIL {eid:<22s} [{name}] {rep.details['error']}"
            echo(line)
    reports.sort(key=_sort_key)
    code = 0 if all(r.passed for r in reports) else 1
    result = SuiteResult(code, reports, failures)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        Path(out_dir, "report.csv").write_text(result.csv)
        Path(out_dir, "report.txt").write_text(result.text)
    return result
