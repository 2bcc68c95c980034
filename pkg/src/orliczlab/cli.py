"""Command line entry point.

Subcommands: ``indices``, ``norm``, ``solve``, ``verify``, ``probe-sharpness``.
Exit status 0 means success, 1 a failed check (or non-converged solve),
2 a configuration error.
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys

from .grid import Annulus, Ball, Box, GridError, load_field
from .norms import NormError, evaluate, parse_normspec
from .young import YoungError, admissible_fraction, delta2_constant, estimate_indices, parse_descriptor

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def parse_region(text: str):
    """``ball:c1,..,cn,r``, ``box:lo1,..,lon;hi1,..,hin`` or ``annulus:c1,..,cn,r_in,r_out``."""
    if text is None:
        return None
    kind, _, rest = text.partition(":")
    try:
        if kind == "ball":
            v = _floats(rest)
            return Ball(tuple(v[:-1]), v[-1])
        if kind == "box":
            lo, hi = rest.split(";")
            return Box(tuple(_floats(lo)), tuple(_floats(hi)))
        if kind == "annulus":
            v = _floats(rest)
            return Annulus(tuple(v[:-2]), v[-2], v[-1])
    except (ValueError, IndexError):
        pass
    raise GridError(f"cannot parse region {text!r}")


def cmd_indices(args) -> int:
    G = parse_descriptor(args.descriptor)
    lo, hi = _floats(args.range)
    rows = []
    for level in ("G", "g"):
        ip = estimate_indices(G, level, sample_range=(lo, hi))
        rows.append((level, ip))
    iG, sG = rows[0][1].i_lower, rows[0][1].s_upper
    print(f"model      {G.descriptor}")
    for level, ip in rows:
        print(f"i_{level:<2s}       {ip.i_lower:.10g}")
        print(f"s_{level:<2s}       {ip.s_upper:.10g}")
    print(f"delta2     {delta2_constant(G, sample_range=(lo, hi)):.10g}")
    n = args.n
    bound = n * iG / (n * sG - n + iG)
    print(f"q_range    (1, {admissible_fraction(bound)}]   (n={n})")
    return EXIT_OK


def cmd_norm(args) -> int:
    spec = parse_normspec(args.spec)
    f = load_field(args.field)
    region = parse_region(args.region)
    val = evaluate(spec, f, region, method=args.method)
    print(f"{spec.label()} = {val:.12g}")
    return EXIT_OK


def cmd_solve(args) -> int:
    from .problem import load_problem, run_problem

    prob = load_problem(args.manifest)
    res = run_problem(prob)
    print(
        f"converged={res.converged} iterations={res.iterations} residual={res.residual_norm:.3e} "
        f"tolerance={res.tolerance:.3e} wall={res.info.get('wall_time', math.nan):.2f}s"
    )
    if prob.output:
        print(f"wrote {prob.output}")
    return EXIT_OK if res.converged else EXIT_FAIL


def cmd_verify(args) -> int:
    from .harness.suite import ACCEPTANCE_MANIFEST, run_suite

    manifest = str(ACCEPTANCE_MANIFEST) if args.manifest == "acceptance" else args.manifest
    if not os.path.exists(manifest):
        raise FileNotFoundError(manifest)
    result = run_suite(manifest, out_dir=args.out, echo=print if args.verbose else None)
    sys.stdout.write(result.text)
    return result.exit_code


def cmd_probe(args) -> int:
    from .harness.checks import PreconditionError, probe_sharpness

    kw = {}
    if os.path.exists(args.instance):
        cp = configparser.ConfigParser()
        cp.read(args.instance)
        if not cp.has_section("probe"):
            raise ValueError("probe manifest needs a [probe] section")
        sec = cp["probe"]
        if sec.get("instance", "dirac") != "dirac":
            raise ValueError("the sharpness probe is defined for the dirac instance")
        for key in ("cells", "levels", "annulus", "inner_radii"):
            if key in sec:
                kw[key] = _floats(sec[key])
        if "p" in sec:
            kw["p"] = float(sec["p"])
    elif args.instance != "dirac":
        raise ValueError("instance must be 'dirac' or a probe manifest")
    if args.cells:
        kw["cells"] = _floats(args.cells)
    if args.levels:
        kw["levels"] = _floats(args.levels)
    if "cells" in kw:
        kw["cells"] = [int(c) for c in kw["cells"]]
    try:
        rep = probe_sharpness(**kw)
    except PreconditionError as exc:
        print(f"FAIL Probe-Sharpness precondition failed: {exc}")
        return EXIT_FAIL
    print(rep.summary())
    d = rep.details
    print("weak norms per level:", json.dumps(d["weak_norms"]))
    print("strong norms:", json.dumps(d["strong_norms"]), "growth:", json.dumps(d["growth"]))
    print(f"drift across levels {max(d['drift_levels']):.3g}, across h {d['drift_h']:.3g}")
    return EXIT_OK if rep.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="orliczlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("indices", help="growth indices of a modular function")
    p.add_argument("descriptor", help="e.g. power:p=2, zygmund:p=2,alpha=1, table:<file>")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--range", default="1e-6,1e6", help="sampling interval lo,hi")
    p.set_defaults(func=cmd_indices)

    p = sub.add_parser("norm", help="evaluate a function-space norm of a field file")
    p.add_argument("spec", help="e.g. lorentz:q=1.5,s=2 or morrey:q=1,theta=2")
    p.add_argument("field")
    p.add_argument("--region", default=None, help="ball:..., box:...;..., annulus:...")
    p.add_argument("--method", default="exact", choices=("exact", "quadrature"))
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("solve", help="solve a problem manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="run a suite manifest ('acceptance' for the shipped one)")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, help="directory for report.csv and report.txt")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("probe-sharpness", help="weak/strong norm probe on the Dirac instance")
    p.add_argument("instance", help="'dirac' or a manifest with a [probe] section")
    p.add_argument("--cells", default=None)
    p.add_argument("--levels", default=None)
    p.set_defaults(func=cmd_probe)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    from .harness.suite import ManifestError
    from .problem import ProblemError

    try:
        return args.func(args)
    except (YoungError, GridError, NormError, ManifestError, ProblemError, FileNotFoundError, ValueError,
            configparser.Error) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
