"""Problem manifests for single Dirichlet solves.

A manifest is an INI file with a ``[problem]`` section::

    [problem]
    model = plaplace:p=2          # modular-function descriptor
    omega = const:1               # or a field file
    measure = dirac.msr           # measure manifest, or "none"
    level = 1000                  # truncation level for the measure
    boundary = zero               # zero | affine:a,b[,c][,d] | field file
    n = 3
    half_width = 1.0              # box [-w, w]**n (or origin/extent lists)
    cells = 64
    tol = 1e-10
    output = u.olf

Relative paths are resolved against the manifest's directory.
"""
from __future__ import annotations

import configparser
import json
import os
from dataclasses import dataclass
from typing import Optional

from .grid import Grid, GridField, MeasureData, load_field, load_measure, save_field
from .solver import OperatorSpec, SolveResult, solve_dirichlet, truncate_measure
from .young import parse_descriptor

__all__ = ["Problem", "load_problem", "run_problem", "ProblemError"]


class ProblemError(ValueError):
    """Malformed problem manifest."""


@dataclass
class Problem:
    spec: OperatorSpec
    grid: Grid
    measure: Optional[MeasureData]
    level: Optional[float]
    boundary: object
    tol: float
    max_iter: int
    output: Optional[str]


def _floats(text: str) -> list:
    return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]


def load_problem(path: str) -> Problem:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ProblemError(f"manifest parse error: {exc}") from None
    if not cp.has_section("problem"):
        raise ProblemError("manifest needs a [problem] section")
    sec = cp["problem"]
    base = os.path.dirname(os.path.abspath(path))

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    try:
        n = sec.getint("n", 3)
        cells = sec.getint("cells", 32)
        if "origin" in sec or "extent" in sec:
            grid = Grid(tuple(_floats(sec["origin"])), tuple(_floats(sec["extent"])), (cells,) * n)
        else:
            grid = Grid.cube(n, sec.getfloat("half_width", 1.0), cells)
        model = parse_descriptor(sec.get("model", "plaplace:p=2"))
        om = sec.get("omega", "const:1").strip()
        if om.startswith("const:"):
            omega = float(om[6:])
        else:
            omega = load_field(resolve(om))
        eps = sec.getfloat("eps_reg", None)
        spec = OperatorSpec(model, omega, eps)
        ms = sec.get("measure", "none").strip()
        measure = None if ms.lower() in ("none", "", "zero") else load_measure(resolve(ms))
        level = sec.getfloat("level", None)
        b = sec.get("boundary", "zero").strip()
        boundary = b if (b == "zero" or b.startswith("affine:")) else load_field(resolve(b))
        out = sec.get("output", None)
        return Problem(spec, grid, measure, level, boundary, sec.getfloat("tol", 1e-10), sec.getint("max_iter", 200),
                       resolve(out) if out else None)
    except (KeyError, ValueError) as exc:
        raise ProblemError(str(exc)) from None


def run_problem(problem: Problem) -> SolveResult:
    """Solve and, when ``output`` is set, write the field and a JSON metadata record."""
    grid = problem.grid
    if problem.measure is None:
        rhs = None
    elif problem.measure.atoms:
        if problem.level is None:
            raise ProblemError("measures with atoms need a truncation 'level'")
        rhs = truncate_measure(problem.measure, grid, problem.level)
    elif problem.level is not None:
        rhs = truncate_measure(problem.measure, grid, problem.level)
    else:
        from .grid import discretize_measure

        rhs = discretize_measure(problem.measure, grid)
    res = solve_dirichlet(problem.spec, rhs, problem.boundary, grid, tol=problem.tol, max_iter=problem.max_iter)
    if problem.output:
        save_field(res.u, problem.output)
        meta = {
            "converged": res.converged,
            "iterations": res.iterations,
            "residual_norm": res.residual_norm,
            "tolerance": res.tolerance,
            "model": problem.spec.modular.descriptor,
            **{k: v for k, v in res.info.items()},
        }
        with open(problem.output + ".json", "w") as fh:
            json.dump(meta, fh, indent=2)
    return res
