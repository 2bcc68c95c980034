import math
from fractions import Fraction

import numpy as np
import pytest

from orliczlab import cli
from orliczlab.grid import Ball, Grid, GridField, save_field
from orliczlab.harness import checks as C
from orliczlab.harness.instances import build_instance, dirac_instance, homogeneous_instance, rescale
from orliczlab.harness.suite import ManifestError, parse_manifest, run_suite
from orliczlab.reports import SuperLevelParams


@pytest.fixture(scope="module")
def dirac():
    return [dirac_instance(cells=c, level=100.0) for c in (16, 32)]


@pytest.fixture(scope="module")
def homog():
    return [homogeneous_instance("power:p=2", cells=c) for c in (16, 32)]


def test_plaplace_range_is_six_fifths():
    assert Fraction(C.theorem1_bound(2, 2, 3)).limit_denominator(100) == Fraction(6, 5)
    assert C.theorem1_bound(2, 2, 3) == pytest.approx(1.2, abs=1e-15)
    # Morrey range reduces to theta p / (theta p - theta + p)
    p, theta = 2.0, 2.5
    assert C.morrey_bound(p, p, theta) == pytest.approx(theta * p / (theta * p - theta + p))


def test_out_of_range_q_rejected(dirac):
    with pytest.raises(C.PreconditionError) as exc:
        C.check_theorem1_lorentz(dirac, q=1.3)
    assert exc.value.interval == "(1, 6/5]"
    with pytest.raises(C.PreconditionError):
        C.check_theorem2_morrey(dirac, q=1.1, theta=1.5)  # theta below i_G


def test_plaplace_exponent_identity(dirac):
    rep = C.check_theorem1_lorentz(dirac, q=1.2, s=1.2)
    n, q = 3, 1.2
    assert rep.params["target_q"] == pytest.approx(n * q / (n - q))
    inst = dirac[-1]
    assert np.allclose(inst.g_grad.values, inst.grad_norm.values)  # g(t) = t^(p-1) with p = 2


def test_homogeneous_has_no_measure_term(homog):
    rep = C.check_theorem1_lorentz(homog)
    assert rep.rhs_terms["mu"] == 0.0 and math.isfinite(rep.empirical_constant)


def test_llogl_rejects_atoms(dirac):
    with pytest.raises(C.PreconditionError):
        C.check_corollary_llogl(dirac)


def test_single_resolution_has_no_stability(dirac):
    rep = C.check_theorem1_lorentz(dirac[-1])
    assert math.isnan(rep.refinement_stability) and not rep.passed


def test_scale_invariance_small(dirac):
    base = C.check_theorem2_morrey(dirac)
    scaled = C.check_theorem2_morrey([rescale(i, 2.5) for i in dirac])
    assert scaled.empirical_constant == pytest.approx(base.empirical_constant, rel=1e-6)


def test_comparison_skips_empty_balls(dirac):
    rep = C.check_comparison(dirac[-1], radii=(0.4, 0.2), center=(0.45, 0.0, 0.0))
    assert rep.details["skipped"][-1]
    for entry in rep.details["skipped"][-1]:
        assert entry["lhs"] <= 10 * entry["solver_tol"]


def test_superlevel_below_lambda0_rejected(dirac):
    G = dirac[0].spec.modular
    eps = C.superlevel_eps(G, 8.0, 2.0, 1.0, 3)
    params = SuperLevelParams(8.0, 2.0, eps, 1.0, [1e-6, 1e-3])
    with pytest.raises(C.PreconditionError):
        C.check_superlevel(dirac, params)


def test_superlevel_chi_ordering(homog, dirac):
    chi_fit = C.fit_higher_integrability(homog)
    assert 1.0 < chi_fit <= 2.0
    rep = C.check_superlevel(dirac, chi_hat=chi_fit)
    for chi in rep.details["chi_min"]:
        assert 1.0 <= chi <= chi_fit + C.CHI_STEP
    assert rep.details["violations"] == 0


def test_higher_integrability_affine_passes_any_chi():
    inst = build_instance("homogeneous", model="power:p=2", cells=16)
    assert C.fit_higher_integrability(inst, radii=(0.1,)) >= 1.0 + C.CHI_STEP


def test_manifest_validation():
    with pytest.raises(ManifestError):
        parse_manifest("[x]\ncheck = nope\n")
    with pytest.raises(ManifestError):
        parse_manifest("[x]\ncheck = theorem1\ninstance = dirac\nbogus = 1\n")
    suite, entries = parse_manifest("[suite]\nname = t\n[a]\ncheck = theorem1\ninstance = dirac\ncells = 16, 32\ns = inf\n")
    assert suite["name"] == "t" and entries[0][1]["cells"] == [16, 32] and math.isinf(entries[0][1]["s"])


def test_empty_manifest_passes(tmp_path):
    res = run_suite("", out_dir=str(tmp_path))
    assert res.exit_code == 0 and res.reports == []
    assert (tmp_path / "report.csv").exists()


def test_precondition_failure_exit_code():
    res = run_suite("[bad]\ncheck = theorem1\ninstance = dirac\ncells = 16, 32\nq = 1.3\n")
    assert res.exit_code == 1
    assert "(1, 6/5]" in res.text


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[bad]\ncheck = theorem1\ninstance = dirac\ncells = 16, 32\nq = 1.3\n")
    assert cli.main(["verify", str(bad)]) == 1
    assert "(1, 6/5]" in capsys.readouterr().out
    broken = tmp_path / "broken.ini"
    broken.write_text("[x]\ncheck = theorem1\nfoo = 1\n")
    assert cli.main(["verify", str(broken)]) == 2
    assert cli.main(["verify", str(tmp_path / "missing.ini")]) == 2
    assert cli.main(["indices", "nonsense:p=2"]) == 2
    assert cli.main(["bogus-command"]) == 2


def test_cli_indices(capsys):
    assert cli.main(["indices", "plaplace:p=2"]) == 0
    assert "(1, 6/5]" in capsys.readouterr().out


def test_cli_norm(tmp_path, capsys):
    g = Grid.cube(2, 1.0, 16)
    save_field(GridField(g, np.ones(g.shape)), tmp_path / "one.olf")
    assert cli.main(["norm", "lebesgue:q=1", str(tmp_path / "one.olf"), "--region", "box:0,0;1,1"]) == 0
    out = capsys.readouterr().out
    assert float(out.split("=")[-1]) == pytest.approx(81 / 64)
    assert cli.main(["norm", "lebesgue:q=1", str(tmp_path / "one.olf"), "--region", "ball:0,0"]) == 2


def test_cli_solve(tmp_path, capsys):
    man = tmp_path / "p.ini"
    man.write_text("[problem]\nmodel = plaplace:p=3\nboundary = affine:1,2\nn = 2\ncells = 16\noutput = u.olf\n")
    assert cli.main(["solve", str(man)]) == 0
    assert (tmp_path / "u.olf").exists() and (tmp_path / "u.olf.json").exists()
    man.write_text("[problem]\nmodel = plaplace:p=3\nmeasure = none\nlevel = x\n")
    assert cli.main(["solve", str(man)]) == 2


def test_cli_probe_rejects_unresolved_annulus(capsys):
    # with 16 cells, 4h = 0.5 exceeds the default annulus inner radius
    assert cli.main(["probe-sharpness", "dirac", "--cells", "16", "--levels", "10,100"]) == 1
    assert "precondition" in capsys.readouterr().out
