import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orliczlab.young import (
    YoungError,
    admissible_fraction,
    build_model,
    conjugate,
    conjugate_duality_check,
    conjugate_inverse,
    conjugate_value,
    delta2_constant,
    estimate_indices,
    growth_scaling_check,
    inverse_value,
    load_table,
    parse_descriptor,
    plaplace_normalized,
    power_comparison_check,
    sobolev_conjugate,
)


@pytest.mark.parametrize("p", [2.0, 2.5, 3.0, 4.0])
def test_power_indices_exact(p):
    i, s = estimate_indices(build_model("power", p=p), "G")
    assert abs(i - p) < 1e-6 and abs(s - p) < 1e-6
    ig, sg = estimate_indices(build_model("power", p=p), "g")
    assert abs(ig - (p - 1)) < 1e-6 and abs(sg - (p - 1)) < 1e-6


def test_zygmund_indices_bracket_p():
    i, s = estimate_indices(build_model("zygmund", p=2, alpha=1), "G")
    assert abs(i - 2.0) < 1e-5
    assert 2.0 < s < 2.5


def test_index_range_too_short():
    with pytest.raises(YoungError):
        estimate_indices(build_model("power", p=2), "G", sample_range=(1.0, 10.0))


def test_invalid_parameters():
    with pytest.raises(YoungError):
        build_model("power", p=1.0)
    with pytest.raises(YoungError):
        build_model("zygmund", p=2, alpha=-1)
    with pytest.raises(YoungError):
        parse_descriptor("nonsense:p=2")


def test_descriptor_roundtrip():
    for d in ("power:p=2.5", "zygmund:p=2,alpha=1", "plaplace:p=3"):
        F = parse_descriptor(d)
        G2 = parse_descriptor(F.descriptor)
        t = np.logspace(-3, 3, 17)
        assert np.allclose(F.G(t), G2.G(t), rtol=1e-14)


def test_plaplace_normalization():
    F = plaplace_normalized(3)
    assert F.g(2.0) == pytest.approx(4.0)
    assert F.G(2.0) == pytest.approx(8.0 / 3.0)


def test_evaluation_rejects_negative():
    with pytest.raises(YoungError):
        build_model("power", p=2).G(-1.0)


def test_primitive_matches_derivative():
    F = build_model("zygmund", p=2, alpha=1)
    t = np.logspace(-2, 2, 9)
    d = 1e-6 * t
    num = (F.G(t + d) - F.G(t - d)) / (2 * d)
    assert np.allclose(num, F.g(t), rtol=1e-6)


@pytest.mark.parametrize("model", [build_model("power", p=2), build_model("power", p=3.5),
                                   build_model("zygmund", p=2, alpha=1)])
def test_conjugate_duality_64_points(model):
    t = np.logspace(-3, 3, 64)
    assert conjugate_duality_check(model, t)


@pytest.mark.parametrize("model", [build_model("zygmund", p=3, alpha=0.5), plaplace_normalized(1.5)])
def test_conjugate_inverse_matches_nested_search(model):
    for y in (1e-3, 0.7, 40.0):
        t = conjugate_inverse(model, y)
        assert conjugate_value(model, t) == pytest.approx(y, rel=1e-9)


def test_power_conjugate_closed_form():
    p = 3.0
    F = build_model("power", p=p)
    pc = p / (p - 1)
    for t in (0.1, 1.0, 7.0):
        # sup_s (s t - s^p) = (p-1) p^(-p') t^p'
        expect = (p - 1) * p ** (-pc) * t**pc
        assert conjugate_value(F, t) == pytest.approx(expect, rel=1e-10)


def test_double_conjugate_is_identity():
    F = build_model("zygmund", p=2, alpha=1)
    Fcc = conjugate(conjugate(F))
    for t in (0.3, 1.0, 4.0):
        assert Fcc.G(t) == pytest.approx(F.G(t), rel=1e-8)


@given(st.floats(min_value=1e-3, max_value=1e3))
@settings(max_examples=40, deadline=None)
def test_inverse_roundtrip(y):
    F = build_model("zygmund", p=2.5, alpha=0.5)
    assert F.G(inverse_value(F, y)) == pytest.approx(y, rel=1e-9)


def test_inverse_out_of_range():
    F = build_model("power", p=2)
    with pytest.raises(YoungError):
        inverse_value(F, 1e30)


def test_sobolev_conjugate_slope():
    F = build_model("power", p=2)
    t = np.array([1e-2, 1e2])
    B = sobolev_conjugate(F, 3, t)
    slope = math.log(B[1] / B[0]) / math.log(t[1] / t[0])
    assert abs(slope - 6.0) < 1e-4


def test_sobolev_conjugate_divergence_rejected():
    # p >= n: the defining integral no longer diverges at infinity
    with pytest.raises(YoungError):
        sobolev_conjugate(build_model("power", p=4), 3, 1.0)


def test_delta2():
    assert delta2_constant(build_model("power", p=3)) == pytest.approx(8.0)
    assert 4.0 < delta2_constant(build_model("zygmund", p=2, alpha=1)) < 6.0


@given(st.floats(min_value=1.01, max_value=50), st.floats(min_value=1e-3, max_value=1e3))
@settings(max_examples=40, deadline=None)
def test_growth_scaling_property(lam, t):
    F = build_model("zygmund", p=2, alpha=1)
    assert growth_scaling_check(F, lam, t, s_G=estimate_indices(F, "G").s_upper)


def test_power_comparison():
    assert power_comparison_check(build_model("zygmund", p=2.5, alpha=1))


def test_table_model(tmp_path):
    t = np.logspace(-4, 4, 81)
    path = tmp_path / "g.txt"
    np.savetxt(path, np.column_stack([t, t**1.5]))
    F = load_table(str(path))
    i, s = estimate_indices(F, "G", sample_range=(1e-3, 1e3))
    assert abs(i - 2.5) < 1e-3 and abs(s - 2.5) < 1e-3


def test_admissible_fraction():
    assert admissible_fraction(6 / 5) == "6/5"
    assert admissible_fraction(1.2 + 1e-12) == "6/5"
