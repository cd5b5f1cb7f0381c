import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blockmax.asymptotics import EstimatorKind, estimator_asym
from blockmax.compare import (
    GRID_HEADER,
    _cell,
    amse_factor,
    axis,
    build_grid,
    four_way_csv,
    four_way_header,
    grid_csv,
    k0_factor,
)
from blockmax.errors import DomainError
from blockmax.gev import SecondOrderSpec

K = EstimatorKind


def test_amse_factor_examples():
    assert amse_factor(1.0, 1.0, -0.7) == pytest.approx(1.0)
    assert amse_factor(3.0, -0.4, -0.5) == pytest.approx(0.4 * math.sqrt(3.0))
    assert amse_factor(2.0, 0.5, -1.0) == pytest.approx(0.25 ** (1 / 3) * 2 ** (2 / 3), rel=1e-15)


def test_k0_factor_examples():
    assert k0_factor(0.8, 0.8, -0.3) == pytest.approx(1.0)
    assert k0_factor(1.5, 0.3, -0.5) == pytest.approx(5.0, rel=1e-14)
    r = -0.25
    assert k0_factor(2.0, 0.5, r) / k0_factor(1.0, 0.5, r) == pytest.approx(4 ** (1 / (1 - 2 * r)))


@pytest.mark.parametrize("args", [(0.0, 1.0, -0.5), (1.0, 0.0, -0.5), (1.0, 1.0, 0.0), (1.0, 1.0, 0.1)])
def test_factor_domain(args):
    with pytest.raises(DomainError):
        amse_factor(*args)
    with pytest.raises(DomainError):
        k0_factor(*args)


@given(st.floats(0.01, 10), st.floats(0.01, 5), st.floats(-3, -0.01), st.floats(0.1, 10))
def test_amse_scale_consistency(v, b, r, c):
    assert amse_factor(c * c * v, c * b, r) == pytest.approx(c * c * amse_factor(v, b, r), rel=1e-12)


def test_axis_inclusive():
    np.testing.assert_allclose(axis(-1.0, -0.05, 0.05), np.round(np.arange(-1.0, -0.0499, 0.05), 12))
    assert len(axis(-0.45, 0.45, 0.01)) == 91
    with pytest.raises(DomainError):
        axis(0.0, 1.0, 0.0)


def test_same_kind_ratios_are_one():
    g = build_grid(K.BM_MLE, K.BM_MLE, (-0.2, 0.2, 0.2), (-1.0, -0.5, 0.25))
    np.testing.assert_allclose(g.ratio_field("amse_ratio"), 1.0)
    np.testing.assert_allclose(g.ratio_field("k0_ratio"), 1.0)


def test_bm_mle_has_smaller_variance_than_bm_pwm():
    g = build_grid(K.BM_MLE, K.BM_PWM, (-0.45, 0.45, 0.05), (-0.5, -0.5, 0.1))
    assert all(c.var_a < c.var_b for c in g.cells)


def test_spot_cell_composition():
    g = build_grid("POT-MLE", "BM-MLE", (-0.2, 0.2, 0.2), (-1.0, -0.5, 0.25))
    c = g.cell(2, 1)
    spec = SecondOrderSpec(0.2, -0.75, 1.0)
    va, ba = estimator_asym(K.POT_MLE, spec)
    vb, bb = estimator_asym(K.BM_MLE, spec)
    assert (c.gamma, c.rho) == (0.2, -0.75)
    assert c.amse_ratio == pytest.approx(amse_factor(va, ba, -0.75) / amse_factor(vb, bb, -0.75), rel=1e-14)
    assert c.k0_ratio == pytest.approx(k0_factor(va, ba, -0.75) / k0_factor(vb, bb, -0.75), rel=1e-14)


def test_ratios_independent_of_lambda():
    for g, r in [(-0.3, -0.9), (0.1, -0.2), (0.4, -0.6)]:
        a, b = _cell(K.POT_PWM, K.BM_MLE, g, r, 1.0), _cell(K.POT_PWM, K.BM_MLE, g, r, 2.0)
        assert a.amse_ratio == pytest.approx(b.amse_ratio, rel=1e-12)
        assert a.k0_ratio == pytest.approx(b.k0_ratio, rel=1e-12)


def test_swap_symmetry():
    ab = build_grid(K.POT_MLE, K.BM_PWM, (-0.3, 0.3, 0.3), (-1.0, -0.2, 0.4))
    ba = build_grid(K.BM_PWM, K.POT_MLE, (-0.3, 0.3, 0.3), (-1.0, -0.2, 0.4))
    for name in ("amse_ratio", "k0_ratio"):
        np.testing.assert_allclose(ab.ratio_field(name) * ba.ratio_field(name), 1.0, atol=1e-12)


def test_rho_zero_marked():
    g = build_grid(K.POT_MLE, K.BM_MLE, (0.1, 0.1, 0.1), (-0.5, 0.0, 0.5))
    c0 = g.cell(0, 1)
    assert "rho_zero" in c0.flags and math.isnan(c0.amse_ratio)
    assert math.isfinite(c0.var_a) and math.isfinite(c0.bias_b)
    line = grid_csv(g).splitlines()[2]
    assert line.endswith(",NA,NA,rho_zero")


def test_window_validation():
    with pytest.raises(DomainError):
        build_grid(K.POT_MLE, K.BM_PWM, (0.0, 0.5, 0.1), (-1.0, -0.1, 0.1))
    with pytest.raises(DomainError):
        build_grid(K.POT_MLE, K.BM_MLE, (0.0, 0.2, 0.1), (-1.5, -0.1, 0.1))


def test_csv_format():
    text = grid_csv(build_grid(K.POT_MLE, K.BM_MLE, (0.0, 0.1, 0.1), (-1.0, -0.5, 0.5)))
    lines = text.split("\n")
    assert lines[0] == GRID_HEADER == "gamma,rho,var_a,var_b,bias_a,bias_b,amse_ratio,k0_ratio,flags"
    assert text.endswith("\n") and "\r" not in text
    assert len(lines) == 1 + 4 + 1
    fields = lines[1].split(",")
    assert len(fields) == 9 and float(fields[0]) == 0.0 and float(fields[1]) == -1.0
    # shortest round-trip representation
    assert all(repr(float(f)) == f for f in fields[:8])


def test_four_way_csv():
    text = four_way_csv((0.0, 0.1, 0.1), (-0.5, -0.5, 0.1))
    head = text.splitlines()[0]
    assert head == four_way_header()
    assert head.split(",")[:4] == ["gamma", "rho", "var_bm_mle", "var_bm_pwm"]
    assert len(text.splitlines()) == 3
