import math

import numpy as np
import pytest

from blockmax.asymptotics import (
    REGISTRY,
    EstimatorKind,
    bias_vector,
    bias_vector_closed,
    bias_vector_numeric,
    bm_pwm_bias,
    bm_pwm_bias_numeric,
    bm_pwm_variance,
    estimator_asym,
    fisher_info,
    fisher_info_closed,
    fisher_info_from_score,
    fisher_info_numeric,
    mle_bm_asym,
    pot_pwm_variance,
    score_mean,
)
from blockmax.errors import DomainError
from blockmax.gev import SecondOrderSpec
from blockmax.numerics import invert3, is_positive_definite


def _rel(a, b):
    return np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-12))


def test_fisher_mu_mu_entry_at_one():
    assert fisher_info_closed(1.0)[1, 1] == pytest.approx(8.0, rel=1e-14)


@pytest.mark.parametrize("g", [-0.4, -0.2, 0.1, 1.0, 2.0])
def test_fisher_symmetric_positive_definite(g):
    info = fisher_info_closed(g)
    np.testing.assert_array_equal(info, info.T)
    assert is_positive_definite(info)


def test_fisher_closed_matches_numeric():
    assert _rel(fisher_info_closed(0.5), fisher_info_numeric(0.5)) <= 1e-6
    assert _rel(fisher_info_closed(0.25), fisher_info_numeric(0.25)) <= 1e-6


def test_fisher_gumbel_known_entries():
    # the Gumbel (mu, sigma) block is [[1, -(1-euler)], [., 1 + (1-euler)^2 + pi^2/6]] up to sign conventions
    info = fisher_info_numeric(0.0)
    c = 1.0 - np.euler_gamma
    assert info[1, 1] == pytest.approx(1.0, abs=1e-9)
    assert info[1, 2] == pytest.approx(-c, abs=1e-9)
    assert info[2, 2] == pytest.approx(c**2 + math.pi**2 / 6, abs=1e-9)


def test_fisher_continuity_through_zero():
    a, b = fisher_info_numeric(1e-6), fisher_info_numeric(-1e-6)
    # the true slope of I in gamma accounts for ~5e-6 of the gap
    assert np.max(np.abs(a - b)) / np.max(np.abs(a)) <= 1e-5


def test_information_identity():
    assert _rel(fisher_info_from_score(0.5), fisher_info_numeric(0.5)) <= 1e-7


def test_fisher_closed_domain():
    with pytest.raises(DomainError):
        fisher_info_closed(-0.5)
    with pytest.raises(DomainError):
        fisher_info_closed(1e-4)
    assert fisher_info(1e-4)[1] == "numeric"


@pytest.mark.parametrize("g", np.linspace(-0.44, 2.0, 9))
def test_fisher_positive_definite_on_range(g):
    assert np.min(np.linalg.eigvalsh(fisher_info(g)[0])) > 0


@pytest.mark.parametrize("g", [-0.4, 0.25, 1.0])
def test_score_centering(g):
    assert np.max(np.abs(score_mean(g))) <= 1e-8


@pytest.mark.parametrize("g, r", [(0.25, -0.5), (0.5, 0.0), (-0.2, -1.0)])
def test_bias_closed_matches_numeric(g, r):
    assert _rel(bias_vector_closed(g, r), bias_vector_numeric(g, r)) <= 1e-6


def test_bias_continuity_in_rho():
    np.testing.assert_allclose(bias_vector_closed(0.25, -1e-6), bias_vector_closed(0.25, 0.0), atol=1e-4)


def test_bias_singular_manifold_uses_numeric():
    b, route = bias_vector(0.5, -0.5)
    assert route == "numeric" and np.all(np.isfinite(b))
    # the closed form approaches the numeric value from either side
    np.testing.assert_allclose(bias_vector_closed(0.5, -0.49), bias_vector_numeric(0.5, -0.49), rtol=1e-6)
    np.testing.assert_allclose(bias_vector_closed(0.5, -0.48), b, rtol=0.05)


def test_bias_finite_near_lower_limit():
    assert np.all(np.isfinite(bias_vector_numeric(-0.45, -1.0)))


def test_bias_at_rho_zero_is_first_row_of_info():
    # H(x) = d/dg (x^g - 1)/g makes b the gamma-column of the information
    for g in (-0.3, 0.4):
        np.testing.assert_allclose(bias_vector_closed(g, 0.0), fisher_info_closed(g)[0], rtol=1e-10)


def test_mle_bm_asym_lambda_zero():
    res = mle_bm_asym(SecondOrderSpec(0.25, -0.5, 0.0))
    np.testing.assert_array_equal(res.full_bias, np.zeros(3))
    assert res.variance > 0
    assert res.variance == pytest.approx(invert3(fisher_info_numeric(0.25))[0, 0], rel=1e-9)


def test_mle_bm_asym_composes_oracles():
    res = mle_bm_asym(SecondOrderSpec(0.25, -0.5, 1.0))
    target = np.linalg.solve(fisher_info_numeric(0.25), bias_vector_numeric(0.25, -0.5))[0]
    assert res.bias == pytest.approx(target, rel=1e-8)
    assert mle_bm_asym(SecondOrderSpec(0.25, -0.5, 2.0)).bias == pytest.approx(2 * res.bias, rel=1e-14)


def test_estimator_asym_delegates():
    spec = SecondOrderSpec(0.25, -0.5, 1.0)
    res = mle_bm_asym(spec)
    assert estimator_asym(EstimatorKind.BM_MLE, spec) == (res.variance, res.bias)
    assert estimator_asym("bm-mle", spec) == (res.variance, res.bias)


def test_variance_dominance_at_02():
    spec = SecondOrderSpec(0.2, -0.5, 1.0)
    v = {k: estimator_asym(k, spec)[0] for k in EstimatorKind}
    assert all(v[EstimatorKind.BM_MLE] < v[k] for k in EstimatorKind if k is not EstimatorKind.BM_MLE)


def test_kind_validity_ranges():
    with pytest.raises(DomainError):
        estimator_asym(EstimatorKind.BM_PWM, SecondOrderSpec(0.5, -0.5, 1.0))
    with pytest.raises(DomainError):
        REGISTRY[EstimatorKind.POT_MLE].check(-0.5)
    with pytest.raises(DomainError):
        estimator_asym(EstimatorKind.POT_PWM, SecondOrderSpec(0.6, -0.5, 1.0))
    with pytest.raises(DomainError):
        EstimatorKind.parse("hill")


def test_pot_pwm_variance_at_zero():
    # GPD PWM at gamma = 0: 1 * 4 * 1 / 3
    assert pot_pwm_variance(0.0) == pytest.approx(4.0 / 3.0)


def test_bm_pwm_variance_continuous_at_zero():
    assert bm_pwm_variance(1e-6) == pytest.approx(bm_pwm_variance(-1e-6), rel=1e-4)
    assert bm_pwm_variance(0.0) == pytest.approx(bm_pwm_variance(1e-6), rel=1e-4)


@pytest.mark.parametrize("g, r", [(-0.3, -0.5), (0.2, -1.0), (0.4, -0.05)])
def test_bm_pwm_bias_closed_matches_quadrature(g, r):
    assert bm_pwm_bias(g, r) == pytest.approx(bm_pwm_bias_numeric(g, r), rel=1e-8)


def test_provenance_recorded():
    for entry in REGISTRY.values():
        assert entry.provenance
