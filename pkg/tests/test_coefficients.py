import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sirgate.config import SigmaProfile, reference_config
from sirgate.core.coefficients import (
    DiffusionField,
    LambdaField,
    diffusion_field,
    lambda_eval,
    lambda_field,
    sigma_eval,
    weak_degeneracy_check,
)
from sirgate.errors import DegenerateAtEveryPointError, OutOfDomainError

REFERENCE = DiffusionField(lambda_scale=0.01, a=0.01, t_a=50.0)


def test_sigma_examples():
    assert sigma_eval(REFERENCE, 1.0, 50.0) == pytest.approx(0.01)
    assert sigma_eval(REFERENCE, 0.0, 10.0) == 0.0
    assert sigma_eval(REFERENCE, 2.0, 10.0) == 0.0
    assert sigma_eval(REFERENCE, 1.0, 0.0) == pytest.approx(0.01 * math.exp(0.5))


def test_sigma_vectorized_and_constant_profile():
    y = np.linspace(0.0, 2.0, 5)
    values = sigma_eval(REFERENCE, y, 50.0)
    np.testing.assert_allclose(values, 0.01 * (2.0 - y) * y)
    flat = DiffusionField(lambda_scale=0.3, a=0.0, t_a=0.0, profile=SigmaProfile.CONSTANT)
    np.testing.assert_array_equal(sigma_eval(flat, y, 7.0), np.full(5, 0.3))


@pytest.mark.parametrize("y, t", [(-0.1, 1.0), (2.5, 1.0), (1.0, -1.0)])
def test_sigma_out_of_domain(y, t):
    with pytest.raises(OutOfDomainError):
        sigma_eval(REFERENCE, y, t)


def test_face_rounding_is_tolerated():
    assert sigma_eval(REFERENCE, 2.0 + 1e-15, 10.0) == 0.0


@given(
    y=st.floats(min_value=0.0, max_value=2.0),
    t=st.floats(min_value=0.0, max_value=300.0),
    scale=st.floats(min_value=0.0, max_value=1.0),
)
def test_sigma_nonnegative_and_symmetric(y, t, scale):
    field = DiffusionField(lambda_scale=scale, a=0.01, t_a=50.0)
    value = sigma_eval(field, y, t)
    assert value >= 0.0
    assert value == pytest.approx(sigma_eval(field, 2.0 - y, t), rel=1e-12, abs=1e-12)


def test_lambda_field():
    field = LambdaField(interior_value=0.2, zero_points=(0.0,))
    np.testing.assert_array_equal(lambda_eval(field, np.array([0.0, 0.5, 1.0])), [0.0, 0.2, 0.2])
    assert lambda_eval(field, 0.0) == 0.0


def test_fields_from_config():
    cfg = reference_config()
    sigma = diffusion_field(cfg, 2)
    assert sigma.lambda_scale == cfg.params.lambda_2
    assert (sigma.y_left, sigma.y_right) == (0.0, 2.0)
    assert lambda_field(cfg, 1).zero_points == (0.0,)
    assert lambda_field(cfg, 2).zero_points == (2.0,)


def test_weak_degeneracy_away_from_boundary_is_finite():
    report = weak_degeneracy_check(
        REFERENCE, t=100.0, x=1.0, delta=0.5, quad_points=200, region_bounds=(0.0, 1.0), t_final=300.0
    )
    assert report.finite
    assert np.isfinite(report.value)


def test_weak_degeneracy_touching_a_linear_zero_stays_finite():
    # 1/y est intégrable: la somme croît au raffinement mais bien moins que du double
    report = weak_degeneracy_check(
        REFERENCE, t=50.0, x=0.05, delta=0.1, quad_points=200, region_bounds=(0.0, 1.0), t_final=300.0
    )
    assert report.refined_value > report.value
    assert report.refined_value / report.value < 2.0
    assert report.finite


def test_weak_degeneracy_constant_sigma_closed_form():
    field = DiffusionField(lambda_scale=0.25, a=0.0, t_a=0.0, profile=SigmaProfile.CONSTANT)
    report = weak_degeneracy_check(
        field, t=10.0, x=0.5, delta=0.2, quad_points=8, region_bounds=(0.0, 1.0), t_final=20.0
    )
    assert report.value == pytest.approx(2 * 0.2 * 0.4 / 0.25)
    assert report.refined_value == pytest.approx(report.value)
    assert report.finite


def test_weak_degeneracy_with_vanishing_sigma():
    field = DiffusionField(lambda_scale=0.0, a=0.01, t_a=50.0)
    with pytest.raises(DegenerateAtEveryPointError):
        weak_degeneracy_check(field, t=100.0, x=1.0, delta=0.5, quad_points=10)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"t": 0.2, "x": 1.0, "delta": 0.5},
        {"t": 299.8, "x": 1.0, "delta": 0.5, "t_final": 300.0},
        {"t": 100.0, "x": 1.0, "delta": 0.0},
        {"t": 100.0, "x": 5.0, "delta": 0.5, "region_bounds": (0.0, 1.0)},
    ],
)
def test_weak_degeneracy_window_errors(kwargs):
    with pytest.raises(OutOfDomainError):
        weak_degeneracy_check(REFERENCE, quad_points=10, **kwargs)
