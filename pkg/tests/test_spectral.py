"""Oracle and property tests for the diagonal spectral calculus."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spdelab import (
    ModeVector,
    SpectralOperator,
    check_trace_condition,
    convolution_variance,
    decay_factor,
    exp_holder_constant,
    frac_power_apply,
    make_heat_operator,
    make_power_law_operator,
    render_sine_profile,
    semigroup_apply,
)

finite_coeffs = st.lists(
    st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, width=64),
    min_size=1,
    max_size=8,
)


def test_heat_ladder_small():
    op = make_heat_operator(3)
    assert np.array_equal(op.eigenvalues, [1.0, 4.0, 9.0])
    assert op.spectrum_kind == "power_law"
    assert op.power == 2.0
    assert op.n_max == 3


def test_heat_ladder_large():
    op = make_heat_operator(128)
    assert op.eigenvalues[127] == 16384.0
    assert np.all(np.diff(op.eigenvalues) > 0.0)


def test_operator_validation():
    with pytest.raises(ValueError):
        make_heat_operator(0)
    with pytest.raises(ValueError):
        make_power_law_operator(4, 0.0)
    with pytest.raises(ValueError):
        SpectralOperator(np.array([-1.0, 2.0]))
    with pytest.raises(ValueError):
        SpectralOperator(np.array([4.0, 1.0]))
    with pytest.raises(ValueError):
        SpectralOperator(np.array([]))
    with pytest.raises(ValueError):
        SpectralOperator(np.array([1.0, 2.0]), spectrum_kind="diag")
    with pytest.raises(ValueError):
        # power_law ladders must be literally i**power
        SpectralOperator(np.array([1.0, 3.0]), spectrum_kind="power_law", power=2.0)


def test_mode_vector_basics():
    v = ModeVector([3.0, 4.0])
    assert len(v) == 2
    assert v.norm() == 5.0
    with pytest.raises(ValueError):
        ModeVector(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        ModeVector([math.nan])
    src = np.array([1.0, 2.0])
    w = ModeVector(src)
    src[0] = 99.0
    assert w.coeffs[0] == 1.0


@given(coeffs=finite_coeffs, extra=st.integers(min_value=0, max_value=5))
def test_pad_project_round_trip(coeffs, extra):
    v = ModeVector(coeffs)
    padded = v.padded(len(v) + extra)
    back = padded.projected(len(v))
    assert np.array_equal(back.coeffs, v.coeffs)
    # fsum-based norm is insensitive to trailing zeros, exactly
    assert padded.norm() == v.norm()


def test_pad_project_bounds():
    v = ModeVector([1.0, 2.0])
    with pytest.raises(ValueError):
        v.padded(1)
    with pytest.raises(ValueError):
        v.projected(3)


def test_trace_condition_heat_alpha_045():
    report = check_trace_condition(make_heat_operator(128), 0.45)
    assert report.converges is True
    assert report.exponent == pytest.approx(1.1, abs=1e-12)
    # fsum oracle over 128 modes of i**-1.1
    assert report.partial_sum == pytest.approx(4.431127533122982, rel=1e-12)
    # integral-test tail 128**-0.1 / 0.1
    assert report.tail_bound == pytest.approx(6.1557220667245724, rel=1e-12)


def test_trace_condition_divergent_alpha_05():
    report = check_trace_condition(make_heat_operator(64), 0.5)
    assert report.converges is False
    assert report.exponent == pytest.approx(1.0, abs=1e-12)
    assert math.isinf(report.tail_bound)


def test_trace_condition_single_mode():
    report = check_trace_condition(make_heat_operator(1), 0.3)
    assert report.partial_sum == 1.0
    assert report.converges is True
    explicit = check_trace_condition(SpectralOperator(np.array([2.0])), 0.3)
    assert explicit.partial_sum == pytest.approx(0.6155722066724582, rel=1e-12)
    assert explicit.converges is None
    assert math.isinf(explicit.tail_bound)


def test_trace_condition_alpha_range():
    op = make_heat_operator(4)
    for alpha in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            check_trace_condition(op, alpha)


@given(
    power=st.floats(min_value=0.2, max_value=4.0, allow_nan=False),
    alpha=st.floats(min_value=0.01, max_value=0.99, allow_nan=False),
)
def test_trace_dichotomy_power_law(power, alpha):
    report = check_trace_condition(make_power_law_operator(8, power), alpha)
    assert report.converges is (power * (1.0 - alpha) > 1.0)


def test_semigroup_identity_at_zero(heat16):
    v = ModeVector([0.3, -1.2, 5.0])
    out = semigroup_apply(heat16, 0.0, v)
    assert np.array_equal(out.coeffs, v.coeffs)


def test_semigroup_heat_half_life():
    op = make_heat_operator(2)
    out = semigroup_apply(op, math.log(2.0), ModeVector([1.0, 1.0]))
    assert out.coeffs[0] == pytest.approx(0.5, rel=1e-14)
    assert out.coeffs[1] == pytest.approx(0.0625, rel=1e-14)


@given(
    t=st.floats(min_value=0.0, max_value=3.0, allow_nan=False),
    s=st.floats(min_value=0.0, max_value=3.0, allow_nan=False),
    coeffs=finite_coeffs,
)
def test_semigroup_contraction_and_composition(t, s, coeffs):
    op = make_heat_operator(8)
    v = ModeVector(coeffs)
    once = semigroup_apply(op, t, v)
    assert once.norm() <= v.norm() * (1.0 + 1e-12)
    twice = semigroup_apply(op, s, once)
    joint = semigroup_apply(op, t + s, v)
    np.testing.assert_allclose(twice.coeffs, joint.coeffs, rtol=1e-12, atol=1e-15)


def test_semigroup_validation(heat16):
    with pytest.raises(ValueError):
        semigroup_apply(heat16, -0.1, ModeVector([1.0]))
    with pytest.raises(ValueError):
        semigroup_apply(make_heat_operator(2), 1.0, ModeVector([1.0, 1.0, 1.0]))


def test_frac_power_identity_and_inverse(heat16):
    v = ModeVector([0.7, -0.3, 0.1])
    assert np.array_equal(frac_power_apply(heat16, 0.0, v).coeffs, v.coeffs)
    e2 = frac_power_apply(heat16, -1.0, ModeVector([0.0, 1.0]))
    assert np.array_equal(e2.coeffs, [0.0, 0.25])


def test_regularization_product_bound():
    # lam**gamma * exp(-lam*t) <= t**-gamma uniformly over the ladder
    op = make_heat_operator(512)
    ones = ModeVector(np.ones(512))
    for gamma in (0.25, 0.5, 1.0):
        for t in (1e-3, 1e-1, 1.0):
            damped = semigroup_apply(op, t, ones)
            out = frac_power_apply(op, gamma, damped)
            assert np.max(np.abs(out.coeffs)) <= t ** (-gamma) * (1.0 + 1e-12)


def test_exp_difference_holder_bound():
    xs = np.linspace(0.0, 50.0, 101)
    dx = np.abs(xs[:, None] - xs[None, :])
    dv = np.abs(np.exp(-xs)[:, None] - np.exp(-xs)[None, :])
    mask = dx > 0.0
    for theta in (0.25, 0.5, 1.0):
        c = exp_holder_constant(theta)
        assert c == 1.0
        assert np.max(dv[mask] / dx[mask] ** theta) <= c * (1.0 + 1e-12)
    with pytest.raises(ValueError):
        exp_holder_constant(1.1)


def test_convolution_variance_values():
    assert convolution_variance(1.0, 1.0) == pytest.approx(0.43233235838169365, rel=1e-15)
    assert convolution_variance(0.0, 0.7) == 0.7
    tiny = convolution_variance(1e-9, 1.0)
    assert 0.0 < 1.0 - tiny < 3e-9
    arr = convolution_variance(np.array([1.0, 4.0]), 0.5)
    assert arr.shape == (2,)
    assert arr[1] == pytest.approx((1.0 - math.exp(-4.0)) / 8.0, rel=1e-15)


def test_decay_factor_values():
    assert decay_factor(2.0, 0.5) == pytest.approx(math.exp(-1.0), rel=1e-15)
    arr = decay_factor(np.array([1.0, 4.0]), 1.0)
    assert arr.shape == (2,)
    assert arr[0] == pytest.approx(math.exp(-1.0), rel=1e-15)


def test_render_sine_profile():
    vals = render_sine_profile(ModeVector([1.0]), np.array([math.pi / 2.0]))
    assert vals.shape == (1,)
    assert vals[0] == pytest.approx(math.sqrt(2.0 / math.pi), rel=1e-12)
