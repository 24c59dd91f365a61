"""1-forms, gauge correction, and the X-ray transform."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gasgiant.errors import NoExit, Unsupported
from gasgiant.flow import PhaseState
from gasgiant.forms import (boundary_zero_potential, constant_dy_form,
                            gauge_correct, order_k_form, smooth_oneform)
from gasgiant.metric import ChartPoint, unit_fiber_point
from gasgiant.transform import (boundary_probe, integral_function,
                                lambda_eval, odd_symmetry_check,
                                transport_residual, vanishing_rate_fit, xray)


def _unit_state(model, x0, y, th):
    z = ChartPoint.of(model, x0, [y])
    xi, eta = unit_fiber_point(model, z, th)
    return PhaseState(x0, z.y, xi, eta)


def test_integral_of_exact_form_is_minus_potential(perturbed, opts):
    """u^{dp}(z, zeta) = p(exit) - p(z) = -p(z) for boundary-zero p."""
    p = boundary_zero_potential(perturbed)
    dp = p.differential()
    for x0, y, th in [(0.3, 0.2, 0.8 * np.pi), (0.5, 0.7, 1.2 * np.pi),
                      (0.2, 0.4, 0.3 * np.pi)]:
        state = _unit_state(perturbed, x0, y, th)
        u = integral_function(perturbed, dp, state, opts)
        assert np.isclose(u, -float(p.p(np.asarray(x0), state.y)), atol=1e-9)


def test_xray_of_exact_form_vanishes(perturbed, opts):
    dp = boundary_zero_potential(perturbed).differential()
    rec = xray(perturbed, dp, PhaseState(0.0, np.array([0.3]), 1.0,
                                         np.array([2.0])), opts)
    assert abs(rec.value) < 1e-9
    # the trapezoid cross-check over dense samples is only a coarse bound
    assert rec.quadrature_error_estimate < 1e-4


def test_xray_stationary_is_zero(perturbed, opts):
    rec = xray(perturbed, smooth_oneform(perturbed),
               PhaseState(0.0, np.array([0.3]), 0.0, np.array([0.0])), opts)
    assert rec.value == 0.0


def test_global_form_escaping_ray_raises(perturbed, opts):
    f = smooth_oneform(perturbed)
    with pytest.raises(NoExit):
        integral_function(perturbed, f,
                          PhaseState(0.5, np.array([0.2]), 1.0,
                                     np.array([0.0])), opts)


def test_compact_form_escaping_ray_is_complete(perturbed, opts):
    f = order_k_form(perturbed, 1, support_x=0.4)
    u = integral_function(perturbed, f,
                          PhaseState(0.5, np.array([0.2]), 1.0,
                                     np.array([0.0])), opts)
    assert u == 0.0  # ray ascends out of the support immediately


def test_transport_residual(perturbed, opts):
    f = order_k_form(perturbed, 1)
    res = transport_residual(perturbed, f,
                             _unit_state(perturbed, 0.3, 0.4, 0.9 * np.pi),
                             opts=opts)
    assert res < 1e-6


def test_odd_symmetry_difference(perturbed, opts):
    f = order_k_form(perturbed, 1)
    res = odd_symmetry_check(perturbed, f,
                             _unit_state(perturbed, 0.35, 0.6, 0.7 * np.pi),
                             opts)
    assert abs(res) < 1e-8
    # for an exact form both one-sided integrals equal -p: difference 0
    # (steep fiber angle keeps the reversed ray's turning point in-chart)
    p = boundary_zero_potential(perturbed)
    state = _unit_state(perturbed, 0.3, 0.2, 0.7 * np.pi)
    u_f = integral_function(perturbed, p.differential(), state, opts)
    u_b = integral_function(perturbed, p.differential(), state.reversed(), opts)
    assert np.isclose(u_f, u_b, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(x0=st.floats(0.1, 0.8), y=st.floats(0.0, 1.0),
       th=st.floats(0.0, 2 * np.pi), a=st.floats(-2.0, 2.0),
       b=st.floats(-2.0, 2.0))
def test_lambda_eval_linear_in_form(x0, y, th, a, b, perturbed):
    f1 = smooth_oneform(perturbed, c0=1.0, c1=0.0)
    f2 = smooth_oneform(perturbed, c0=0.0, c1=1.0)
    fab = smooth_oneform(perturbed, c0=a, c1=b)
    w = _unit_state(perturbed, x0, y, th).to_vec()
    assert np.isclose(lambda_eval(perturbed, fab, w),
                      a * lambda_eval(perturbed, f1, w)
                      + b * lambda_eval(perturbed, f2, w), atol=1e-12)


def test_gauge_correct_structure(perturbed):
    f = smooth_oneform(perturbed)
    q, corrected = gauge_correct(perturbed, f)
    # q vanishes on the boundary and above the outer cutoff
    assert abs(float(q.p(np.asarray(0.0), np.array([0.3])))) < 1e-14
    assert abs(float(q.p(np.asarray(1.0), np.array([0.3])))) < 1e-14
    # the corrected form has no dx-component below the cutoff
    for x in (0.1, 0.3, 0.49):
        assert abs(float(corrected.f0(np.asarray(x), np.array([0.6])))) < 1e-10
    # dq matches finite differences of q
    h = 1e-6
    x, y = np.asarray(0.35), np.array([0.4])
    fd = (float(q.p(x + h, y)) - float(q.p(x - h, y))) / (2 * h)
    assert np.isclose(float(q.dp_dx(x, y)), fd, atol=1e-8)
    fdy = (float(q.p(x, y + h)) - float(q.p(x, y - h))) / (2 * h)
    assert np.isclose(float(q.dp_dy(x, y)[0]), fdy, atol=1e-8)


def test_gauge_invariance_of_xray(perturbed, opts):
    f = smooth_oneform(perturbed)
    _, corrected = gauge_correct(perturbed, f)
    ic = PhaseState(0.0, np.array([0.15]), 1.0, np.array([2.5]))
    a = xray(perturbed, f, ic, opts).value
    b = xray(perturbed, corrected, ic, opts).value
    assert abs(a - b) < 1e-8


def test_boundary_probe_recovers_constant(euclid, opts):
    c = 0.7
    rep = boundary_probe(euclid, constant_dy_form(euclid, c), 0.3, 1.0,
                         [1e-3, 3e-3, 1e-2], true_value=c, opts=opts)
    assert abs(rep.estimates[0] - c) < 1e-3 * c
    assert rep.error_slope >= 0.9  # inf under the noise-floor rule
    assert abs(rep.extrapolated - c) < 1e-3 * c


def test_probe_of_vanishing_form_goes_to_zero(euclid, opts):
    rep = boundary_probe(euclid, order_k_form(euclid, 1), 0.3, 1.0,
                         [1e-3, 3e-3, 1e-2], true_value=0.0, opts=opts)
    assert rep.error_slope >= 0.9


def test_vanishing_rate_exponent(perturbed, opts):
    fit = vanishing_rate_fit(perturbed, order_k_form(perturbed, 1),
                             [0.02, 0.05, 0.1], n_theta=5, opts=opts)
    assert fit.exponent >= 1.9


def test_require_derivatives(perturbed):
    bare = constant_dy_form(perturbed)
    assert bare.df0_dx is not None
    from gasgiant.forms import OneForm
    nude = OneForm(bare.f0, bare.fi)
    with pytest.raises(Unsupported):
        nude.require_derivatives()
