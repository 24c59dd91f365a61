"""Variational flow: Jacobian, Jacobi propagation, gradient formulas."""

import numpy as np
import pytest

from gasgiant.errors import NoExit
from gasgiant.flow import PhaseState, Status, exit_time, rhs_batch, trace
from gasgiant.forms import order_k_form
from gasgiant.jacobi import (TangentPerturbation, exit_time_gradient_check,
                             flow_direction, grad_uf_via_jacobi,
                             horizontal_normal, jacobi_bounds_report,
                             rhs_jacobian, variational_trace, vertical_normal)
from gasgiant.metric import ChartPoint, unit_fiber_point


def _unit_state(model, x0, y, th):
    z = ChartPoint.of(model, x0, [y])
    xi, eta = unit_fiber_point(model, z, th)
    return PhaseState(x0, z.y, xi, eta)


def test_rhs_jacobian_matches_fd(perturbed):
    w = _unit_state(perturbed, 0.35, 0.4, 0.8 * np.pi).to_vec()
    J = rhs_jacobian(perturbed, w)
    h = 1e-6
    for k in range(len(w)):
        e = np.zeros_like(w)
        e[k] = h
        fd = (rhs_batch(perturbed, w + e) - rhs_batch(perturbed, w - e)) / (2 * h)
        assert np.allclose(J[:, k], fd, atol=1e-7)


def test_tangent_perturbation_roundtrip():
    v = np.array([0.1, 0.2, 0.3, 0.4])
    assert np.allclose(TangentPerturbation.from_vec(v).to_vec(), v)


def test_variational_trace_matches_fd_flow(perturbed, opts):
    """dphi_t theta from the variational system vs difference of flows."""
    state = _unit_state(perturbed, 0.4, 0.2, 0.85 * np.pi)
    theta = vertical_normal(perturbed, state)
    rec = variational_trace(perturbed, state, theta, opts)
    assert rec.status is Status.EXITED
    t_probe = rec.ts[160]
    h = 1e-6
    paths = []
    for s in (h, -h):
        ic = PhaseState.from_vec(state.to_vec() + s * theta.to_vec())
        path = trace(perturbed, ic, opts)
        paths.append(path.vec_at(t_probe))
    fd = (paths[0] - paths[1]) / (2 * h)
    assert np.allclose(rec.perturbations[160], fd, atol=1e-6)


def test_dtau_matches_fd_exit_time(perturbed, opts):
    state = _unit_state(perturbed, 0.3, 0.5, 1.15 * np.pi)
    for ctor in (vertical_normal, horizontal_normal):
        theta = ctor(perturbed, state)
        rec = variational_trace(perturbed, state, theta, opts)
        h = 1e-6
        taus = [exit_time(perturbed,
                          PhaseState.from_vec(state.to_vec() + s * theta.to_vec()),
                          opts) for s in (h, -h)]
        fd = (taus[0] - taus[1]) / (2 * h)
        assert np.isclose(rec.dtau, fd, atol=1e-5)


def test_flow_direction_dtau_is_minus_one(perturbed, opts):
    state = _unit_state(perturbed, 0.3, 0.5, 1.15 * np.pi)
    rec = variational_trace(perturbed, state,
                            flow_direction(perturbed, state), opts)
    assert np.isclose(rec.dtau, -1.0, atol=1e-8)


def test_grad_uf_matches_fd(perturbed, opts):
    f = order_k_form(perturbed, 1)
    state = _unit_state(perturbed, 0.35, 0.3, 0.9 * np.pi)
    rep = grad_uf_via_jacobi(perturbed, f, state, opts)
    from gasgiant.transform import integral_function
    h = 1e-5
    for got, ctor in ((rep.vertical, vertical_normal),
                      (rep.horizontal, horizontal_normal)):
        d = ctor(perturbed, state).to_vec()
        us = [integral_function(perturbed, f,
                                PhaseState.from_vec(state.to_vec() + s * d),
                                opts) for s in (h, -h)]
        fd = (us[0] - us[1]) / (2 * h)
        assert np.isclose(got, fd, atol=1e-4)


def test_grad_uf_raises_on_escape(perturbed, opts):
    f = order_k_form(perturbed, 1)
    with pytest.raises(NoExit):
        grad_uf_via_jacobi(perturbed, f,
                           PhaseState(0.5, np.array([0.2]), 1.0,
                                      np.array([0.0])), opts)


def test_jacobi_bounds_quick(perturbed, opts):
    rep = jacobi_bounds_report(perturbed, [1e-2, 1e-1], [np.pi],
                               opts=opts)
    assert len(rep.rows) == 4
    assert all(np.isfinite(r.sup_J_bar) for r in rep.rows)
    assert rep.growth_J_per_decade < 1.2
    assert rep.growth_DJ_per_decade < 1.2


def test_exit_gradient_along_flow(perturbed, opts):
    rep = exit_time_gradient_check(
        perturbed, _unit_state(perturbed, 0.2, 0.3, 1.1 * np.pi), opts=opts)
    assert np.isclose(rep.along_quotient, -1.0, atol=1e-8)
    # straight-line normal perturbations move the exit time at first
    # order, so the difference slopes sit near 1, not 2
    assert rep.vertical_slope > 0.9
    assert rep.horizontal_slope > 0.9
