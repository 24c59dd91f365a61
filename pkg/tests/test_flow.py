"""Hamiltonian ray tracing: conservation, exits, asymptotics, flat laws."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gasgiant.flow import (IntegratorOptions, PhaseState, Status,
                           conserved_h0, exit_time,
                           exit_time_asymptotic_fit, fit_loglog_slope,
                           flow_point, hamiltonian, rhs_batch,
                           short_geodesic_suite, trace, verify_table1)
from gasgiant.metric import ChartPoint, unit_fiber_point


def _unit_state(model, x0, y, th):
    z = ChartPoint.of(model, x0, [y])
    xi, eta = unit_fiber_point(model, z, th)
    return PhaseState(x0, z.y, xi, eta)


def test_integrator_options_validation():
    with pytest.raises(ValueError):
        IntegratorOptions(rel_tol=-1.0)
    with pytest.raises(ValueError):
        IntegratorOptions(t_max=0.0)


@settings(max_examples=15, deadline=None)
@given(x0=st.floats(0.1, 0.8), y=st.floats(0.0, 1.0),
       th=st.floats(0.0, 2 * np.pi))
def test_energy_and_reversal(x0, y, th, perturbed, opts):
    state = _unit_state(perturbed, x0, y, th)
    path = trace(perturbed, state, opts)
    assert path.status in (Status.EXITED, Status.ESCAPED)
    assert path.h_drift < 1e-9
    # flowing forward then reversing returns to the start
    t = 0.3 * path.t_end
    back = flow_point(perturbed, flow_point(perturbed, state, t, opts).reversed(),
                      t, opts).reversed()
    assert np.allclose(back.to_vec(), state.to_vec(), atol=1e-8)


def test_euclidean_exit_time_closed_form(euclid, opts):
    # tau = x0 (pi - theta') / sin(theta') for the angle of the velocity
    for x0, th in [(0.3, 0.8 * np.pi), (0.5, 0.6 * np.pi), (0.2, 1.3 * np.pi)]:
        state = _unit_state(euclid, x0, 0.3, th)
        tau = exit_time(euclid, state, opts)
        phi = th if th <= np.pi else 2 * np.pi - th
        expected = x0 * (np.pi - phi) / np.sin(phi)
        assert np.isclose(tau, expected, rtol=1e-9)


def test_stationary_and_escape_statuses(euclid, opts):
    zero = trace(euclid, PhaseState(0.0, np.array([0.2]), 0.0, np.array([0.0])), opts)
    assert zero.status is Status.STATIONARY
    up = trace(euclid, PhaseState(0.5, np.array([0.2]), 1.0, np.array([0.0])), opts)
    assert up.status is Status.ESCAPED


def test_h0_conserved_exactly_flat(euclid, opts):
    state = _unit_state(euclid, 0.4, 0.1, 0.75 * np.pi)
    path = trace(euclid, state, opts)
    assert path.h0_drift < 1e-10
    assert np.isclose(conserved_h0(euclid, state),
                      float(state.eta[0]) ** 2, rtol=1e-12)


def test_rhs_batch_broadcasts(perturbed):
    w = np.stack([_unit_state(perturbed, 0.3, 0.1, 1.0).to_vec(),
                  _unit_state(perturbed, 0.5, 0.7, 2.0).to_vec()])
    out = rhs_batch(perturbed, w)
    assert out.shape == w.shape
    for k in range(2):
        single = rhs_batch(perturbed, w[k])
        assert np.allclose(out[k], single, atol=1e-14)


def test_short_geodesics_flat(euclid, opts):
    rep = short_geodesic_suite(euclid, 0.3, 1.0, [1e-3, 1e-2, 1e-1], opts)
    for r in rep.records:
        assert abs(r.tau - np.pi) < 1e-7
        assert abs(r.length - r.s * np.pi) < 1e-7
    assert rep.slope_sup_x >= 0.9


def test_exit_asymptotic_cubic(perturbed, opts):
    fit = exit_time_asymptotic_fit(perturbed, 0.3, 1.0,
                                   np.geomspace(3e-3, 3e-2, 4), opts)
    assert fit.slope >= 2.7


def test_table1_flat_laws(euclid, opts):
    rep = verify_table1(euclid, _unit_state(euclid, 0.5, 0.3, 0.7 * np.pi), opts)
    assert rep.max_residual_momentum < 1e-8
    assert rep.max_relative_residual_accel < 1e-6


def test_fit_loglog_slope_floor():
    assert fit_loglog_slope([1e-3, 1e-2], [0.0, 0.0]) == np.inf
    s = fit_loglog_slope([1e-2, 1e-1], [1e-6, 1e-4])
    assert np.isclose(s, 2.0)


def test_hamiltonian_half_on_unit_fiber(perturbed):
    state = _unit_state(perturbed, 0.25, 0.6, 0.3)
    assert np.isclose(hamiltonian(perturbed, state), 0.5, atol=1e-13)
