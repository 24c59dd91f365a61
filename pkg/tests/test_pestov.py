"""Phase-space grid, V/X/H operators, and the truncated energy identity."""

import numpy as np
import pytest

from gasgiant.errors import InvalidGrid, Unsupported, UnsupportedSupport
from gasgiant.forms import boundary_zero_potential, smooth_oneform
from gasgiant.pestov import (apply_H, apply_V, apply_X, boundary_term,
                             build_grid, compact_test_field,
                             fiber_identity_check, field_from_callable,
                             pestov_residual, pullback_field)


def _grid(model, n=32, eps=0.2, x_top=1.0):
    return build_grid(model, eps, x_top, n, n, n)


def _inner(grid, a, b):
    return float(np.sum(grid.weights * a.values * b.values))


def test_grid_measure_euclidean(euclid):
    # dSigma = x^{-1} dx dy dtheta on [0.2, 1] x [0, 1) x [0, 2pi)
    g = _grid(euclid, 48)
    assert np.isclose(g.total_measure, 2 * np.pi * np.log(5.0), rtol=1e-3)
    assert np.all(g.weights > 0.0)
    assert g.shape == (48, 48, 48)


def test_grid_validation(euclid, torus):
    with pytest.raises(InvalidGrid):
        build_grid(euclid, 0.5, 0.2, 8, 8, 8)
    with pytest.raises(InvalidGrid):
        build_grid(euclid, 0.2, 1.0, 3, 8, 8)
    with pytest.raises(Unsupported):
        build_grid(torus, 0.2, 1.0, 8, 8, 8)


def test_apply_v_exact_on_harmonics(euclid):
    g = _grid(euclid, 16)
    u = field_from_callable(g, lambda x, y, th: np.sin(3 * th) + 0 * x * y)
    vu = apply_V(g, u)
    expected = 3 * np.cos(3 * g.th_nodes)[None, None, :]
    assert np.max(np.abs(vu.values - expected)) < 1e-12


def test_apply_v_antisymmetric(perturbed):
    g = _grid(perturbed, 16)
    u = field_from_callable(g, lambda x, y, th: np.sin(2 * th) * np.cos(x))
    v = field_from_callable(g, lambda x, y, th: np.cos(th) * (1 + 0.3 * x))
    s = _inner(g, apply_V(g, u), v) + _inner(g, u, apply_V(g, v))
    assert abs(s) < 1e-12


def test_fiber_constant_has_zero_v(perturbed):
    g = _grid(perturbed, 16)
    u = pullback_field(perturbed, g, boundary_zero_potential(perturbed))
    assert np.max(np.abs(apply_V(g, u).values)) < 1e-14


def test_apply_x_on_linear_pullback(euclid):
    # u = pi* x has Xu = xi = cos(theta)
    g = _grid(euclid, 32)
    u = field_from_callable(g, lambda x, y, th: x + 0 * y * th)
    xu = apply_X(euclid, g, u)
    expected = np.cos(g.th_nodes)[None, None, :]
    assert np.max(np.abs(xu.values - expected)) < 1e-5


def test_apply_x_constant_is_zero(perturbed):
    g = _grid(perturbed, 16)
    u = field_from_callable(g, lambda x, y, th: 1.0 + 0 * x * y * th)
    assert np.max(np.abs(apply_X(perturbed, g, u).values)) < 1e-12


def test_apply_x_skew_on_compact_fields(euclid):
    # X is divergence-free for dSigma, so <Xu, v> + <u, Xv> -> 0
    g = _grid(euclid, 32)
    u = compact_test_field(g)
    v = compact_test_field(g, x_lo=0.4, x_hi=0.9)
    s = _inner(g, apply_X(euclid, g, u), v) + _inner(g, u, apply_X(euclid, g, v))
    scale = np.sqrt(_inner(g, u, u) * _inner(g, v, v))
    assert abs(s) < 1e-3 * scale


def test_apply_h_on_pullback(euclid):
    # u = pi*(x^2): Xu = 2x cos(theta), Hu = V(Xu) = -2x sin(theta)
    g = _grid(euclid, 32)
    u = field_from_callable(g, lambda x, y, th: x**2 + 0 * y * th)
    hu = apply_H(euclid, g, u)
    expected = -2.0 * g.x_nodes[:, None, None] * np.sin(g.th_nodes)[None, None, :]
    assert np.max(np.abs(hu.values - expected)) < 1e-4


def test_identity_compact_field(perturbed):
    g = _grid(perturbed, 32)
    rep = pestov_residual(perturbed, g, compact_test_field(g))
    assert rep.relative_residual < 2e-4
    assert rep.boundary_term == 0.0
    # the inequality |VXu|^2 >= |XVu|^2 + |Xu|^2 under K < 0
    assert rep.norm_VXu2 >= rep.norm_XVu2 + rep.norm_Xu2 - abs(rep.residual)


def test_identity_rejects_face_support(perturbed):
    g = _grid(perturbed, 16)
    u = field_from_callable(g, lambda x, y, th: np.sin(th) + 0 * x * y)
    with pytest.raises(UnsupportedSupport):
        pestov_residual(perturbed, g, u)


def test_identity_zero_field(perturbed):
    g = _grid(perturbed, 16)
    u = field_from_callable(g, lambda x, y, th: 0.0 * x * y * th)
    rep = pestov_residual(perturbed, g, u)
    assert rep.residual == 0.0
    assert rep.norm_Xu2 == 0.0


def test_identity_pullback_with_boundary(perturbed):
    # fiber-constant u: |VXu|^2 = |Xu|^2 exactly, so the face term must
    # absorb the remaining |XVu|^2 = curvature = 0 bookkeeping to 1e-10
    g = _grid(perturbed, 32)
    u = pullback_field(perturbed, g, boundary_zero_potential(perturbed))
    rep = pestov_residual(perturbed, g, u, include_boundary=True)
    assert rep.relative_residual < 1e-10
    assert rep.norm_XVu2 < 1e-20


def test_boundary_term_zero_for_fiber_constant(perturbed):
    g = _grid(perturbed, 16)
    u = pullback_field(perturbed, g, boundary_zero_potential(perturbed))
    assert abs(boundary_term(perturbed, g, u)) < 1e-10


def test_fiber_identity(perturbed):
    g = _grid(perturbed, 24)
    err = fiber_identity_check(perturbed, g, smooth_oneform(perturbed))
    assert err.shape == (24, 24)
    assert np.max(err) < 1e-12
