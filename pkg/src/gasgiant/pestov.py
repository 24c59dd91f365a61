"""Energy identities on the truncated unit cosphere bundle (n = 2).

The slab eps <= x <= x_top carries the grid (x, y, theta) with theta the
Sasaki fiber arclength, so the vertical derivative V is d/dtheta and the
Liouville measure is dSigma = x^{-1} sqrt(h11) dx dy dtheta.  X is realized
by short-flow differencing along the verified Hamiltonian tracer, V by the
spectral theta-derivative, and H by the commutator VX - XV.  On these
operators the truncated identity

    ||VXu||^2 = ||XVu||^2 - int K |Vu|^2 dSigma + ||Xu||^2 + B(u)

is evaluated together with its truncation boundary term and the per-fiber
first-harmonic identity int |dw/dtheta|^2 = int |w|^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.ndimage import map_coordinates, spline_filter

from .errors import InvalidGrid, Unsupported, UnsupportedSupport
from .flow import rhs_batch
from .forms import OneForm, ScalarPotential
from .metric import MetricModel, gaussian_curvature_grid

_PAD = 12  # ghost cells per side; spline-prefilter edge influence ~0.268^PAD
_TWO_PI = 2.0 * np.pi


@dataclass
class PhaseGrid:
    """Uniform (x, y, theta) grid on S*M_eps with dSigma quadrature weights."""

    model: MetricModel
    eps: float
    x_top: float
    nx: int
    ny: int
    ntheta: int
    x_nodes: np.ndarray
    y_nodes: np.ndarray
    th_nodes: np.ndarray
    dx: float
    dy: float
    dth: float
    sqrt_h11: np.ndarray  # (nx, ny)
    weights: np.ndarray  # (nx, ny, ntheta), realizes dSigma
    W: np.ndarray  # (nx, ny, ntheta, 4) lifted phase points
    flow_delta: float

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.ntheta)

    @property
    def total_measure(self) -> float:
        return float(self.weights.sum())


@dataclass
class PhaseField:
    """Node values of a function on S*M_eps.

    extend, when given, evaluates the field at arbitrary (x, y, theta) and
    lets flow-step differencing reach past the x-faces; without it the
    field is treated as zero outside the slab and near-face derivative
    nodes are marked invalid.
    """

    values: np.ndarray
    extend: Callable[..., np.ndarray] | None = None
    valid: np.ndarray | None = None


@dataclass
class PestovReport:
    norm_VXu2: float
    norm_XVu2: float
    curvature_term: float
    norm_Xu2: float
    boundary_term: float
    residual: float
    relative_residual: float
    grid_spec: tuple[int, int, int, float, float]


def build_grid(model: MetricModel, eps: float, x_top: float,
               nx: int, ny: int, ntheta: int) -> PhaseGrid:
    """Grid S*M_eps with trapezoid-in-x, periodic-in-(y, theta) weights."""
    if model.dim != 2:
        raise Unsupported("phase grids are built for dim = 2 models")
    if not 0.0 < eps < x_top <= model.x_ceiling:
        raise InvalidGrid(f"need 0 < eps < x_top <= {model.x_ceiling}, "
                          f"got eps={eps}, x_top={x_top}")
    if nx < 4 or ny < 4 or ntheta < 4:
        raise InvalidGrid("need at least 4 nodes per axis")
    L = model.y_periods[0]
    x_nodes = np.linspace(eps, x_top, nx)
    y_nodes = L * np.arange(ny) / ny
    th_nodes = _TWO_PI * np.arange(ntheta) / ntheta
    dx = x_nodes[1] - x_nodes[0]
    dy = L / ny
    dth = _TWO_PI / ntheta

    xg = np.broadcast_to(x_nodes[:, None], (nx, ny))
    yg = np.broadcast_to(y_nodes[None, :, None], (nx, ny, 1))
    h11 = model.h_eval(xg, yg).h[..., 0, 0]
    sqrt_h11 = np.sqrt(h11)

    wx = np.full(nx, dx)
    wx[0] = wx[-1] = 0.5 * dx  # trapezoid closes the x-faces
    weights = (wx[:, None] * sqrt_h11 / x_nodes[:, None])[:, :, None] \
        * np.full(ntheta, dy * dth)[None, None, :]

    # lifted unit-fiber phase points: xi = cos, eta = sin * sqrt(h11) / x
    W = np.empty((nx, ny, ntheta, 4))
    W[..., 0] = x_nodes[:, None, None]
    W[..., 1] = y_nodes[None, :, None]
    W[..., 2] = np.cos(th_nodes)[None, None, :]
    W[..., 3] = np.sin(th_nodes)[None, None, :] \
        * (sqrt_h11 / x_nodes[:, None])[:, :, None]

    return PhaseGrid(model, eps, x_top, nx, ny, ntheta, x_nodes, y_nodes,
                     th_nodes, float(dx), float(dy), float(dth), sqrt_h11,
                     weights, W, flow_delta=0.25 * min(dx, dy, dth))


# ---------------------------------------------------------------------------
# field constructors


def field_from_callable(grid: PhaseGrid, fn: Callable[..., np.ndarray],
                        extend: bool = True) -> PhaseField:
    """Sample fn(x, y, theta) (broadcasting arrays) on the grid."""
    x = grid.x_nodes[:, None, None]
    y = grid.y_nodes[None, :, None]
    th = grid.th_nodes[None, None, :]
    vals = np.broadcast_to(np.asarray(fn(x, y, th), dtype=float),
                           grid.shape).copy()
    return PhaseField(vals, extend=fn if extend else None)


def pullback_field(model: MetricModel, grid: PhaseGrid,
                   p: ScalarPotential) -> PhaseField:
    """Fiber-constant lift of a base function p(x, y)."""

    def fn(x, y, th):
        val = np.asarray(p.p(np.asarray(x), np.asarray(y)[..., None]))
        return np.broadcast_to(val, np.broadcast_shapes(val.shape, np.shape(th)))

    return field_from_callable(grid, fn)


def lambda_field(model: MetricModel, grid: PhaseGrid, f: OneForm) -> PhaseField:
    """u = lambda f = f0 cos(theta) + x sqrt(h^11) f1 sin(theta)."""

    def fn(x, y, th):
        x = np.asarray(x, dtype=float)
        ym = np.asarray(y)[..., None]
        h11 = model.h_eval(x, ym).h[..., 0, 0]
        return (np.asarray(f.f0(x, ym)) * np.cos(th)
                + x / np.sqrt(h11) * np.asarray(f.fi(x, ym))[..., 0] * np.sin(th))

    return field_from_callable(grid, fn)


def compact_test_field(grid: PhaseGrid, x_lo: float | None = None,
                       x_hi: float | None = None) -> PhaseField:
    """Smooth bump in x times low trig harmonics in y and theta.

    Supported strictly inside the slab, so the truncation boundary term
    vanishes; extend is omitted to exercise the zero-extension path.
    """
    span = grid.x_top - grid.eps
    if x_lo is None:
        x_lo = grid.eps + 0.15 * span
    if x_hi is None:
        x_hi = grid.x_top - 0.15 * span
    if not grid.eps < x_lo < x_hi < grid.x_top:
        raise InvalidGrid("bump support must sit strictly inside the slab")
    L = grid.model.y_periods[0]
    wy = _TWO_PI / L

    def fn(x, y, th):
        x = np.asarray(x, dtype=float)
        t = np.clip((2.0 * x - (x_lo + x_hi)) / (x_hi - x_lo), -1.0, 1.0)
        phi = np.zeros_like(t)
        inside = np.abs(t) < 1.0
        phi[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
        ang = (np.sin(wy * y) * (0.8 * np.cos(th) + 0.5 * np.sin(2.0 * th))
               + 0.4 * np.cos(wy * y) * (1.0 + 0.3 * np.sin(th)))
        return phi * ang

    u = field_from_callable(grid, fn, extend=False)
    return u


# ---------------------------------------------------------------------------
# operators


def _lift(model: MetricModel, x, y, th):
    """Stack unit-fiber phase vectors for scattered (x, y, theta)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    th = np.asarray(th, dtype=float)
    x, y, th = np.broadcast_arrays(x, y, th)
    xs = np.maximum(x, 1e-9)  # ghost samples may clamp to the boundary
    h11 = model.h_eval(xs, y[..., None]).h[..., 0, 0]
    w = np.stack([xs, y, np.cos(th), np.sin(th) * np.sqrt(h11) / xs], axis=-1)
    return w


def _angles_of(model: MetricModel, w: np.ndarray):
    """(x, y, theta) of phase vectors; theta recovered from the fiber lift."""
    x, y, xi, eta = w[..., 0], w[..., 1], w[..., 2], w[..., 3]
    h11 = model.h_eval(x, y[..., None]).h[..., 0, 0]
    th = np.arctan2(eta * x / np.sqrt(h11), xi)
    return x, y, th


def _rk4(model: MetricModel, w: np.ndarray, dt: float) -> np.ndarray:
    k1 = rhs_batch(model, w)
    k2 = rhs_batch(model, w + 0.5 * dt * k1)
    k3 = rhs_batch(model, w + 0.5 * dt * k2)
    k4 = rhs_batch(model, w + dt * k3)
    return w + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _padded_values(grid: PhaseGrid, u: PhaseField) -> np.ndarray:
    """Wrap-pad y/theta and extend (or zero) the x-ghost slabs."""
    U = np.pad(u.values, ((0, 0), (_PAD, _PAD), (_PAD, _PAD)), mode="wrap")
    full = np.zeros((grid.nx + 2 * _PAD,) + U.shape[1:])
    full[_PAD:_PAD + grid.nx] = U
    if u.extend is not None:
        xg = grid.eps + grid.dx * np.arange(-_PAD, grid.nx + _PAD)
        xg = np.maximum(xg, 0.0)
        yg = grid.dy * np.arange(-_PAD, grid.ny + _PAD)
        tg = grid.dth * np.arange(-_PAD, grid.ntheta + _PAD)
        ghosts = np.concatenate([np.arange(_PAD),
                                 np.arange(grid.nx + _PAD, grid.nx + 2 * _PAD)])
        full[ghosts] = u.extend(xg[ghosts, None, None], yg[None, :, None],
                                tg[None, None, :])
    return full


def _sample(grid: PhaseGrid, filtered: np.ndarray, has_extend: bool,
            x, y, th):
    """Tricubic evaluation of a prefiltered padded array at scattered points."""
    L = grid.model.y_periods[0]
    ix = _PAD + (x - grid.eps) / grid.dx
    iy = _PAD + (y % L) / grid.dy
    it = _PAD + (th % _TWO_PI) / grid.dth
    vals = map_coordinates(filtered, np.stack([ix, iy, it]), order=3,
                           prefilter=False, mode="constant", cval=0.0)
    inside = (x >= grid.eps) & (x <= grid.x_top)
    if not has_extend:
        vals = np.where(inside, vals, 0.0)
    return vals, inside


def apply_X(model: MetricModel, grid: PhaseGrid, u: PhaseField) -> PhaseField:
    """Geodesic derivative by 5-point flow-step differencing.

    Nodes whose stencil leaves the slab are marked invalid unless the
    field carries an extension.
    """
    d = grid.flow_delta
    w0 = grid.W.reshape(-1, 4)
    p1 = _rk4(model, w0, d)
    p2 = _rk4(model, p1, d)
    m1 = _rk4(model, w0, -d)
    m2 = _rk4(model, m1, -d)
    filtered = spline_filter(_padded_values(grid, u), order=3, mode="constant")
    has_ext = u.extend is not None
    samples = []
    inside_all = np.ones(w0.shape[0], dtype=bool)
    for ws in (p2, p1, m1, m2):
        x, y, th = _angles_of(model, ws)
        v, inside = _sample(grid, filtered, has_ext, x, y, th)
        samples.append(v)
        inside_all &= inside
    xu = (-samples[0] + 8.0 * samples[1] - 8.0 * samples[2] + samples[3]) \
        / (12.0 * d)
    valid = None
    if not has_ext:
        valid = inside_all.reshape(grid.shape)
    if u.valid is not None:
        valid = u.valid if valid is None else (valid & u.valid)

    ext = None
    if has_ext:
        fn = u.extend

        def ext(x, y, th, _fn=fn, _d=d):
            w = _lift(model, x, y, th)
            shape = w.shape[:-1]
            w = w.reshape(-1, 4)
            q1 = _rk4(model, w, _d)
            q2 = _rk4(model, q1, _d)
            n1 = _rk4(model, w, -_d)
            n2 = _rk4(model, n1, -_d)
            vals = [_fn(*_angles_of(model, ws)) for ws in (q2, q1, n1, n2)]
            out = (-vals[0] + 8.0 * vals[1] - 8.0 * vals[2] + vals[3]) / (12.0 * _d)
            return out.reshape(shape)

    return PhaseField(xu.reshape(grid.shape), ext, valid)


def apply_V(grid: PhaseGrid, u: PhaseField) -> PhaseField:
    """Vertical derivative d/dtheta, spectral with the Nyquist mode zeroed."""
    n = grid.ntheta
    ik = 1j * np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        ik[n // 2] = 0.0
    vu = np.fft.ifft(np.fft.fft(u.values, axis=2) * ik, axis=2).real

    ext = None
    if u.extend is not None:
        fn = u.extend

        def ext(x, y, th, _fn=fn, _h=1e-5):
            return (np.asarray(_fn(x, y, th + _h)) - np.asarray(_fn(x, y, th - _h))) \
                / (2.0 * _h)

    return PhaseField(vu, ext, u.valid)


def apply_H(model: MetricModel, grid: PhaseGrid, u: PhaseField) -> PhaseField:
    """Horizontal derivative via the commutator Hu = V(Xu) - X(Vu)."""
    xv = apply_X(model, grid, apply_V(grid, u))
    vx = apply_V(grid, apply_X(model, grid, u))
    valid = None
    for m in (xv.valid, vx.valid):
        if m is not None:
            valid = m if valid is None else (valid & m)
    return PhaseField(vx.values - xv.values, None, valid)


# ---------------------------------------------------------------------------
# identities


def _masked_sum(grid: PhaseGrid, mask: np.ndarray | None,
                integrand: np.ndarray) -> float:
    w = grid.weights if mask is None else np.where(mask, grid.weights, 0.0)
    return float(np.sum(w * integrand))


def boundary_term(model: MetricModel, grid: PhaseGrid, u: PhaseField,
                  Xu: PhaseField | None = None, Vu: PhaseField | None = None,
                  VXu: PhaseField | None = None,
                  XVu: PhaseField | None = None) -> float:
    """Truncation-face term B(u) = int Vu (Hu cos(th) + Xu sin(th)) dA.

    The two pieces are the outward fluxes of X and H through the x-faces
    against the vertical derivative: cos(theta) and sin(theta) are the
    face-normal components of the two horizontal frame fields, and
    dA = sqrt(h11) x^{-1} dy dtheta is the unweighted face density.  The
    orientation (outer face +, inner face -) is the outward divergence
    convention; the combination was validated by making the truncated
    identity balance under refinement on fields supported at either face.
    Fiber-constant fields give B = 0 exactly.
    """
    if Xu is None:
        Xu = apply_X(model, grid, u)
    if Vu is None:
        Vu = apply_V(grid, u)
    if VXu is None:
        VXu = apply_V(grid, Xu)
    if XVu is None:
        XVu = apply_X(model, grid, Vu)
    hu = VXu.values - XVu.values
    cos_th = np.cos(grid.th_nodes)[None, :]
    sin_th = np.sin(grid.th_nodes)[None, :]
    total = 0.0
    for idx, sign in ((0, -1.0), (-1, 1.0)):
        face_w = (grid.sqrt_h11[idx][:, None] / grid.x_nodes[idx]) \
            * grid.dy * grid.dth
        integ = Vu.values[idx] * (hu[idx] * cos_th + Xu.values[idx] * sin_th)
        total += sign * float(np.sum(integ * face_w))
    return total


def pestov_residual(model: MetricModel, grid: PhaseGrid, u: PhaseField,
                    include_boundary: bool = False) -> PestovReport:
    """Evaluate the truncated energy identity on a sampled field.

    Without include_boundary the field must vanish near both x-faces
    (compact support makes the boundary term zero).
    """
    scale = float(np.max(np.abs(u.values)))
    if not include_boundary and scale > 0.0:
        edge = max(float(np.max(np.abs(u.values[:2]))),
                   float(np.max(np.abs(u.values[-2:]))))
        if edge > 1e-10 * scale:
            raise UnsupportedSupport(
                "field touches the x-faces; request the boundary term")

    Xu = apply_X(model, grid, u)
    Vu = apply_V(grid, u)
    VXu = apply_V(grid, Xu)
    XVu = apply_X(model, grid, Vu)

    mask = None
    for f in (u, Xu, Vu, VXu, XVu):
        if f.valid is not None:
            mask = f.valid if mask is None else (mask & f.valid)

    K = gaussian_curvature_grid(
        model, np.broadcast_to(grid.x_nodes[:, None], (grid.nx, grid.ny)),
        np.broadcast_to(grid.y_nodes[None, :, None], (grid.nx, grid.ny, 1)))

    n_vxu = _masked_sum(grid, mask, VXu.values**2)
    n_xvu = _masked_sum(grid, mask, XVu.values**2)
    n_xu = _masked_sum(grid, mask, Xu.values**2)
    curv = _masked_sum(grid, mask, K[:, :, None] * Vu.values**2)
    b = boundary_term(model, grid, u, Xu, Vu, VXu, XVu) if include_boundary else 0.0

    residual = n_vxu - n_xvu + curv - n_xu - b
    denom = max(n_vxu, n_xvu, abs(curv), n_xu, abs(b), 1e-300)
    return PestovReport(n_vxu, n_xvu, curv, n_xu, b, residual,
                        abs(residual) / denom,
                        (grid.nx, grid.ny, grid.ntheta, grid.eps, grid.x_top))


def fiber_identity_check(model: MetricModel, grid: PhaseGrid,
                         f: OneForm) -> np.ndarray:
    """Per-base-node relative error of int |dw/dtheta|^2 = int |w|^2.

    w = lambda f is a first harmonic in theta, so the periodic trapezoid
    sum and the spectral derivative are both exact.
    """
    w = lambda_field(model, grid, f)
    dw = apply_V(grid, w)
    lhs = np.sum(dw.values**2, axis=2) * grid.dth
    rhs = np.sum(w.values**2, axis=2) * grid.dth
    denom = np.maximum(np.maximum(lhs, rhs), 1e-300)
    return np.abs(lhs - rhs) / denom
