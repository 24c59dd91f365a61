"""Half-cylinder metric models g = dx^2 + x^{-2} h(x, y, dy).

The chart is x in [0, x_ceiling] with y on a flat torus; the metric is
degenerate at x = 0 by design.  All evaluators broadcast over numpy
arrays: x has shape S, y has shape S + (m,) with m = dim - 1, and the
h-matrices come back with shape S + (m, m).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import SingularAtBoundary, Unsupported


@dataclass(frozen=True)
class HDerivatives:
    """h(x, y) together with its partials at a batch of chart points.

    Index convention: dy[..., k, i, j] = d h_ij / d y^k, and for second
    partials dxy[..., k, i, j] = d^2 h_ij / dx dy^k,
    dyy[..., k, l, i, j] = d^2 h_ij / dy^k dy^l.
    """

    h: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    dxx: np.ndarray | None = None
    dxy: np.ndarray | None = None
    dyy: np.ndarray | None = None


@dataclass(frozen=True)
class MetricModel:
    """A builtin gas giant geometry on the half-cylinder chart."""

    name: str
    dim: int
    y_periods: tuple[float, ...]
    x_ceiling: float
    h_eval: Callable[..., HDerivatives] = field(repr=False)

    @property
    def m(self) -> int:
        return self.dim - 1


@dataclass(frozen=True)
class ChartPoint:
    """A point (x, y) of the boundary-normal chart, y reduced mod periods."""

    x: float
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", np.atleast_1d(np.asarray(self.y, dtype=float)))

    @staticmethod
    def of(model: MetricModel, x: float, y) -> "ChartPoint":
        if not 0.0 <= x <= model.x_ceiling:
            raise ValueError(f"x={x} outside [0, {model.x_ceiling}]")
        y = np.atleast_1d(np.asarray(y, dtype=float))
        y = np.mod(y, np.asarray(model.y_periods))
        return ChartPoint(x, y)


# ---------------------------------------------------------------------------
# builtin h-families


def _euclidean_h(x, y, order=1):
    x = np.asarray(x, dtype=float)
    one = np.ones(x.shape + (1, 1))
    zero = np.zeros(x.shape + (1, 1))
    zy = np.zeros(x.shape + (1, 1, 1))
    if order < 2:
        return HDerivatives(one, zero, zy)
    return HDerivatives(one, zero, zy, zero, zy, np.zeros(x.shape + (1, 1, 1, 1)))


def _perturbed_h(a, b, L):
    w = 2.0 * np.pi / L

    def eval_h(x, y, order=1):
        x = np.asarray(x, dtype=float)
        y0 = np.asarray(y, dtype=float)[..., 0]
        cw, sw = np.cos(w * y0), np.sin(w * y0)
        c = 1.0 + a * x * cw + b * x * x
        c_x = a * cw + 2.0 * b * x
        c_y = -a * x * w * sw

        def mat(v):
            return np.asarray(v)[..., None, None]

        h = mat(c * c)
        dx = mat(2.0 * c * c_x)
        dy = mat(2.0 * c * c_y)[..., None, :, :]
        if order < 2:
            return HDerivatives(h, dx, dy)
        c_xx = 2.0 * b
        c_xy = -a * w * sw
        c_yy = -a * x * w * w * cw
        dxx = mat(2.0 * (c_x * c_x + c * c_xx))
        dxy = mat(2.0 * (c_x * c_y + c * c_xy))[..., None, :, :]
        dyy = mat(2.0 * (c_y * c_y + c * c_yy))[..., None, None, :, :]
        return HDerivatives(h, dx, dy, dxx, dxy, dyy)

    return eval_h


def _torus3d_h(a, b):
    def eval_h(x, y, order=1):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        y1, y2 = y[..., 0], y[..., 1]
        c1 = 1.0 + a * x * np.cos(y1)
        c2 = 1.0 + b * x * np.sin(y2)
        c1_x, c2_x = a * np.cos(y1), b * np.sin(y2)
        c1_y1 = -a * x * np.sin(y1)
        c2_y2 = b * x * np.cos(y2)

        def diag(d1, d2):
            out = np.zeros(np.broadcast(d1, d2).shape + (2, 2))
            out[..., 0, 0] = d1
            out[..., 1, 1] = d2
            return out

        h = diag(c1 * c1, c2 * c2)
        dx = diag(2 * c1 * c1_x, 2 * c2 * c2_x)
        dy = np.stack(
            [diag(2 * c1 * c1_y1, np.zeros_like(c2)),
             diag(np.zeros_like(c1), 2 * c2 * c2_y2)],
            axis=-3,
        )
        if order < 2:
            return HDerivatives(h, dx, dy)
        c1_xx = np.zeros_like(c1)
        c1_xy1 = -a * np.sin(y1)
        c1_y1y1 = -a * x * np.cos(y1)
        c2_xy2 = b * np.cos(y2)
        c2_y2y2 = -b * x * np.sin(y2)
        dxx = diag(2 * c1_x * c1_x, 2 * c2_x * c2_x)
        dxy = np.stack(
            [diag(2 * (c1_x * c1_y1 + c1 * c1_xy1), np.zeros_like(c2)),
             diag(np.zeros_like(c1), 2 * (c2_x * c2_y2 + c2 * c2_xy2))],
            axis=-3,
        )
        zero2 = np.zeros_like(h)
        dyy = np.stack(
            [np.stack([diag(2 * (c1_y1 * c1_y1 + c1 * c1_y1y1), np.zeros_like(c2)), zero2], axis=-3),
             np.stack([zero2, diag(np.zeros_like(c1), 2 * (c2_y2 * c2_y2 + c2 * c2_y2y2))], axis=-3)],
            axis=-4,
        )
        _ = c1_xx
        return HDerivatives(h, dx, dy, dxx, dxy, dyy)

    return eval_h


def euclidean_half_cylinder(L: float = 1.0, x_ceiling: float = 1.0) -> MetricModel:
    """n = 2, h == 1: closed-form rays x(t) = s sin(t), exit time pi."""
    return MetricModel("euclidean", 2, (L,), x_ceiling, _euclidean_h)


def perturbed_half_cylinder(a: float = 0.3, b: float = 0.1, L: float = 1.0,
                            x_ceiling: float = 1.0) -> MetricModel:
    """n = 2, h = (1 + a x cos(2 pi y / L) + b x^2)^2; exercises every term."""
    return MetricModel("perturbed", 2, (L,), x_ceiling, _perturbed_h(a, b, L))


def torus3d(a: float = 0.3, b: float = 0.2, x_ceiling: float = 1.0) -> MetricModel:
    """n = 3, diagonal h on a 2-torus boundary with periods 2 pi."""
    return MetricModel("torus3d", 3, (2.0 * np.pi, 2.0 * np.pi), x_ceiling,
                       _torus3d_h(a, b))


def make_model(name: str, **params) -> MetricModel:
    builders = {
        "euclidean": euclidean_half_cylinder,
        "perturbed": perturbed_half_cylinder,
        "torus3d": torus3d,
    }
    if name not in builders:
        raise Unsupported(f"unknown model {name!r}; choose from {sorted(builders)}")
    return builders[name](**params)


# ---------------------------------------------------------------------------
# inverse-matrix derivative helpers


def inverse_with_derivatives(hd: HDerivatives, order: int = 1):
    """A = h^{-1} and its partials from the partials of h.

    Uses dA = -A (dh) A and
    d^2A/du dv = A h_v A h_u A + A h_u A h_v A - A h_uv A.
    """
    A = np.linalg.inv(hd.h)

    def sand(d):
        return -np.einsum("...ik,...kl,...lj->...ij", A, d, A)

    A_x = sand(hd.dx)
    A_y = -np.einsum("...ik,...mkl,...lj->...mij", A, hd.dy, A)
    if order < 2:
        return A, A_x, A_y, None, None, None

    def second(du, dv, duv):
        # du, dv: (..., m, m); duv: (..., m, m)
        t1 = np.einsum("...ia,...ab,...bc,...cd,...dj->...ij", A, dv, A, du, A)
        t2 = np.einsum("...ia,...ab,...bc,...cd,...dj->...ij", A, du, A, dv, A)
        t3 = np.einsum("...ik,...kl,...lj->...ij", A, duv, A)
        return t1 + t2 - t3

    A_xx = second(hd.dx, hd.dx, hd.dxx)
    k = hd.dy.shape[-3]
    A_xy = np.stack([second(hd.dx, hd.dy[..., q, :, :], hd.dxy[..., q, :, :])
                     for q in range(k)], axis=-3)
    A_yy = np.stack(
        [np.stack([second(hd.dy[..., q, :, :], hd.dy[..., r, :, :],
                          hd.dyy[..., q, r, :, :]) for r in range(k)], axis=-3)
         for q in range(k)], axis=-4)
    return A, A_x, A_y, A_xx, A_xy, A_yy


# ---------------------------------------------------------------------------
# pointwise geometric quantities


def cometric(model: MetricModel, z: ChartPoint) -> np.ndarray:
    """Block-diagonal g^{mu nu}: g^{00} = 1, g^{ij} = x^2 h^{ij}.

    Degenerates (zero y-block) at x = 0; that is a valid input.
    """
    n = model.dim
    g = np.zeros((n, n))
    g[0, 0] = 1.0
    hd = model.h_eval(z.x, z.y)
    if z.x > 0.0:
        g[1:, 1:] = z.x**2 * np.linalg.inv(hd.h)
    return g


def christoffel(model: MetricModel, z: ChartPoint) -> np.ndarray:
    """Full symbol table Gamma[mu, nu, lam] of g at an interior point."""
    if z.x == 0.0:
        raise SingularAtBoundary("Christoffel symbols carry 1/x factors at x = 0")
    x = z.x
    hd = model.h_eval(x, z.y)
    h, h_x, h_y = hd.h, hd.dx, hd.dy
    A = np.linalg.inv(h)
    m = model.m
    n = model.dim
    G = np.zeros((n, n, n))
    # Gamma^i_{j0} = 1/2 h^{ik} dx h_{kj} - delta^i_j / x  (symmetric in (j,0))
    Gij0 = 0.5 * np.einsum("ik,kj->ij", A, h_x) - np.eye(m) / x
    G[1:, 1:, 0] = Gij0
    G[1:, 0, 1:] = Gij0
    # Gamma^0_{ij} = x^{-3} h_ij - 1/2 x^{-2} dx h_ij
    G[0, 1:, 1:] = h / x**3 - 0.5 * h_x / x**2
    # Gamma^i_{jk} = H^i_{jk}, the Christoffels of h:
    # H^i_{jk} = 1/2 h^{il} (d_j h_lk + d_k h_lj - d_l h_jk)
    dh = np.einsum("kij->ijk", h_y)  # dh[i, j, k] = d h_ij / d y^k
    H = np.zeros((m, m, m))
    for i in range(m):
        for j in range(m):
            for k in range(m):
                s = 0.0
                for l in range(m):
                    s += A[i, l] * (dh[l, k, j] + dh[l, j, k] - dh[j, k, l])
                H[i, j, k] = 0.5 * s
    G[1:, 1:, 1:] = H
    return G


def gaussian_curvature(model: MetricModel, z: ChartPoint) -> float:
    """Gaussian curvature of g at an interior point (n = 2 only).

    For g = dx^2 + f^2 dy^2 with f = sqrt(h11)/x the curvature is -f_xx/f.
    """
    if model.dim != 2:
        raise Unsupported("Gaussian curvature is defined for dim = 2 only")
    if z.x == 0.0:
        raise SingularAtBoundary("curvature blows up like x^{-2} at the boundary")
    return float(gaussian_curvature_grid(model, np.asarray(z.x), z.y[None, :])[()])


def gaussian_curvature_grid(model: MetricModel, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorized Gaussian curvature over arrays of interior chart points."""
    hd = model.h_eval(x, y, order=2)
    h11 = hd.h[..., 0, 0]
    h11_x = hd.dx[..., 0, 0]
    h11_xx = hd.dxx[..., 0, 0]
    r = np.sqrt(h11)
    r_x = h11_x / (2.0 * r)
    r_xx = h11_xx / (2.0 * r) - h11_x**2 / (4.0 * h11 * r)
    x = np.asarray(x, dtype=float)
    f = r / x
    f_xx = r_xx / x - 2.0 * r_x / x**2 + 2.0 * r / x**3
    return -f_xx / f


def second_fundamental_form(model: MetricModel, z: ChartPoint, eta) -> float:
    """Dual second fundamental form II(eta, eta) of the level sets of x.

    II = x h^{ij} eta_i eta_j + 1/2 x^2 (dx h^{ij}) eta_i eta_j; vanishes
    at x = 0 and controls the flow via xi-dot = -II.
    """
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    x = z.x
    if x == 0.0:
        return 0.0
    hd = model.h_eval(x, z.y)
    A = np.linalg.inv(hd.h)
    A_x = -A @ hd.dx @ A
    return float(x * eta @ A @ eta + 0.5 * x**2 * eta @ A_x @ eta)


def unit_fiber_point(model: MetricModel, z: ChartPoint, theta: float) -> tuple[float, np.ndarray]:
    """Unit-speed covector on the fiber over z, parametrized by Sasaki arclength.

    xi = cos(theta), eta = sin(theta) / (x sqrt(h^{11})); n = 2 only.
    """
    if model.dim != 2:
        raise Unsupported("fiber angle parametrization is for dim = 2 only")
    if z.x == 0.0:
        raise SingularAtBoundary("unit fiber degenerates at x = 0")
    hd = model.h_eval(z.x, z.y)
    h11_inv = 1.0 / hd.h[..., 0, 0]
    xi = float(np.cos(theta))
    eta = np.atleast_1d(np.sin(theta) / (z.x * np.sqrt(h11_inv)))
    return xi, eta
