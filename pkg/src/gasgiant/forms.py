"""Smooth 1-forms and scalar potentials on the half-cylinder chart.

A 1-form f = f_0 dx + f_i dy^i is stored through callables so the same
object drives quadrature along rays, transport residuals, and the exact
first-variation formulas.  All component callables broadcast like the
metric evaluators: x of shape S, y of shape S + (m,).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import Unsupported
from .metric import MetricModel


@dataclass(frozen=True)
class OneForm:
    """Components of f and (optionally) their first partials.

    fi returns shape S + (m,); dfi_dy[..., i, k] = d f_i / d y^k.
    Derivative callables may be None; operations that need them raise.
    support_x bounds the x-support (np.inf for global support).
    """

    f0: Callable[..., np.ndarray]
    fi: Callable[..., np.ndarray]
    df0_dx: Callable[..., np.ndarray] | None = None
    df0_dy: Callable[..., np.ndarray] | None = None
    dfi_dx: Callable[..., np.ndarray] | None = None
    dfi_dy: Callable[..., np.ndarray] | None = None
    support_x: float = np.inf
    label: str = "oneform"

    def require_derivatives(self) -> None:
        if any(g is None for g in (self.df0_dx, self.df0_dy, self.dfi_dx, self.dfi_dy)):
            raise Unsupported(f"form {self.label!r} carries no derivative data")


@dataclass(frozen=True)
class ScalarPotential:
    """A function p(x, y) with gradient data; dp is the exact 1-form."""

    p: Callable[..., np.ndarray]
    dp_dx: Callable[..., np.ndarray]
    dp_dy: Callable[..., np.ndarray]
    boundary_zero: bool = True
    label: str = "potential"

    def differential(self) -> OneForm:
        return OneForm(self.dp_dx, self.dp_dy, support_x=np.inf,
                       label=f"d({self.label})")


# ---------------------------------------------------------------------------
# test-form library


def _trig(L):
    w = 2.0 * np.pi / L

    def s(y):
        return np.sin(w * np.asarray(y)[..., 0])

    def c(y):
        return np.cos(w * np.asarray(y)[..., 0])

    return w, s, c


def boundary_zero_potential(model: MetricModel, amp: float = 1.0) -> ScalarPotential:
    """p = amp * x e^{-x} sin(2 pi y / L); vanishes on the boundary x = 0."""
    if model.m != 1:
        raise Unsupported("test potentials are built for dim = 2 models")
    L = model.y_periods[0]
    w, s, c = _trig(L)

    def p(x, y):
        return amp * np.asarray(x) * np.exp(-np.asarray(x)) * s(y)

    def dp_dx(x, y):
        x = np.asarray(x)
        return amp * (1.0 - x) * np.exp(-x) * s(y)

    def dp_dy(x, y):
        x = np.asarray(x)
        return (amp * w * x * np.exp(-x) * c(y))[..., None]

    return ScalarPotential(p, dp_dx, dp_dy, boundary_zero=True, label="xexp-sin")


def smooth_oneform(model: MetricModel, c0: float = 0.7, c1: float = 1.3) -> OneForm:
    """Globally supported smooth form with full analytic derivative data.

    f0 = c0 e^{-x} cos(2 pi y / L), f1 = c1 (1 + x^2) sin(2 pi y / L).
    """
    if model.m != 1:
        raise Unsupported("the smooth test form is built for dim = 2 models")
    L = model.y_periods[0]
    w, s, c = _trig(L)

    def f0(x, y):
        return c0 * np.exp(-np.asarray(x)) * c(y)

    def fi(x, y):
        x = np.asarray(x)
        return (c1 * (1.0 + x**2) * s(y))[..., None]

    def df0_dx(x, y):
        return -c0 * np.exp(-np.asarray(x)) * c(y)

    def df0_dy(x, y):
        return (-c0 * w * np.exp(-np.asarray(x)) * s(y))[..., None]

    def dfi_dx(x, y):
        return (c1 * 2.0 * np.asarray(x) * s(y))[..., None]

    def dfi_dy(x, y):
        x = np.asarray(x)
        return (c1 * w * (1.0 + x**2) * c(y))[..., None, None]

    return OneForm(f0, fi, df0_dx, df0_dy, dfi_dx, dfi_dy, label="smooth")


def constant_dy_form(model: MetricModel, c: float = 1.0) -> OneForm:
    """f = c dy, the probe target with a known boundary trace."""
    if model.m != 1:
        raise Unsupported("constant dy form is built for dim = 2 models")

    def f0(x, y):
        return np.zeros(np.shape(np.asarray(x)))

    def fi(x, y):
        return np.full(np.shape(np.asarray(x)) + (1,), c)

    def zero1(x, y):
        return np.zeros(np.shape(np.asarray(x)))

    def zerom(x, y):
        return np.zeros(np.shape(np.asarray(x)) + (1,))

    def zeromm(x, y):
        return np.zeros(np.shape(np.asarray(x)) + (1, 1))

    return OneForm(f0, fi, zero1, zerom, zerom, zeromm, label=f"{c}*dy")


def _bump(sx):
    # C^infty cutoff supported on [0, sx), equal to 1 at x = 0

    def b(x):
        x = np.asarray(x, dtype=float)
        r2 = np.clip((x / sx) ** 2, 0.0, 1.0)
        out = np.zeros_like(r2)
        inside = r2 < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
        return out

    def db(x):
        x = np.asarray(x, dtype=float)
        r2 = np.clip((x / sx) ** 2, 0.0, 1.0)
        out = np.zeros_like(r2)
        inside = r2 < 1.0
        u = 1.0 - r2[inside]
        out[inside] = np.exp(1.0 - 1.0 / u) * (-2.0 * x[inside] / sx**2) / u**2
        return out

    return b, db


def order_k_form(model: MetricModel, k: int, support_x: float = 0.5,
                 a: float = 1.0, b: float = 1.0) -> OneForm:
    """f = x^k bump(x) (a cos(2 pi y / L) dx + b sin(2 pi y / L) dy).

    Vanishes to order k at the boundary and is compactly supported below
    support_x, so rays that escape through the ceiling still see the
    complete integral.
    """
    if model.m != 1:
        raise Unsupported("order-k forms are built for dim = 2 models")
    if k < 1:
        raise ValueError("k must be >= 1")
    L = model.y_periods[0]
    w, s, c = _trig(L)
    bump, dbump = _bump(support_x)

    def radial(x):
        return np.asarray(x, dtype=float) ** k * bump(x)

    def dradial(x):
        x = np.asarray(x, dtype=float)
        return k * x ** (k - 1) * bump(x) + x**k * dbump(x)

    def f0(x, y):
        return a * radial(x) * c(y)

    def fi(x, y):
        return (b * radial(x) * s(y))[..., None]

    def df0_dx(x, y):
        return a * dradial(x) * c(y)

    def df0_dy(x, y):
        return (-a * w * radial(x) * s(y))[..., None]

    def dfi_dx(x, y):
        return (b * dradial(x) * s(y))[..., None]

    def dfi_dy(x, y):
        return (b * w * radial(x) * c(y))[..., None, None]

    return OneForm(f0, fi, df0_dx, df0_dy, dfi_dx, dfi_dy,
                   support_x=support_x, label=f"order{k}")


# ---------------------------------------------------------------------------
# gauge correction


def gauge_correct(model: MetricModel, f: OneForm,
                  cut: tuple[float, float] | None = None) -> tuple[ScalarPotential, OneForm]:
    """Subtract dq with q(x, y) = chi(x) * int_0^x f0(t, y) dt.

    Returns (q, f - dq).  q vanishes on the boundary and above the outer
    cutoff, and the corrected form has zero dx-component on x <= cut[0].
    """
    if model.m != 1:
        raise Unsupported("gauge correction is built for dim = 2 models")
    if cut is None:
        cut = (0.5 * model.x_ceiling, model.x_ceiling)
    lo, hi = cut
    if not 0.0 < lo < hi <= model.x_ceiling:
        raise ValueError("need 0 < cut[0] < cut[1] <= x_ceiling")

    f.require_derivatives()
    width = hi - lo

    def chi_pair(x):
        # smooth transition 1 -> 0 on [lo, hi] with its analytic derivative
        x = np.asarray(x, dtype=float)
        t = np.clip((x - lo) / width, 0.0, 1.0)
        val = np.ones_like(t)
        der = np.zeros_like(t)
        mid = (t > 0.0) & (t < 1.0)
        tm = t[mid]
        e1 = np.exp(-1.0 / (1.0 - tm))
        e0 = np.exp(-1.0 / tm)
        val[mid] = e1 / (e1 + e0)
        # d/dt: (e1' e0 - e1 e0') / (e1 + e0)^2, e1' = -e1/(1-t)^2, e0' = e0/t^2
        der[mid] = (-e1 / (1.0 - tm) ** 2 * e0 - e1 * e0 / tm**2) / (e1 + e0) ** 2 / width
        val[t >= 1.0] = 0.0
        return val, der

    def _elementwise_quad(g, x, y):
        # int_0^x g(t, y) dt for each element of x
        x = np.atleast_1d(np.asarray(x, dtype=float))
        ys = np.broadcast_to(np.asarray(y, dtype=float), x.shape + (model.m,))
        out = np.empty_like(x)
        for idx in np.ndindex(x.shape):
            out[idx] = quad(lambda t: float(g(np.asarray(t), ys[idx])),
                            0.0, float(x[idx]), epsabs=1e-13, epsrel=1e-12,
                            limit=200)[0]
        return out

    def _shaped(val, x):
        return float(val.reshape(())) if np.ndim(x) == 0 else val.reshape(np.shape(x))

    def q(x, y):
        cv, _ = chi_pair(np.atleast_1d(np.asarray(x, dtype=float)))
        return _shaped(cv * _elementwise_quad(f.f0, x, y), x)

    def dq_dx(x, y):
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        ya = np.broadcast_to(np.asarray(y, dtype=float), xa.shape + (model.m,))
        cv, cd = chi_pair(xa)
        val = cd * _elementwise_quad(f.f0, xa, y) + cv * np.asarray(f.f0(xa, ya))
        return _shaped(val, x)

    def dq_dy(x, y):
        # d/dy int_0^x f0 = int_0^x df0_dy, differentiated under the integral
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        cv, _ = chi_pair(xa)
        val = cv * _elementwise_quad(lambda t, yv: f.df0_dy(t, yv)[..., 0], xa, y)
        return val[..., None].reshape(np.shape(x) + (1,))

    qpot = ScalarPotential(q, dq_dx, dq_dy, boundary_zero=True, label="gauge-q")

    def g0(x, y):
        return np.asarray(f.f0(x, y)) - np.reshape(np.atleast_1d(dq_dx(x, y)),
                                                   np.shape(np.asarray(x)))

    def gi(x, y):
        return np.asarray(f.fi(x, y)) - np.reshape(dq_dy(x, y),
                                                   np.shape(np.asarray(x)) + (model.m,))

    corrected = OneForm(g0, gi, support_x=max(f.support_x, hi),
                        label=f"{f.label}-gauge")
    return qpot, corrected
