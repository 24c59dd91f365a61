"""Linearized geodesic flow: Jacobi fields, gradients of u^f, exit-time gradient.

The variational system integrates the exact Jacobian of Hamilton's
equations alongside the base ray, so normal Jacobi fields J(t) and their
covariant derivatives D_tJ(t) come out without ever forming the
x^{-2}-singular curvature operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NoExit, SingularAtBoundary, ToleranceFailure
from .flow import (GeodesicPath, IntegratorOptions, PhaseState, Status,
                   exit_time, fit_loglog_slope, rhs_batch, trace)
from .forms import OneForm
from .metric import (ChartPoint, MetricModel, christoffel,
                     inverse_with_derivatives, unit_fiber_point)


@dataclass(frozen=True)
class TangentPerturbation:
    """A tangent vector of phase space in chart components."""

    dx: float
    dy: np.ndarray
    dxi: float
    deta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dy", np.atleast_1d(np.asarray(self.dy, dtype=float)))
        object.__setattr__(self, "deta", np.atleast_1d(np.asarray(self.deta, dtype=float)))

    def to_vec(self) -> np.ndarray:
        return np.concatenate(([self.dx], self.dy, [self.dxi], self.deta))

    @staticmethod
    def from_vec(v: np.ndarray) -> "TangentPerturbation":
        m = (len(v) - 2) // 2
        return TangentPerturbation(float(v[0]), v[1:1 + m], float(v[1 + m]), v[2 + m:])


def rhs_jacobian(model: MetricModel, w: np.ndarray) -> np.ndarray:
    """Exact Jacobian of the Hamiltonian vector field at state vector w."""
    m = model.m
    n2 = 2 + 2 * m
    x, y, xi, eta = w[0], w[1:1 + m], w[1 + m], w[2 + m:n2]
    hd = model.h_eval(np.asarray(x), y, order=2)
    A, A_x, A_y, A_xx, A_xy, A_yy = inverse_with_derivatives(hd, order=2)
    Aeta = A @ eta
    Axeta = A_x @ eta
    q = float(eta @ Aeta)
    q_x = float(eta @ Axeta)
    q_xx = float(eta @ A_xx @ eta)
    q_y = np.einsum("i,kij,j->k", eta, A_y, eta)
    q_xy = np.einsum("i,kij,j->k", eta, A_xy, eta)
    q_yy = np.einsum("i,klij,j->kl", eta, A_yy, eta)
    x2 = x * x
    J = np.zeros((n2, n2))
    J[0, 1 + m] = 1.0
    J[1:1 + m, 0] = 2.0 * x * Aeta + x2 * Axeta
    J[1:1 + m, 1:1 + m] = x2 * np.einsum("kij,j->ik", A_y, eta)
    J[1:1 + m, 2 + m:] = x2 * A
    J[1 + m, 0] = -q - 2.0 * x * q_x - 0.5 * x2 * q_xx
    J[1 + m, 1:1 + m] = -x * q_y - 0.5 * x2 * q_xy
    J[1 + m, 2 + m:] = -2.0 * x * Aeta - x2 * Axeta
    J[2 + m:, 0] = -x * q_y - 0.5 * x2 * q_xy
    J[2 + m:, 1:1 + m] = -0.5 * x2 * q_yy
    J[2 + m:, 2 + m:] = -x2 * np.einsum("kij,j->ki", A_y, eta)
    return J


@dataclass
class JacobiRecord:
    """A propagated perturbation with its Jacobi-field diagnostics."""

    status: Status
    tau: float | None
    dtau: float | None  # first variation of the exit time
    ts: np.ndarray
    states: np.ndarray        # (T, 2n) base ray
    perturbations: np.ndarray  # (T, 2n) propagated tangent vector
    J: np.ndarray             # (T, n) chart part dpi(dphi_t theta)
    DtJ: np.ndarray           # (T, n) connection-map part
    sup_J_bar: float          # sup_t |J|_{x^2 g}
    sup_DJ_bar_x: float       # sup_t x(t) |D_tJ|_{x^2 g}
    extras: np.ndarray
    exit_state: np.ndarray | None = None  # base state at the exit event


def _bar_norm(model: MetricModel, x, y, v):
    """|v|_{x^2 g} for chart vectors v of shape (T, n)."""
    h = model.h_eval(x, y).h
    return np.sqrt(x**2 * v[:, 0] ** 2 +
                   np.einsum("ti,tij,tj->t", v[:, 1:], h, v[:, 1:]))


def variational_trace(model: MetricModel, ic: PhaseState, theta: TangentPerturbation,
                      opts: IntegratorOptions = IntegratorOptions(),
                      grad_integrand=None) -> JacobiRecord:
    """Integrate the flow jointly with its exact first variation.

    grad_integrand, if given, maps (state vec, perturbation vec) to
    quadrature rates appended to the system; final values land in extras.
    """
    m = model.m
    n = model.dim
    n2 = 2 * n
    nq = 0 if grad_integrand is None else np.size(
        grad_integrand(ic.to_vec(), theta.to_vec()))

    def fun(t, w):
        base = w[:n2]
        pert = w[n2:2 * n2]
        dw = np.empty(2 * n2 + nq)
        dw[:n2] = rhs_batch(model, base)
        dw[n2:2 * n2] = rhs_jacobian(model, base) @ pert
        if nq:
            dw[2 * n2:] = grad_integrand(base, pert)
        return dw

    def exit_event(t, w):
        return w[0] - opts.exit_root_tol

    exit_event.terminal = True
    exit_event.direction = -1

    def escape_event(t, w):
        return w[0] - model.x_ceiling

    escape_event.terminal = True
    escape_event.direction = 1

    w0 = np.concatenate([ic.to_vec(), theta.to_vec(), np.zeros(nq)])
    res = solve_ivp(fun, (0.0, opts.t_max), w0, method="DOP853",
                    rtol=opts.rel_tol, atol=opts.abs_tol, max_step=opts.max_step,
                    dense_output=True, events=[exit_event, escape_event])
    if res.status == -1:
        raise ToleranceFailure(res.message)

    if len(res.t_events[0]):
        status, t_end = Status.EXITED, float(res.t_events[0][0])
    elif len(res.t_events[1]):
        status, t_end = Status.ESCAPED, float(res.t_events[1][0])
    else:
        status, t_end = Status.MAX_TIME, float(res.t[-1])

    # sample strictly inside (0, t_end); the connection map is x-singular
    # at the exact exit point, so the last sample sits just before it
    ts = np.linspace(t_end * 1e-3, t_end * (1.0 - 1e-3), 321)
    W = res.sol(ts).T
    base = W[:, :n2]
    pert = W[:, n2:2 * n2]
    x, y = base[:, 0], base[:, 1:1 + m]
    J = np.concatenate([pert[:, :1], pert[:, 1:1 + m]], axis=1)

    # (D_tJ)^kappa = d/dt(dz^kappa) + Gamma^kappa_{mu nu} zdot^mu dz^nu
    zdot = rhs_batch(model, base)[:, :n]
    dzdot = np.einsum("tij,tj->ti",
                      np.stack([rhs_jacobian(model, base[t]) for t in range(len(ts))]),
                      pert)[:, :n]
    DtJ = np.empty_like(J)
    for t in range(len(ts)):
        G = christoffel(model, ChartPoint(float(x[t]), y[t]))
        DtJ[t] = dzdot[t] + np.einsum("kuv,u,v->k", G, zdot[t], J[t])

    wend = res.sol(t_end)
    dtau = None
    if status is Status.EXITED:
        xi_end = wend[1 + m]
        if xi_end == 0.0:
            raise SingularAtBoundary("glancing exit; no exit-time variation")
        dtau = float(-wend[n2] / xi_end)

    sup_J = float(np.max(_bar_norm(model, x, y, J)))
    sup_DJ = float(np.max(x * _bar_norm(model, x, y, DtJ)))
    extras = wend[2 * n2:] if nq else np.zeros(0)
    tau = t_end if status is Status.EXITED else None
    exit_state = wend[:n2] if status is Status.EXITED else None
    return JacobiRecord(status, tau, dtau, ts, base, pert, J, DtJ,
                        sup_J, sup_DJ, extras, exit_state)


# ---------------------------------------------------------------------------
# normal perturbation constructors (n = 2)


def _angle_of(model: MetricModel, state: PhaseState) -> tuple[float, float, float]:
    hd = model.h_eval(np.asarray(state.x), state.y)
    h11 = float(hd.h[0, 0])
    sin_t = float(state.eta[0]) * state.x / np.sqrt(h11)
    return state.xi, sin_t, h11


def flow_direction(model: MetricModel, state: PhaseState) -> TangentPerturbation:
    """theta parallel to X: the phase velocity itself."""
    return TangentPerturbation.from_vec(rhs_batch(model, state.to_vec()))


def vertical_normal(model: MetricModel, state: PhaseState) -> TangentPerturbation:
    """Unit vertical vector tangent to the unit fiber (n = 2)."""
    cos_t, sin_t, h11 = _angle_of(model, state)
    return TangentPerturbation(0.0, np.zeros(1), -sin_t,
                               np.array([cos_t * np.sqrt(h11) / state.x]))


def horizontal_normal(model: MetricModel, state: PhaseState) -> TangentPerturbation:
    """Unit horizontal vector normal to the ray (n = 2).

    The chart part is the unit g-normal e to gamma-dot; the momentum part
    parallel-transports zeta along e: dzeta_lam = Gamma^nu_{lam mu} zeta_nu e^mu.
    """
    cos_t, sin_t, h11 = _angle_of(model, state)
    e = np.array([-sin_t, state.x * cos_t / np.sqrt(h11)])
    G = christoffel(model, ChartPoint(state.x, state.y))
    zeta = np.array([state.xi, state.eta[0]])
    dzeta = np.einsum("nlu,n,u->l", G, zeta, e)
    return TangentPerturbation(e[0], e[1:], float(dzeta[0]), dzeta[1:])


# ---------------------------------------------------------------------------
# suites


@dataclass
class JacobiBoundsRow:
    x0: float
    theta: float
    direction: str
    sup_J_bar: float
    sup_DJ_bar_x: float


@dataclass
class JacobiBoundsReport:
    rows: list[JacobiBoundsRow]
    growth_J_per_decade: float
    growth_DJ_per_decade: float


def jacobi_bounds_report(model: MetricModel, x0_grid, thetas,
                         y0=0.3, opts: IntegratorOptions = IntegratorOptions()) -> JacobiBoundsReport:
    """Sup norms of normal Jacobi data across a near-boundary x0 sweep.

    Reports the worst ratio of per-decade sups; ratios near 1 mean the
    bounds |J|_{x^2 g} <= C and x |D_tJ|_{x^2 g} <= C hold uniformly.
    """
    x0_grid = sorted(float(v) for v in x0_grid)
    rows = []
    for x0 in x0_grid:
        for th in thetas:
            z = ChartPoint.of(model, x0, [y0])
            xi, eta = unit_fiber_point(model, z, th)
            state = PhaseState(x0, z.y, xi, eta)
            for tag, ctor in (("vertical", vertical_normal),
                              ("horizontal", horizontal_normal)):
                rec = variational_trace(model, state, ctor(model, state), opts)
                rows.append(JacobiBoundsRow(x0, float(th), tag,
                                            rec.sup_J_bar, rec.sup_DJ_bar_x))
    sups_J = {}
    sups_DJ = {}
    for r in rows:
        sups_J[r.x0] = max(sups_J.get(r.x0, 0.0), r.sup_J_bar)
        sups_DJ[r.x0] = max(sups_DJ.get(r.x0, 0.0), r.sup_DJ_bar_x)
    xs = sorted(sups_J)  # ascending x0; decades descend toward the boundary

    def worst_ratio(d):
        # growth toward the boundary: sup at the smaller x0 over the larger
        vals = [d[x] for x in xs]
        ratios = [small / big if big > 0 else 1.0
                  for small, big in zip(vals[:-1], vals[1:])]
        return max(ratios) if ratios else 1.0

    return JacobiBoundsReport(rows, worst_ratio(sups_J), worst_ratio(sups_DJ))


@dataclass
class GradReport:
    vertical: float
    horizontal: float
    tau: float


def _lambda_gradient(model: MetricModel, f: OneForm, base: np.ndarray) -> np.ndarray:
    """Coordinate gradient of lambda f at a state vector: shape (2n,)."""
    m = model.m
    x, y, xi, eta = base[0], base[1:1 + m], base[1 + m], base[2 + m:]
    xa = np.asarray(x)
    hd = model.h_eval(xa, y)
    A, A_x, A_y, *_ = inverse_with_derivatives(hd)
    fi = np.asarray(f.fi(xa, y))
    out = np.empty(2 + 2 * m)
    out[0] = (float(f.df0_dx(xa, y)) * xi + 2.0 * x * eta @ A @ fi
              + x**2 * eta @ (A_x @ fi + A @ np.asarray(f.dfi_dx(xa, y))))
    df0y = np.asarray(f.df0_dy(xa, y))
    dfiy = np.asarray(f.dfi_dy(xa, y))  # (..., i, k)
    for k in range(m):
        out[1 + k] = (df0y[k] * xi
                      + x**2 * eta @ (A_y[k] @ fi + A @ dfiy[:, k]))
    out[1 + m] = float(f.f0(xa, y))
    out[2 + m:] = x**2 * (A @ fi)
    return out


def lambda_at(model: MetricModel, f: OneForm, base: np.ndarray) -> float:
    m = model.m
    x, y, xi, eta = base[0], base[1:1 + m], base[1 + m], base[2 + m:2 + 2 * m]
    xa = np.asarray(x)
    A = np.linalg.inv(model.h_eval(xa, y).h)
    return float(np.asarray(f.f0(xa, y)) * xi
                 + x**2 * eta @ A @ np.asarray(f.fi(xa, y)))


def grad_uf_via_jacobi(model: MetricModel, f: OneForm, state: PhaseState,
                       opts: IntegratorOptions = IntegratorOptions()) -> GradReport:
    """First variations of u^f along the unit normal phase directions.

    Each value is the exact chain-rule quadrature int_0^tau d(lambda f)
    (dphi_t theta) dt plus the exit-time term lambda f(exit) * dtau; the
    exit time varies to first order even in directions normal to X, so
    the dtau term is required for agreement with difference quotients.
    """
    f.require_derivatives()

    def integrand(base, pert):
        return np.array([_lambda_gradient(model, f, base) @ pert])

    values = {}
    tau = None
    for tag, ctor in (("vertical", vertical_normal), ("horizontal", horizontal_normal)):
        rec = variational_trace(model, state, ctor(model, state), opts,
                                grad_integrand=integrand)
        if rec.status is not Status.EXITED:
            raise NoExit(f"gradient ray did not exit ({rec.status.value})")
        # exit-time correction: lambda f at the exit point times dtau
        values[tag] = (float(rec.extras[0])
                       + lambda_at(model, f, rec.exit_state) * rec.dtau)
        tau = rec.tau
    return GradReport(values["vertical"], values["horizontal"], tau)


@dataclass
class ExitGradientReport:
    along_quotient: float       # (tau(phi_t ic) - tau(ic)) / t
    vertical_slope: float
    horizontal_slope: float


def exit_time_gradient_check(model: MetricModel, state: PhaseState,
                             h_grid=(1e-2, 3e-3, 1e-3),
                             t_along: float = 1e-2,
                             opts: IntegratorOptions = IntegratorOptions()) -> ExitGradientReport:
    """Check the Sasaki gradient identity grad tau = -X numerically.

    Along the flow tau(phi_t) = tau - t exactly; normal to the flow the
    first variation vanishes, so straight-line chart perturbations give
    quadratically small differences (log-log slope about 2).
    """
    path = trace(model, state, opts)
    if path.status is not Status.EXITED:
        raise NoExit(f"base ray did not exit ({path.status.value})")
    tau0 = path.tau
    shifted = path.state_at(t_along)
    along = (exit_time(model, shifted, opts) - tau0) / t_along

    slopes = {}
    for tag, ctor in (("vertical", vertical_normal), ("horizontal", horizontal_normal)):
        d = ctor(model, state).to_vec()
        vals = []
        for h in h_grid:
            ic = PhaseState.from_vec(state.to_vec() + h * d)
            vals.append(abs(exit_time(model, ic, opts) - tau0))
        slopes[tag] = fit_loglog_slope(h_grid, vals)
    return ExitGradientReport(float(along), slopes["vertical"], slopes["horizontal"])
