"""Hamiltonian geodesic flow on the cotangent bundle with exit detection.

State vectors are laid out as [x, y_1..y_m, xi, eta_1..eta_m] (length 2n).
All four Hamilton equations are polynomial in x, so the flow is regular up
to x = 0; exit through the boundary is located on dense output.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NoExit, ToleranceFailure
from .metric import MetricModel, inverse_with_derivatives

_STATIONARY_H = 1e-18


@dataclass(frozen=True)
class PhaseState:
    """A cotangent-bundle point (x, y, xi, eta)."""

    x: float
    y: np.ndarray
    xi: float
    eta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", np.atleast_1d(np.asarray(self.y, dtype=float)))
        object.__setattr__(self, "eta", np.atleast_1d(np.asarray(self.eta, dtype=float)))

    def to_vec(self) -> np.ndarray:
        return np.concatenate(([self.x], self.y, [self.xi], self.eta))

    @staticmethod
    def from_vec(w: np.ndarray) -> "PhaseState":
        m = (len(w) - 2) // 2
        return PhaseState(float(w[0]), w[1:1 + m], float(w[1 + m]), w[2 + m:2 + 2 * m])

    def reversed(self) -> "PhaseState":
        return replace(self, xi=-self.xi, eta=-self.eta)


@dataclass(frozen=True)
class IntegratorOptions:
    rel_tol: float = 1e-11
    abs_tol: float = 1e-13
    max_step: float = np.inf
    t_max: float = 1e3
    exit_root_tol: float = 1e-12

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "t_max", "exit_root_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.exit_root_tol >= self.abs_tol * 1e3:
            raise ValueError("exit_root_tol must be below abs_tol * 1e3")


class Status(enum.Enum):
    EXITED = "EXITED"
    ESCAPED = "ESCAPED"
    MAX_TIME = "MAX_TIME"
    STATIONARY = "STATIONARY"


@dataclass
class GeodesicPath:
    """Dense trajectory with exit time and conservation diagnostics."""

    status: Status
    tau: float | None
    ts: np.ndarray
    states: np.ndarray  # (T, 2n)
    h_drift: float
    h0_drift: float
    extras: np.ndarray = field(default_factory=lambda: np.zeros(0))
    _sol: object = None
    _model: MetricModel | None = None

    @property
    def t_end(self) -> float:
        return float(self.ts[-1]) if len(self.ts) else 0.0

    def state_at(self, t: float) -> PhaseState:
        w = self._sol(t)
        return PhaseState.from_vec(w[: 2 * self._model.dim])

    def vec_at(self, t) -> np.ndarray:
        return np.asarray(self._sol(t))


# ---------------------------------------------------------------------------
# vector field


def _split(model: MetricModel, w: np.ndarray):
    m = model.m
    return w[..., 0], w[..., 1:1 + m], w[..., 1 + m], w[..., 2 + m:2 + 2 * m]


def hamiltonian(model: MetricModel, state: PhaseState) -> float:
    """H = 1/2 xi^2 + 1/2 x^2 h^{ij} eta_i eta_j (regular at x = 0)."""
    return float(hamiltonian_vec(model, state.to_vec()))


def hamiltonian_vec(model: MetricModel, w: np.ndarray) -> np.ndarray:
    x, y, xi, eta = _split(model, w)
    A = np.linalg.inv(model.h_eval(x, y).h)
    q = np.einsum("...i,...ij,...j->...", eta, A, eta)
    return 0.5 * xi**2 + 0.5 * x**2 * q


def conserved_h0(model: MetricModel, state: PhaseState) -> float:
    """h^{ij}(0, y) eta_i eta_j, the boundary norm of the y-momentum."""
    A0 = np.linalg.inv(model.h_eval(0.0 * state.x, state.y).h)
    return float(state.eta @ A0 @ state.eta)


def _conserved_h0_vec(model: MetricModel, w: np.ndarray) -> np.ndarray:
    x, y, xi, eta = _split(model, w)
    A0 = np.linalg.inv(model.h_eval(np.zeros_like(x), y).h)
    return np.einsum("...i,...ij,...j->...", eta, A0, eta)


def rhs_batch(model: MetricModel, w: np.ndarray) -> np.ndarray:
    """Hamilton's equations, broadcasting over leading axes of w."""
    x, y, xi, eta = _split(model, w)
    hd = model.h_eval(x, y)
    A, A_x, A_y, *_ = inverse_with_derivatives(hd)
    Aeta = np.einsum("...ij,...j->...i", A, eta)
    q = np.einsum("...i,...i->...", eta, Aeta)
    q_x = np.einsum("...i,...ij,...j->...", eta, A_x, eta)
    q_y = np.einsum("...i,...kij,...j->...k", eta, A_y, eta)
    x2 = x * x
    out = np.empty_like(w)
    out[..., 0] = xi
    out[..., 1:1 + model.m] = x2[..., None] * Aeta
    out[..., 1 + model.m] = -x * q - 0.5 * x2 * q_x
    out[..., 2 + model.m:] = -0.5 * x2[..., None] * q_y
    return out


def rhs(model: MetricModel, state: PhaseState) -> tuple[float, np.ndarray, float, np.ndarray]:
    """Phase velocity (x-dot, y-dot, xi-dot, eta-dot) at a single state."""
    out = rhs_batch(model, state.to_vec())
    m = model.m
    return float(out[0]), out[1:1 + m], float(out[1 + m]), out[2 + m:]


# ---------------------------------------------------------------------------
# tracing


def trace(model: MetricModel, ic: PhaseState, opts: IntegratorOptions = IntegratorOptions(),
          integrands: Sequence[Callable[[PhaseState], float]] = ()) -> GeodesicPath:
    """Integrate the flow from ic until boundary exit, escape, or t_max.

    Extra quadratures du_j/dt = integrands[j](phi_t) ride along in the
    same adaptive solve; their exit values land in GeodesicPath.extras.
    """
    n2 = 2 * model.dim
    h0_value = hamiltonian(model, ic)
    if h0_value < _STATIONARY_H:
        return GeodesicPath(Status.STATIONARY, 0.0, np.zeros(0), np.zeros((0, n2)),
                            0.0, 0.0, np.zeros(len(integrands)), None, model)

    nq = len(integrands)

    def fun(t, w):
        dw = np.empty(n2 + nq)
        dw[:n2] = rhs_batch(model, w[:n2])
        if nq:
            st = PhaseState.from_vec(w[:n2])
            for j, g in enumerate(integrands):
                dw[n2 + j] = g(st)
        return dw

    def exit_event(t, w):
        return w[0] - opts.exit_root_tol

    exit_event.terminal = True
    exit_event.direction = -1

    def escape_event(t, w):
        return w[0] - model.x_ceiling

    escape_event.terminal = True
    escape_event.direction = 1

    w0 = np.concatenate([ic.to_vec(), np.zeros(nq)])
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

    ts = np.unique(np.concatenate([res.t[res.t <= t_end], np.linspace(0.0, t_end, 257)]))
    W = res.sol(ts).T
    H = hamiltonian_vec(model, W[:, :n2])
    h_drift = float(np.max(np.abs(H - h0_value)) / h0_value)
    h0_series = _conserved_h0_vec(model, W[:, :n2])
    h0_ref = h0_series[0]
    denom = max(abs(h0_ref), 1.0)
    h0_drift = float(np.max(np.abs(h0_series - h0_ref)) / denom)
    extras = res.sol(t_end)[n2:] if nq else np.zeros(0)
    tau = t_end if status is Status.EXITED else None
    return GeodesicPath(status, tau, ts, W, h_drift, h0_drift, extras, res.sol, model)


def exit_time(model: MetricModel, ic: PhaseState,
              opts: IntegratorOptions = IntegratorOptions()) -> float:
    """Exit time tau of the ray from ic; raises NoExit if it never exits."""
    path = trace(model, ic, opts)
    if path.status is Status.STATIONARY:
        return 0.0
    if path.status is not Status.EXITED:
        raise NoExit(f"ray terminated with status {path.status.value}")
    return path.tau


def flow_point(model: MetricModel, state: PhaseState, t: float,
               opts: IntegratorOptions = IntegratorOptions()) -> PhaseState:
    """phi_t(state) for small |t| of either sign (no event handling)."""
    n2 = 2 * model.dim
    sign = 1.0 if t >= 0 else -1.0

    def fun(s, w):
        return sign * rhs_batch(model, w)

    res = solve_ivp(fun, (0.0, abs(t)), state.to_vec(), method="DOP853",
                    rtol=opts.rel_tol, atol=opts.abs_tol)
    if res.status != 0:
        raise ToleranceFailure(res.message)
    return PhaseState.from_vec(res.y[:n2, -1])


# ---------------------------------------------------------------------------
# verification suites


def fit_loglog_slope(xs, vs, floor: float = 1e-300) -> float:
    """Least-squares slope of log(v) against log(x); inf if v is all ~0."""
    xs = np.asarray(xs, dtype=float)
    vs = np.abs(np.asarray(vs, dtype=float))
    if np.all(vs <= floor):
        return np.inf
    vs = np.maximum(vs, floor)
    return float(np.polyfit(np.log(xs), np.log(vs), 1)[0])


@dataclass
class ShortGeodesicRecord:
    s: float
    tau: float
    length: float
    sup_x: float
    sup_xi: float
    sup_dy: float
    sup_deta: float
    h_norm_min: float
    h_norm_max: float


@dataclass
class ShortGeodesicReport:
    records: list[ShortGeodesicRecord]
    slope_sup_x: float
    slope_dy: float
    slope_deta: float


def short_geodesic_suite(model: MetricModel, y0, eta0, s_grid,
                         opts: IntegratorOptions = IntegratorOptions()) -> ShortGeodesicReport:
    """Trace the family (0, y0, s, eta0) and fit the collapse rates in s."""
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    eta0 = np.atleast_1d(np.asarray(eta0, dtype=float))
    records = []
    for s in s_grid:
        ic = PhaseState(0.0, y0, float(s), eta0)
        path = trace(model, ic, opts)
        if path.status is not Status.EXITED:
            raise NoExit(f"short geodesic s={s} did not exit ({path.status.value})")
        W = path.states
        m = model.m
        x, y, xi, eta = W[:, 0], W[:, 1:1 + m], W[:, 1 + m], W[:, 2 + m:]
        hnorm = np.einsum("ti,tij,tj->t", eta,
                          np.linalg.inv(model.h_eval(x, y).h), eta)
        records.append(ShortGeodesicRecord(
            s=float(s), tau=path.tau, length=float(s) * path.tau,
            sup_x=float(np.max(np.abs(x))),
            sup_xi=float(np.max(np.abs(xi))),
            sup_dy=float(np.max(np.abs(y - y0))),
            sup_deta=float(np.max(np.abs(eta - eta0))),
            h_norm_min=float(np.min(hnorm)), h_norm_max=float(np.max(hnorm)),
        ))
    ss = [r.s for r in records]
    return ShortGeodesicReport(
        records,
        slope_sup_x=fit_loglog_slope(ss, [r.sup_x for r in records]),
        slope_dy=fit_loglog_slope(ss, [r.sup_dy for r in records]),
        slope_deta=fit_loglog_slope(ss, [r.sup_deta for r in records]),
    )


@dataclass
class ExitAsymptoticReport:
    x0_grid: np.ndarray
    remainders: np.ndarray  # |tau - x0| per x0
    slope: float


def exit_time_asymptotic_fit(model: MetricModel, y0, eta0, x0_grid,
                             opts: IntegratorOptions = IntegratorOptions()) -> ExitAsymptoticReport:
    """Fit the cubic remainder tau(x0) - x0 for a fixed boundary covector.

    The family holds (y, eta) fixed and closes each state to unit speed
    with the descending normal component xi0 = -sqrt(1 - x0^2 h^{ij}
    eta_i eta_j), so the remainder scales like x0^3.
    """
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    eta0 = np.atleast_1d(np.asarray(eta0, dtype=float))
    x0_grid = np.asarray(x0_grid, dtype=float)
    rem = np.empty_like(x0_grid)
    for i, x0 in enumerate(x0_grid):
        A = np.linalg.inv(model.h_eval(np.asarray(x0), y0).h)
        q = float(eta0 @ A @ eta0)
        if x0**2 * q >= 1.0:
            raise ValueError(f"x0={x0} too large for unit speed with this eta")
        xi0 = -np.sqrt(1.0 - x0**2 * q)
        rem[i] = abs(exit_time(model, PhaseState(float(x0), y0, float(xi0), eta0), opts) - x0)
    return ExitAsymptoticReport(x0_grid, rem, fit_loglog_slope(x0_grid, rem))


@dataclass
class Table1Report:
    max_residual_momentum: float        # |xi-dot + x eta^2| along the ray
    max_relative_residual_accel: float  # |x-ddot + y-dot^2/x^3| / |y-dot^2/x^3|


def verify_table1(model: MetricModel, ic: PhaseState,
                  opts: IntegratorOptions = IntegratorOptions(),
                  dt_fd: float = 1e-3, interior: tuple[float, float] = (0.1, 0.9)) -> Table1Report:
    """Check the evolution laws of the flat model along a traced ray.

    (a) xi-dot = -x eta^2 (the non-singular cotangent law) and
    (b) x-ddot = -y-dot^2 / x^3 (the tangent-bundle law, singular at
    x = 0; sign fixed by the Euler-Lagrange equation of dx^2 + dy^2/x^2
    and by the closed-form rays x = s sin t).  Time derivatives come
    from central differences of the dense output.
    """
    path = trace(model, ic, opts)
    t_end = path.t_end
    ts = np.linspace(t_end * interior[0], t_end * interior[1], 101)
    m = model.m

    def comp(ts_):
        W = path.vec_at(ts_)
        return W[0], W[1 + m], W[2 + m]

    x0_, xi0_, eta0_ = comp(ts)
    x_p, xi_p, _ = comp(ts + dt_fd)
    x_m, xi_m, _ = comp(ts - dt_fd)
    x_pp, xi_pp, _ = comp(ts + 2.0 * dt_fd)
    x_mm, xi_mm, _ = comp(ts - 2.0 * dt_fd)
    # fourth-order stencils on the dense output
    xi_dot = (-xi_pp + 8.0 * xi_p - 8.0 * xi_m + xi_mm) / (12.0 * dt_fd)
    res_a = np.abs(xi_dot + x0_ * eta0_**2)
    x_ddot = (-x_pp + 16.0 * x_p - 30.0 * x0_ + 16.0 * x_m - x_mm) \
        / (12.0 * dt_fd**2)
    # with h == 1, y-dot = x^2 eta
    y_dot = x0_**2 * eta0_
    accel_target = y_dot**2 / x0_**3
    res_b = np.abs(x_ddot + accel_target)
    denom = np.maximum(np.abs(accel_target), 1e-300)
    return Table1Report(float(np.max(res_a)), float(np.max(res_b / denom)))
