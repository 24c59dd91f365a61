"""Verification suites: one per CLI subcommand, each gating named criteria.

Every suite samples its states from a counter-based Philox stream keyed by
(seed, suite index), writes CSV and gnuplot-ready artifacts, and returns a
SuiteResult with one pass/fail entry per criterion.  Identical config and
seed reproduce the artifact bytes exactly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .errors import SuiteFailure, Unsupported
from .flow import (PhaseState, conserved_h0, exit_time_asymptotic_fit,
                   fit_loglog_slope, short_geodesic_suite, trace,
                   verify_table1)
from .forms import (boundary_zero_potential, constant_dy_form, gauge_correct,
                    order_k_form, smooth_oneform)
from .jacobi import (exit_time_gradient_check, grad_uf_via_jacobi,
                     jacobi_bounds_report)
from .metric import (ChartPoint, MetricModel, euclidean_half_cylinder,
                     make_model, perturbed_half_cylinder, torus3d,
                     unit_fiber_point)
from .pestov import (build_grid, compact_test_field, fiber_identity_check,
                     pestov_residual)
from .transform import (boundary_probe, integral_function, transport_residual,
                        vanishing_rate_fit, xray)

SUITES = ("trace", "transform", "probe", "jacobi", "pestov")


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    measured: str
    threshold: str


@dataclass
class SuiteResult:
    suite: str
    criteria: list[CriterionResult]
    artifacts: list[str]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)


# ---------------------------------------------------------------------------
# artifact helpers


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_csv(path: str, header: list[str], rows: list[list]) -> str:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def write_plotdata(path: str, comment: str, columns: list[np.ndarray]) -> str:
    """Whitespace-separated columns for gnuplot's `plot "file" using 1:2`."""
    with open(path, "w") as fh:
        fh.write(f"# {comment}\n")
        for row in zip(*columns):
            fh.write(" ".join(_fmt(float(v)) for v in row) + "\n")
    return path


def _rng(seed: int, salt: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(np.uint64(seed) << np.uint64(8)) + np.uint64(salt)))


# ---------------------------------------------------------------------------
# state sampling


def random_unit_state(model: MetricModel, rng: np.random.Generator,
                      x_range=(0.05, 0.9)) -> PhaseState:
    """Uniform base point, isotropic covector rescaled to unit speed."""
    x0 = float(rng.uniform(*x_range)) * model.x_ceiling
    y = rng.uniform(0.0, 1.0, model.m) * np.asarray(model.y_periods)
    xi = float(rng.normal())
    eta = rng.normal(size=model.m)
    A = np.linalg.inv(model.h_eval(np.asarray(x0), y).h)
    H = 0.5 * xi**2 + 0.5 * x0**2 * float(eta @ A @ eta)
    scale = 1.0 / np.sqrt(2.0 * H)
    return PhaseState(x0, y, xi * scale, eta * scale)


def random_descending_state(model: MetricModel, rng: np.random.Generator,
                            x0: float) -> PhaseState:
    """Unit-speed state with an O(1) boundary momentum and xi < 0."""
    y = rng.uniform(0.0, 1.0, model.m) * np.asarray(model.y_periods)
    eta = rng.normal(size=model.m)
    A = np.linalg.inv(model.h_eval(np.asarray(x0), y).h)
    q = float(eta @ A @ eta)
    if x0**2 * q >= 1.0:
        eta = eta / np.sqrt(2.0 * x0**2 * q)
        q = float(eta @ A @ eta)
    xi = -np.sqrt(1.0 - x0**2 * q)
    return PhaseState(x0, y, float(xi), eta)


def random_boundary_state(model: MetricModel, rng: np.random.Generator,
                          eta_mag=(1.5, 4.0)) -> PhaseState:
    """Inward ray from x = 0; |eta| keeps the turning point below the ceiling."""
    y = rng.uniform(0.0, 1.0, model.m) * np.asarray(model.y_periods)
    eta = rng.uniform(*eta_mag, size=model.m) * rng.choice([-1.0, 1.0], model.m)
    return PhaseState(0.0, y, 1.0, eta)


def _interior_2d_state(model: MetricModel, rng: np.random.Generator,
                       x_range=(0.1, 0.5), th_range=(0.6, 1.4)) -> PhaseState:
    x0 = float(rng.uniform(*x_range))
    y = rng.uniform(0.0, 1.0, 1) * np.asarray(model.y_periods)
    th = float(rng.uniform(*th_range)) * np.pi
    z = ChartPoint.of(model, x0, y)
    xi, eta = unit_fiber_point(model, z, th)
    return PhaseState(x0, z.y, xi, eta)


def _configured_model(cfg: ExperimentConfig) -> MetricModel:
    """Model for the criteria that do not pin a specific builtin."""
    model = make_model(cfg.model.name, **cfg.model.params)
    if model.dim != 2:
        raise Unsupported("configured suites need a dim = 2 model; "
                          f"{cfg.model.name!r} has dim {model.dim}")
    return model


def _models_2d():
    return [("euclidean", euclidean_half_cylinder()),
            ("perturbed", perturbed_half_cylinder())]


def _models_all():
    return _models_2d() + [("torus3d", torus3d())]


# ---------------------------------------------------------------------------
# suites


def run_trace(cfg: ExperimentConfig, out: str) -> SuiteResult:
    """Criteria 1-5 and 15: conservation, exit times, collapse rates."""
    tc = cfg.trace
    opts = cfg.integrator
    criteria = []
    artifacts = []

    # --- criterion 1: Hamiltonian conservation on random rays
    rng = _rng(cfg.seed, 1)
    rows = []
    worst = 0.0
    for name, model in _models_all():
        for i in range(tc.n_energy_rays):
            path = trace(model, random_unit_state(model, rng), opts)
            rel = path.h_drift / 0.5
            worst = max(worst, rel)
            rows.append([name, i, rel, path.status.value])
    artifacts.append(write_csv(os.path.join(out, "trace_energy.csv"),
                               ["model", "ray", "rel_H_drift", "status"], rows))
    criteria.append(CriterionResult(
        1, "energy conservation", worst < 1e-9,
        f"max rel drift {worst:.3e} over {tc.n_energy_rays} rays/model", "< 1e-9"))

    # --- criterion 2: boundary momentum norm h0
    rng = _rng(cfg.seed, 2)
    rows = []
    worst = 0.0
    for name, model in _models_all():
        exact = name == "euclidean"
        for i in range(tc.n_h0_rays):
            ic = (random_unit_state(model, rng) if exact
                  else random_descending_state(model, rng, tc.h0_x0))
            path = trace(model, ic, opts)
            rel = path.h0_drift / max(abs(conserved_h0(model, ic)), 1.0)
            worst = max(worst, rel)
            rows.append([name, i, ic.x, rel])
    artifacts.append(write_csv(os.path.join(out, "trace_h0.csv"),
                               ["model", "ray", "x0", "rel_h0_drift"], rows))
    # informational: cubic decay of the drift toward the boundary
    model = perturbed_half_cylinder()
    decay_x0 = np.asarray(tc.h0_decay_x0, dtype=float)
    decay = []
    for x0 in decay_x0:
        local = 0.0
        for _ in range(3):
            path = trace(model, random_descending_state(model, rng, float(x0)), opts)
            local = max(local, path.h0_drift)
        decay.append(local)
    decay_slope = fit_loglog_slope(decay_x0, decay)
    artifacts.append(write_plotdata(
        os.path.join(out, "trace_h0_decay.dat"),
        f"x0  h0_drift (perturbed, descending; slope {decay_slope:.3f})",
        [decay_x0, np.asarray(decay)]))
    criteria.append(CriterionResult(
        2, "h0 constant of motion", worst < 1e-8,
        f"max rel drift {worst:.3e}; decay slope {decay_slope:.2f}", "< 1e-8"))

    # --- criterion 3: Euclidean exit time pi
    model = euclidean_half_cylinder()
    report = short_geodesic_suite(model, tc.short_y0, tc.short_eta0,
                                  tc.short_s_values, opts)
    tau_err = max(abs(r.tau - np.pi) for r in report.records)
    len_err = max(abs(r.length - r.s * np.pi) for r in report.records)
    rows = [[r.s, r.tau, r.length, r.sup_x, r.sup_dy, r.sup_deta,
             r.h_norm_min, r.h_norm_max] for r in report.records]
    artifacts.append(write_csv(
        os.path.join(out, "trace_short_euclidean.csv"),
        ["s", "tau", "length", "sup_x", "sup_dy", "sup_deta",
         "h_norm_min", "h_norm_max"], rows))
    criteria.append(CriterionResult(
        3, "Euclidean exit time pi", tau_err < 1e-6 and len_err < 1e-6,
        f"max|tau-pi| {tau_err:.3e}, max|l-s*pi| {len_err:.3e}", "< 1e-6"))

    # --- criterion 4: cubic exit-time asymptotics
    x0_grid = np.geomspace(tc.exit_x0_min, tc.exit_x0_max, tc.exit_n_points)
    slopes = {}
    for name, model in _models_2d():
        fit = exit_time_asymptotic_fit(model, tc.short_y0, tc.short_eta0,
                                       x0_grid, opts)
        slopes[name] = fit.slope
        artifacts.append(write_plotdata(
            os.path.join(out, f"trace_exit_asymptotic_{name}.dat"),
            f"x0  |tau - x0|  ({name}; slope {fit.slope:.3f})",
            [fit.x0_grid, fit.remainders]))
    ok4 = all(s >= 2.7 for s in slopes.values())
    criteria.append(CriterionResult(
        4, "exit-time cubic remainder", ok4,
        ", ".join(f"{k} slope {v:.2f}" for k, v in slopes.items()), ">= 2.7"))

    # --- criterion 5: short-geodesic collapse rates
    model = perturbed_half_cylinder()
    rep5 = short_geodesic_suite(model, tc.short_y0, tc.short_eta0,
                                tc.short_s_values, opts)
    pinned = [r for r in rep5.records if r.s <= 0.1]
    hn_lo = min(r.h_norm_min for r in pinned)
    hn_hi = max(r.h_norm_max for r in pinned)
    ok5 = (rep5.slope_sup_x >= 0.9 and rep5.slope_dy >= 1.9
           and rep5.slope_deta >= 1.9 and 0.5 <= hn_lo and hn_hi <= 1.5)
    rows = [[r.s, r.tau, r.sup_x, r.sup_dy, r.sup_deta,
             r.h_norm_min, r.h_norm_max] for r in rep5.records]
    artifacts.append(write_csv(
        os.path.join(out, "trace_short_perturbed.csv"),
        ["s", "tau", "sup_x", "sup_dy", "sup_deta",
         "h_norm_min", "h_norm_max"], rows))
    criteria.append(CriterionResult(
        5, "short-geodesic rates", ok5,
        f"slopes x {rep5.slope_sup_x:.2f}, dy {rep5.slope_dy:.2f}, "
        f"deta {rep5.slope_deta:.2f}; h-norm [{hn_lo:.3f}, {hn_hi:.3f}]",
        "x >= 0.9, dy/deta >= 1.9, h-norm in [0.5, 1.5]"))

    # --- criterion 15: flat-model evolution laws
    rng = _rng(cfg.seed, 15)
    model = euclidean_half_cylinder()
    worst_a = worst_b = 0.0
    rows = []
    for i in range(tc.n_table1_rays):
        x0 = float(rng.uniform(0.2, 0.8))
        y = rng.uniform(0.0, 1.0, 1)
        th = float(rng.uniform(0.15, 0.85)) * np.pi
        if rng.uniform() < 0.5:
            th = 2.0 * np.pi - th
        xi, eta = unit_fiber_point(model, ChartPoint.of(model, x0, y), th)
        rep = verify_table1(model, PhaseState(x0, y, xi, eta), opts)
        worst_a = max(worst_a, rep.max_residual_momentum)
        worst_b = max(worst_b, rep.max_relative_residual_accel)
        rows.append([i, x0, th, rep.max_residual_momentum,
                     rep.max_relative_residual_accel])
    artifacts.append(write_csv(
        os.path.join(out, "trace_table1.csv"),
        ["ray", "x0", "theta", "res_momentum", "rel_res_accel"], rows))
    criteria.append(CriterionResult(
        15, "flat evolution laws", worst_a < 1e-8 and worst_b < 1e-6,
        f"momentum {worst_a:.3e}, accel rel {worst_b:.3e}",
        "< 1e-8 and < 1e-6"))

    return SuiteResult("trace", criteria, artifacts)


def run_transform(cfg: ExperimentConfig, out: str) -> SuiteResult:
    """Criteria 6-8: gauge exactness, transport residual, vanishing rates."""
    tc = cfg.transform
    opts = cfg.integrator
    criteria = []
    artifacts = []

    # --- criterion 6: I(dp) = 0 and gauge invariance
    rng = _rng(cfg.seed, 6)
    rows = []
    worst_dp = 0.0
    for name, model in _models_2d():
        dp = boundary_zero_potential(model).differential()
        for i in range(tc.n_exact_rays // 2):
            rec = xray(model, dp, random_boundary_state(model, rng), opts)
            worst_dp = max(worst_dp, abs(rec.value))
            rows.append([name, i, abs(rec.value), rec.tau])
    artifacts.append(write_csv(os.path.join(out, "transform_exact.csv"),
                               ["model", "ray", "abs_I_dp", "tau"], rows))
    model = _configured_model(cfg)
    f = smooth_oneform(model)
    _, corrected = gauge_correct(model, f)
    worst_gauge = 0.0
    rows = []
    for i in range(tc.n_gauge_rays):
        ic = random_boundary_state(model, rng)
        diff = abs(xray(model, f, ic, opts).value
                   - xray(model, corrected, ic, opts).value)
        worst_gauge = max(worst_gauge, diff)
        rows.append([i, diff])
    artifacts.append(write_csv(os.path.join(out, "transform_gauge.csv"),
                               ["ray", "abs_If_minus_Icorrected"], rows))
    criteria.append(CriterionResult(
        6, "gauge exactness", worst_dp < 1e-8 and worst_gauge < 1e-8,
        f"max|I(dp)| {worst_dp:.3e}, max gauge diff {worst_gauge:.3e}", "< 1e-8"))

    # --- criterion 7: transport equation residual
    rng = _rng(cfg.seed, 7)
    model = _configured_model(cfg)
    f = order_k_form(model, 1)
    worst = 0.0
    rows = []
    for i in range(tc.n_transport_states):
        state = _interior_2d_state(model, rng, x_range=(0.05, 0.8),
                                   th_range=(0.0, 2.0))
        res = transport_residual(model, f, state, tc.transport_delta, opts)
        worst = max(worst, res)
        rows.append([i, state.x, res])
    artifacts.append(write_csv(os.path.join(out, "transform_transport.csv"),
                               ["state", "x0", "residual"], rows))
    criteria.append(CriterionResult(
        7, "transport equation", worst < 1e-6,
        f"max |Xu + lambda f| {worst:.3e}", "< 1e-6"))

    # --- criterion 8: vanishing-rate exponents
    model = _configured_model(cfg)
    exps = {}
    for k in tc.rate_orders:
        fit = vanishing_rate_fit(model, order_k_form(model, int(k)),
                                 tc.rate_x0, tc.rate_y0, opts=opts)
        exps[int(k)] = fit.exponent
        artifacts.append(write_plotdata(
            os.path.join(out, f"transform_rate_k{int(k)}.dat"),
            f"x0  sup|u^f|  (order {int(k)}; exponent {fit.exponent:.3f})",
            [fit.x0_grid, fit.sup_u]))
    ok8 = all(exps[k] >= k + 0.9 for k in exps)
    criteria.append(CriterionResult(
        8, "vanishing-rate exponents", ok8,
        ", ".join(f"k={k}: {v:.2f}" for k, v in exps.items()), ">= k + 0.9"))

    return SuiteResult("transform", criteria, artifacts)


def run_probe(cfg: ExperimentConfig, out: str) -> SuiteResult:
    """Criterion 14: boundary trace recovery from short rays."""
    pc = cfg.probe
    opts = cfg.integrator
    criteria = []
    artifacts = []

    model = euclidean_half_cylinder()
    c = pc.dy_coefficient
    rep = boundary_probe(model, constant_dy_form(model, c), pc.y0, pc.eta0,
                         pc.s_values, true_value=c * pc.eta0, opts=opts)
    rel_err = abs(rep.estimates[0] - c * pc.eta0) / abs(c * pc.eta0)
    artifacts.append(write_plotdata(
        os.path.join(out, "probe_estimates.dat"),
        f"s  estimate  (target {c * pc.eta0}; slope {rep.error_slope:.3f})",
        [rep.s_grid, rep.estimates]))
    rows = [[s, e, w] for s, e, w in zip(rep.s_grid, rep.estimates, rep.weights)]
    ok_exact = rel_err < 1e-3 and rep.error_slope >= 0.9

    order_slopes = {}
    for k in pc.orders:
        repk = boundary_probe(model, order_k_form(model, int(k)), pc.y0,
                              pc.eta0, pc.s_values, true_value=0.0, opts=opts)
        order_slopes[int(k)] = repk.error_slope
        rows += [[s, e, w] for s, e, w in
                 zip(repk.s_grid, repk.estimates, repk.weights)]
    artifacts.append(write_csv(os.path.join(out, "probe.csv"),
                               ["s", "estimate", "weight"], rows))
    ok_orders = all(v >= 0.9 for v in order_slopes.values())
    criteria.append(CriterionResult(
        14, "boundary probe", ok_exact and ok_orders,
        f"rel err {rel_err:.3e} at s={rep.s_grid[0]:g}, slope "
        f"{rep.error_slope:.2f}; order slopes "
        + ", ".join(f"k={k}: {v:.2f}" for k, v in order_slopes.items()),
        "rel err < 1e-3, slopes >= 0.9"))

    return SuiteResult("probe", criteria, artifacts)


def run_jacobi(cfg: ExperimentConfig, out: str) -> SuiteResult:
    """Criteria 9-11: gradient formulas, Jacobi bounds, exit-time gradient."""
    jc = cfg.jacobi
    opts = cfg.integrator
    criteria = []
    artifacts = []

    # --- criterion 9: first variations of u^f vs finite differences
    rng = _rng(cfg.seed, 9)
    model = _configured_model(cfg)
    f = smooth_oneform(model)
    from .jacobi import horizontal_normal, vertical_normal
    h = jc.grad_fd_step
    worst = 0.0
    rows = []
    for i in range(jc.n_grad_states):
        state = _interior_2d_state(model, rng)
        rep = grad_uf_via_jacobi(model, f, state, opts)
        for tag, ctor, value in (("vertical", vertical_normal, rep.vertical),
                                 ("horizontal", horizontal_normal, rep.horizontal)):
            d = ctor(model, state).to_vec()
            up = integral_function(model, f, PhaseState.from_vec(state.to_vec() + h * d), opts)
            um = integral_function(model, f, PhaseState.from_vec(state.to_vec() - h * d), opts)
            fd = (up - um) / (2.0 * h)
            rel = abs(value - fd) / max(abs(fd), 1e-12)
            worst = max(worst, rel)
            rows.append([i, tag, value, fd, rel])
    artifacts.append(write_csv(os.path.join(out, "jacobi_grad.csv"),
                               ["state", "direction", "variational", "fd",
                                "rel_err"], rows))
    criteria.append(CriterionResult(
        9, "gradient formulas", worst < 1e-4,
        f"max rel err {worst:.3e} over {jc.n_grad_states} states", "< 1e-4"))

    # --- criterion 10: comparison-norm Jacobi bounds
    model = _configured_model(cfg)
    rep10 = jacobi_bounds_report(model, jc.bounds_x0, jc.bounds_thetas,
                                 jc.bounds_y0, opts)
    rows = [[r.x0, r.theta, r.direction, r.sup_J_bar, r.sup_DJ_bar_x]
            for r in rep10.rows]
    artifacts.append(write_csv(os.path.join(out, "jacobi_bounds.csv"),
                               ["x0", "theta", "direction", "sup_J_bar",
                                "sup_x_DJ_bar"], rows))
    ok10 = (rep10.growth_J_per_decade < 1.2 and rep10.growth_DJ_per_decade < 1.2)
    criteria.append(CriterionResult(
        10, "Jacobi bounds", ok10,
        f"growth/decade J {rep10.growth_J_per_decade:.3f}, "
        f"x*DJ {rep10.growth_DJ_per_decade:.3f}", "< 1.2"))

    # --- criterion 11: exit-time gradient identity
    rng = _rng(cfg.seed, 11)
    rows = []
    worst_along = 0.0
    min_slope = np.inf
    for name, model in _models_2d():
        for i in range(jc.n_exit_states):
            state = _interior_2d_state(model, rng, x_range=(0.15, 0.5),
                                       th_range=(0.62, 1.38))
            rep = exit_time_gradient_check(model, state, opts=opts)
            worst_along = max(worst_along, abs(rep.along_quotient + 1.0))
            min_slope = min(min_slope, rep.vertical_slope, rep.horizontal_slope)
            rows.append([name, i, rep.along_quotient, rep.vertical_slope,
                         rep.horizontal_slope])
    artifacts.append(write_csv(os.path.join(out, "jacobi_exit_gradient.csv"),
                               ["model", "state", "along_quotient",
                                "vertical_slope", "horizontal_slope"], rows))
    criteria.append(CriterionResult(
        11, "exit-time gradient", worst_along < 1e-8 and min_slope >= 1.9,
        f"|along+1| {worst_along:.3e}; min perp slope {min_slope:.2f}",
        "|along+1| < 1e-8, perp slope >= 1.9"))

    return SuiteResult("jacobi", criteria, artifacts)


def run_pestov(cfg: ExperimentConfig, out: str) -> SuiteResult:
    """Criteria 12-13: truncated energy identity and fiber identity."""
    pc = cfg.pestov
    criteria = []
    artifacts = []
    model = euclidean_half_cylinder()

    reports = {}
    for n in (pc.coarse_resolution, pc.base_resolution):
        grid = build_grid(model, pc.eps, pc.x_top, n, n, n)
        reports[n] = pestov_residual(model, grid, compact_test_field(grid))
    rows = [[n, r.relative_residual, r.norm_VXu2, r.norm_XVu2,
             r.curvature_term, r.norm_Xu2, r.boundary_term]
            for n, r in reports.items()]
    artifacts.append(write_csv(
        os.path.join(out, "pestov_identity.csv"),
        ["resolution", "rel_residual", "norm_VXu2", "norm_XVu2",
         "curvature_term", "norm_Xu2", "boundary_term"], rows))
    hs = [1.0 / n for n in reports]
    artifacts.append(write_plotdata(
        os.path.join(out, "pestov_refinement.dat"), "h  rel_residual",
        [np.asarray(hs), np.asarray([r.relative_residual
                                     for r in reports.values()])]))
    base = reports[pc.base_resolution]
    coarse = reports[pc.coarse_resolution]
    ratio = coarse.relative_residual / max(base.relative_residual, 1e-300)
    inequality = all(r.norm_VXu2 >= r.norm_XVu2 + r.norm_Xu2
                     for r in reports.values())
    ok12 = base.relative_residual < 1e-2 and ratio >= 3.0 and inequality
    criteria.append(CriterionResult(
        12, "Pestov identity", ok12,
        f"rel residual {base.relative_residual:.3e} at {pc.base_resolution}^3, "
        f"refinement ratio {ratio:.1f}, inequality "
        f"{'holds' if inequality else 'violated'}",
        "< 1e-2, ratio >= 3, inequality holds"))

    grid = build_grid(model, pc.eps, pc.x_top, pc.coarse_resolution,
                      pc.coarse_resolution, pc.coarse_resolution)
    errs = fiber_identity_check(model, grid, smooth_oneform(model))
    rows = [[grid.x_nodes[i], grid.y_nodes[j], errs[i, j]]
            for i in range(0, grid.nx, max(1, grid.nx // 8))
            for j in range(0, grid.ny, max(1, grid.ny // 8))]
    artifacts.append(write_csv(os.path.join(out, "pestov_fiber.csv"),
                               ["x", "y", "rel_err"], rows))
    worst = float(errs.max())
    criteria.append(CriterionResult(
        13, "fiber identity", worst < 1e-12,
        f"max rel err {worst:.3e}", "< 1e-12"))

    return SuiteResult("pestov", criteria, artifacts)


_RUNNERS = {
    "trace": run_trace,
    "transform": run_transform,
    "probe": run_probe,
    "jacobi": run_jacobi,
    "pestov": run_pestov,
}


def write_summary(out: str, results: list[SuiteResult]) -> str:
    rows = []
    for res in results:
        for c in sorted(res.criteria, key=lambda c: c.cid):
            rows.append([c.cid, res.suite, c.name,
                         "PASS" if c.passed else "FAIL", c.measured,
                         c.threshold])
    rows.sort(key=lambda r: r[0])
    return write_csv(os.path.join(out, "summary.csv"),
                     ["criterion", "suite", "name", "status", "measured",
                      "threshold"], rows)


def run(subcommand: str, cfg: ExperimentConfig, out: str | None = None,
        parallel: bool = False) -> list[SuiteResult]:
    """Execute a suite (or all of them), write artifacts, gate criteria.

    Raises SuiteFailure after writing artifacts when any criterion fails.
    """
    out = out or cfg.out
    os.makedirs(out, exist_ok=True)
    if subcommand == "verify-all":
        names = list(SUITES)
    elif subcommand in _RUNNERS:
        names = [subcommand]
    else:
        raise ValueError(f"unknown subcommand {subcommand!r}")

    if parallel and len(names) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=len(names)) as pool:
            futures = [pool.submit(_RUNNERS[n], cfg, out) for n in names]
            results = [f.result() for f in futures]
    else:
        results = [_RUNNERS[n](cfg, out) for n in names]

    write_summary(out, results)
    failed = [c for res in results for c in res.criteria if not c.passed]
    if failed:
        detail = "; ".join(f"criterion {c.cid} ({c.name}): {c.measured} "
                           f"[need {c.threshold}]" for c in failed)
        raise SuiteFailure(detail, results=results)
    return results
