"""Numeric side: Hamiltonian flows by fixed-step classical RK4, leaf traces
by composed flows, Moser-path verification, and spray-based symplectic
realization by quadrature.

All symbolic data is converted to 64-bit floats on entry.  The integrator is
deliberately fixed-step RK4 (no adaptivity) so traces are reproducible;
variational (Jacobian) equations are integrated alongside the base flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import poisson
from .expr import Chart, ExprError, RatFunc, chart as make_chart
from .multivec import DiffForm, MultiVec, exterior_derivative
from .poisson import PoissonStructure, bivector_matrix, hamiltonian_vf


class FlowError(ExprError):
    pass


class PoleProximityError(FlowError):
    pass


@dataclass
class FlowConfig:
    dt: float = 1e-3
    t_max: float = 10.0
    tol: float = 1e-6
    pole_threshold: float = 1e-9
    escape_radius: float = 1e9
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.dt <= 0 or self.t_max <= 0 or self.dt > self.t_max:
            raise FlowError("need 0 < dt <= t_max")
        if self.tol <= 0:
            raise FlowError("tolerance must be positive")


# -- compiling exact expressions to float callables -----------------------------


def _poly_source(poly, var: str) -> str:
    if poly.is_zero:
        return "0.0"
    parts = []
    for e, c in poly.terms.items():
        factors = [repr(float(c))]
        for i, k in enumerate(e):
            if k == 1:
                factors.append(f"{var}[{i}]")
            elif k > 1:
                factors.append(f"{var}[{i}]**{k}")
        parts.append("*".join(factors))
    return " + ".join(parts)


def compile_ratfunc(rf: RatFunc):
    """Compile a RatFunc to a float-valued callable of a coordinate array."""
    num_src = _poly_source(rf.num, "p")
    if rf.den.is_constant:
        src = f"lambda p: ({num_src})"
    else:
        den_src = _poly_source(rf.den, "p")
        src = f"lambda p: ({num_src}) / ({den_src})"
    return eval(src)  # generated from trusted numeric terms only


def compile_vector(components):
    fns = [compile_ratfunc(c) for c in components]
    def vector(p):
        return np.array([f(p) for f in fns])
    return vector


def compile_matrix(entries):
    fns = [[compile_ratfunc(c) for c in row] for row in entries]
    def matrix(p):
        return np.array([[f(p) for f in row] for row in fns])
    return matrix


def _denominator_guards(components):
    guards = []
    for c in components:
        if not c.den.is_constant:
            guards.append(compile_ratfunc(RatFunc.from_poly(c.den)))
    return guards


# -- RK4 -------------------------------------------------------------------------


def rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + h / 2, y + (h / 2) * k1)
    k3 = f(t + h / 2, y + (h / 2) * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


# -- Hamiltonian trajectories ------------------------------------------------------


@dataclass
class Trajectory:
    ts: np.ndarray
    xs: np.ndarray
    h_drift: float
    casimir_drifts: list

    def render_lines(self) -> list[str]:
        """Line-oriented records 't x_1 ... x_n drift...' with 17 digits."""
        out = []
        for t, x in zip(self.ts, self.xs):
            cells = [f"{t:.17g}"] + [f"{v:.17g}" for v in x]
            out.append(" ".join(cells))
        return out


def _integrate_autonomous(field, guards, x0, steps, h, cfg: FlowConfig):
    xs = [np.asarray(x0, dtype=float)]
    x = xs[0]
    for _ in range(steps):
        for g in guards:
            if abs(g(x)) < cfg.pole_threshold:
                raise PoleProximityError(f"denominator below threshold near {x}")
        x = rk4_step(lambda t, y: field(y), 0.0, x, h)
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > cfg.escape_radius:
            raise FlowError(f"trajectory escaped near {x}")
        xs.append(x)
    return xs


def integrate_hamiltonian(structure, hamiltonian: RatFunc, x0, cfg: FlowConfig,
                          casimirs=()) -> Trajectory:
    """RK4 trajectory of X_H with H- and Casimir-drift reporting."""
    xf = hamiltonian_vf(structure, hamiltonian)
    comps = xf.components()
    field_fn = compile_vector(comps)
    guards = _denominator_guards(comps)
    steps = int(round(cfg.t_max / cfg.dt))
    if steps > cfg.max_steps:
        raise FlowError(f"step count {steps} exceeds max_steps")
    xs = _integrate_autonomous(field_fn, guards, x0, steps, cfg.dt, cfg)
    ts = np.arange(len(xs)) * cfg.dt
    h_fn = compile_ratfunc(hamiltonian)
    h0 = h_fn(xs[0])
    h_drift = max(abs(h_fn(x) - h0) for x in xs)
    drifts = []
    for cas in casimirs:
        c_fn = compile_ratfunc(cas)
        c0 = c_fn(xs[0])
        drifts.append(max(abs(c_fn(x) - c0) for x in xs))
    return Trajectory(ts, np.array(xs), h_drift, drifts)


@dataclass
class LeafTrace:
    points: np.ndarray
    hamiltonians: list
    casimir_drifts: list


def leaf_trace(structure, generators, x0, schedule, cfg: FlowConfig,
               casimirs=()) -> LeafTrace:
    """Compose Hamiltonian flows of the generators per the schedule
    [(generator index, time), ...]; negative times flow backwards."""
    fields = []
    for g in generators:
        comps = hamiltonian_vf(structure, g).components()
        fields.append((compile_vector(comps), _denominator_guards(comps)))
    points = [np.asarray(x0, dtype=float)]
    for gen_index, t_total in schedule:
        field_fn, guards = fields[gen_index]
        t_abs = abs(float(t_total))
        if t_abs == 0.0:
            continue
        steps = max(1, int(round(t_abs / cfg.dt)))
        if steps > cfg.max_steps:
            raise FlowError("step count exceeds max_steps")
        h = (t_abs / steps) * (1.0 if t_total > 0 else -1.0)
        seg = _integrate_autonomous(field_fn, guards, points[-1], steps, h, cfg)
        points.extend(seg[1:])
    drifts = []
    for cas in casimirs:
        c_fn = compile_ratfunc(cas)
        c0 = c_fn(points[0])
        drifts.append(max(abs(c_fn(x) - c0) for x in points))
    return LeafTrace(np.array(points), list(generators), drifts)


# -- Moser-path verification --------------------------------------------------------


@dataclass
class MoserReport:
    max_deviation: float
    per_sample: list


def _lift_chart(chart: Chart, extra: str) -> Chart:
    name = extra
    while name in chart.var_names:
        name += "_"
    return make_chart(*(chart.var_names + (name,)))


def _lift_ratfunc(f: RatFunc, big: Chart) -> RatFunc:
    values = [RatFunc.var(big, i) for i in range(f.chart.dim)]
    return f.subst(values)


def moser_verify(structure: PoissonStructure, alpha: DiffForm, t_grid, samples,
                 cfg: FlowConfig) -> MoserReport:
    """Numerically verify (phi_t)_* pi_0 = pi_t for pi_t the gauge of pi_0 by
    B_t = -t d(alpha) and X_t = pi_t#(alpha).

    The time variable is adjoined to the chart so pi_t comes out of one exact
    gauge transformation; the flow and its variational equations are then
    integrated with RK4 and the pushforward J P_0 J^T is compared against the
    exact pi_t matrix at the endpoint, at every requested grid time.
    """
    chart = structure.chart
    n = chart.dim
    if alpha.degree != 1 or alpha.chart != chart:
        raise FlowError("alpha must be a 1-form on the structure's chart")
    big = _lift_chart(chart, "t")
    t_var = RatFunc.var(big, n)
    d_alpha = exterior_derivative(alpha)
    # B_t = -t d(alpha): closed on the x-chart for every fixed t (it is exact)
    b_coeffs = {
        idx: -t_var * _lift_ratfunc(c, big) for idx, c in d_alpha.coeffs.items()
    }
    b_t = DiffForm(big, 2, b_coeffs)
    pi_lift = MultiVec(
        big, 2, {idx: _lift_ratfunc(c, big) for idx, c in structure.pi.coeffs.items()}
    )
    p_t = poisson.gauge_matrix(
        bivector_matrix(pi_lift), poisson.form_matrix(b_t), big
    )
    if p_t is None:
        raise FlowError("Id + B_t_flat pi# singular along the requested family")
    # X_t = pi_t#(alpha)
    alpha_lift = [_lift_ratfunc(alpha.coeff((i,)), big) for i in range(n)]
    x_t = []
    for j in range(n):
        acc = RatFunc.zero(big)
        for i in range(n):
            acc = acc + alpha_lift[i] * p_t[i][j]
        x_t.append(acc)
    field_fns = [compile_ratfunc(c) for c in x_t]
    guards = _denominator_guards(x_t)
    jac_entries = [[c.diff(k) for k in range(n)] for c in x_t]
    jac_fns = [[compile_ratfunc(e) for e in row] for row in jac_entries]
    p_t_fns = [[compile_ratfunc(p_t[i][j]) for j in range(n)] for i in range(n)]

    grid = sorted(float(t) for t in t_grid)
    if any(t < 0 for t in grid):
        raise FlowError("t_grid times must be nonnegative")
    # invertibility at the samples across the grid (precondition check)
    for s in samples:
        for t in grid:
            z = np.array(list(map(float, s)) + [t])
            for g in guards:
                if abs(g(z)) < cfg.pole_threshold:
                    raise FlowError(f"gauge family degenerate at sample {s}, t={t}")

    def odefun(t, state):
        x = state[:n]
        j = state[n:].reshape(n, n)
        z = np.concatenate([x, [t]])
        dx = np.array([f(z) for f in field_fns])
        a = np.array([[f(z) for f in row] for row in jac_fns])
        return np.concatenate([dx, (a @ j).ravel()])

    p0_fn = compile_matrix(bivector_matrix(structure.pi))
    per_sample = []
    overall = 0.0
    for s in samples:
        x0 = np.asarray(list(map(float, s)), dtype=float)
        state = np.concatenate([x0, np.eye(n).ravel()])
        t = 0.0
        p0 = p0_fn(x0)
        devs = []
        for t_target in grid:
            gap = t_target - t
            if gap > 0:
                steps = max(1, int(round(gap / cfg.dt)))
                h = gap / steps
                for _ in range(steps):
                    z = np.concatenate([state[:n], [t]])
                    for g in guards:
                        if abs(g(z)) < cfg.pole_threshold:
                            raise PoleProximityError("flow hit a gauge pole")
                    state = rk4_step(odefun, t, state, h)
                    t += h
            x = state[:n]
            j = state[n:].reshape(n, n)
            pushed = j @ p0 @ j.T
            z = np.concatenate([x, [t]])
            exact = np.array([[f(z) for f in row] for row in p_t_fns])
            devs.append(float(np.max(np.abs(pushed - exact))))
        per_sample.append(devs)
        overall = max(overall, max(devs))
    return MoserReport(overall, per_sample)


# -- spray realization ----------------------------------------------------------------


@dataclass
class RealizationSample:
    point: np.ndarray            # (x, xi) in the cotangent chart
    omega: np.ndarray            # 2n x 2n matrix of the averaged 2-form
    antisym_error: float
    det: float
    condition: float

    @property
    def nondegenerate(self) -> bool:
        return self.det != 0 and np.isfinite(self.condition)


def _cotangent_chart(chart: Chart) -> Chart:
    names = list(chart.var_names)
    for i in range(chart.dim):
        name = f"xi{i + 1}"
        while name in names:
            name += "_"
        names.append(name)
    return make_chart(*names)


def spray_realization(structure, samples, quad_nodes, cfg: FlowConfig):
    """Integrate the flat-connection Poisson spray Y|_xi = hor(xi, pi#(xi))
    on the cotangent chart and average the pullbacks of omega_can over
    t in [0,1] by the trapezoid rule on the given nodes.

    omega_can = sum_i dx_i ^ dxi_i, for which the chart projection of the
    resulting symplectic form is a Poisson map onto pi (realization_check).
    """
    pi = structure.pi if isinstance(structure, PoissonStructure) else structure
    chart = pi.chart
    n = chart.dim
    big = _cotangent_chart(chart)
    p = bivector_matrix(pi)
    p_lift = [[_lift_to(big, e) for e in row] for row in p]
    # spray: dx_j/dt = sum_i xi_i P_ij(x), dxi/dt = 0
    spray = []
    for j in range(n):
        acc = RatFunc.zero(big)
        for i in range(n):
            acc = acc + RatFunc.var(big, n + i) * p_lift[i][j]
        spray.append(acc)
    field_fns = [compile_ratfunc(c) for c in spray]
    guards = _denominator_guards(spray)
    a_entries = [[c.diff(k) for k in range(2 * n)] for c in spray]
    a_fns = [[compile_ratfunc(e) for e in row] for row in a_entries]

    if isinstance(quad_nodes, int):
        nodes = np.linspace(0.0, 1.0, quad_nodes)
    else:
        nodes = np.asarray(sorted(float(t) for t in quad_nodes))
        if nodes[0] != 0.0 or nodes[-1] != 1.0:
            raise FlowError("quadrature nodes must span [0, 1]")
    w_can = np.zeros((2 * n, 2 * n))
    w_can[:n, n:] = np.eye(n)
    w_can[n:, :n] = -np.eye(n)

    def odefun(t, state):
        y = state[: 2 * n]
        j = state[2 * n :].reshape(2 * n, 2 * n)
        dy = np.zeros(2 * n)
        dy[:n] = [f(y) for f in field_fns]
        a = np.zeros((2 * n, 2 * n))
        a[:n, :] = [[f(y) for f in row] for row in a_fns]
        return np.concatenate([dy, (a @ j).ravel()])

    out = []
    for s in samples:
        y0 = np.asarray(list(map(float, s)), dtype=float)
        if y0.shape != (2 * n,):
            raise FlowError("samples live in the cotangent chart (length 2n)")
        state = np.concatenate([y0, np.eye(2 * n).ravel()])
        t = 0.0
        acc = np.zeros((2 * n, 2 * n))
        values = []
        for node in nodes:
            gap = node - t
            if gap > 0:
                steps = max(1, int(round(gap / cfg.dt)))
                h = gap / steps
                for _ in range(steps):
                    for g in guards:
                        if abs(g(state[: 2 * n])) < cfg.pole_threshold:
                            raise PoleProximityError("spray flow hit a pole")
                    state = rk4_step(odefun, t, state, h)
                    t += h
                    if not np.all(np.isfinite(state)) or np.max(np.abs(state)) > cfg.escape_radius:
                        raise FlowError(f"spray flow escaped for sample {s}")
            j = state[2 * n :].reshape(2 * n, 2 * n)
            values.append(j.T @ w_can @ j)
        for k in range(len(nodes) - 1):
            acc += 0.5 * (nodes[k + 1] - nodes[k]) * (values[k] + values[k + 1])
        antisym = float(np.max(np.abs(acc + acc.T)))
        det = float(np.linalg.det(acc))
        cond = float(np.linalg.cond(acc)) if det != 0 else float("inf")
        out.append(RealizationSample(y0, acc, antisym, det, cond))
    return out


def _lift_to(big: Chart, f: RatFunc) -> RatFunc:
    values = [RatFunc.var(big, i) for i in range(f.chart.dim)]
    return f.subst(values)


def realization_check(realization_samples, structure) -> float:
    """Invert each omega to a bivector on the cotangent chart, push it down
    the projection (the [I 0] block), and compare with pi at the base point;
    returns the max entrywise deviation."""
    pi = structure.pi if isinstance(structure, PoissonStructure) else structure
    n = pi.chart.dim
    p_fn = compile_matrix(bivector_matrix(pi))
    worst = 0.0
    for sample in realization_samples:
        if sample.det == 0:
            raise FlowError("singular omega in realization_check")
        inv = np.linalg.inv(sample.omega)
        pushed = inv[:n, :n]
        target = p_fn(sample.point[:n])
        worst = max(worst, float(np.max(np.abs(pushed - target))))
    return worst
