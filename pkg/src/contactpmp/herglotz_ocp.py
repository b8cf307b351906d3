"""Herglotz optimal control: z-dependent cost, full extended system and its contact reduction.

The problem is ``x' = X(x, z, u)``, ``z' = F(x, z, u)``, ``x(a), x(b)`` fixed,
``z(a) = z_start``, with ``z(b)`` extremal. The full system works on
``(x0, x, z, p0, p, p_z, u)`` with ``H = (p0 + p_z) F + p_i X^i``. Normal
solutions project to the contact system on ``(x, p, z)`` with
``eta0 = dz - p_i dx^i`` and ``H0 = p_i X^i - F`` through

    p_reduced = -p / (lambda0 + p_z).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_simpson

from .expr import Expr, as_expr, compile_exprs, diff, eval_jet, var
from .geometry import ContactSystem, PresymplecticControlSystem
from .integrate import IntegratorConfig, ShootingConfig, Trajectory, integrate, shoot
from .lagrangian import HerglotzLagrangian, euler_lagrange_residual, herglotz_flow
from .ocp import ControlEliminator, OcpProblem, costate

X0, P0, Z, PZ = "x0", "p0", "z", "p_z"


@dataclass(frozen=True)
class HerglotzOcpProblem:
    states: Tuple[str, ...]
    controls: Tuple[str, ...]
    dynamics: Tuple[Expr, ...]
    cost: Expr
    interval: Tuple[float, float]
    x_start: Tuple[float, ...]
    x_end: Tuple[float, ...]
    z_start: float = 0.0
    sense: str = "maximize"

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "controls", tuple(self.controls))
        object.__setattr__(self, "dynamics", tuple(as_expr(e) for e in self.dynamics))
        object.__setattr__(self, "cost", as_expr(self.cost))
        object.__setattr__(self, "interval", tuple(float(v) for v in self.interval))
        object.__setattr__(self, "x_start", tuple(float(v) for v in self.x_start))
        object.__setattr__(self, "x_end", tuple(float(v) for v in self.x_end))
        object.__setattr__(self, "z_start", float(self.z_start))
        if self.sense not in ("minimize", "maximize"):
            raise ValueError("sense must be 'minimize' or 'maximize'")
        m = len(self.states)
        if len(self.dynamics) != m or len(self.x_start) != m or len(self.x_end) != m:
            raise ValueError("dynamics and boundary vectors must match the number of states")
        names = self.states + self.controls
        if len(set(names)) != len(names):
            raise ValueError("state and control names must be distinct")
        reserved = {X0, P0, Z, PZ} | {costate(s) for s in self.states}
        clash = sorted(reserved & set(names))
        if clash:
            raise ValueError(f"names reserved for the extended system: {clash}")
        allowed = set(names) | {Z}
        for e in self.dynamics + (self.cost,):
            stray = [v for v in e.vars if v not in allowed]
            if stray:
                raise ValueError(f"expression {e} references undeclared names {stray}")
        if not self.interval[1] > self.interval[0]:
            raise ValueError("interval must satisfy b > a")

    @property
    def z_dependent(self) -> bool:
        return any(e.depends_on(Z) for e in self.dynamics + (self.cost,))

    @property
    def costates(self) -> Tuple[str, ...]:
        return tuple(costate(s) for s in self.states)

    def classical(self) -> OcpProblem:
        """The same data as a classical problem; only valid without z dependence.

        With ``lambda0 = -1`` its normal extremals coincide with the reduced ones.
        """
        if self.z_dependent:
            raise ValueError("problem depends on z; no classical counterpart")
        return OcpProblem(self.states, self.controls, self.dynamics, self.cost, self.interval,
                          self.x_start, self.x_end, self.sense)

    @cached_property
    def full_chart(self) -> Tuple[str, ...]:
        return (X0,) + self.states + (Z, P0) + self.costates + (PZ,) + self.controls

    @cached_property
    def full_H(self) -> Expr:
        H = (var(P0) + var(PZ)) * self.cost
        for ps, X in zip(self.costates, self.dynamics):
            H = H + var(ps) * X
        return H

    @cached_property
    def full_rhs_exprs(self) -> List[Expr]:
        H = self.full_H
        out = [self.cost] + list(self.dynamics) + [self.cost, as_expr(0.0)]
        out += [-diff(H, x) for x in self.states]
        out.append(-diff(H, Z))
        return out

    @cached_property
    def _full_rhs(self):
        return compile_exprs(self.full_rhs_exprs, self.full_chart)

    @cached_property
    def full_eliminator(self) -> ControlEliminator:
        return ControlEliminator(self.full_H, self.controls, self.full_chart[: -len(self.controls) or None])

    def presymplectic(self) -> PresymplecticControlSystem:
        base = (X0,) + self.states + (Z, P0) + self.costates + (PZ,)
        return PresymplecticControlSystem(base, self.controls, self.full_H)


def default_lambda0() -> float:
    return -1.0


def full_extended_rhs(problem: HerglotzOcpProblem, point: Mapping[str, float]) -> np.ndarray:
    """Components over ``(x0, x, z, p0, p, p_z)``; control rates are free and omitted.

    ``x0' = F``, ``x' = X``, ``z' = F``, ``p0' = 0``, ``p' = -dH/dx``, ``p_z' = -dH/dz``.
    """
    pt = dict(point)
    missing = [n for n in problem.full_chart if n not in pt]
    if missing:
        raise KeyError(f"point does not bind {missing}")
    F = eval_jet(problem.cost, pt).value
    X = [eval_jet(e, pt).value for e in problem.dynamics]
    g = eval_jet(problem.full_H, pt, problem.states + (Z,), 1).grad
    m = len(problem.states)
    return np.concatenate([[F], X, [F, 0.0], -g[:m], [-g[m]]])


class _ElimFlow:
    def __init__(self, elim: ControlEliminator, rhs, u0):
        self.elim = elim
        self._rhs = rhs
        self.u0 = np.array(u0, dtype=float)
        self.u = self.u0.copy()

    def reset(self):
        self.u = self.u0.copy()

    def controls(self, y):
        self.u = self.elim.solve(list(y), self.u)
        return self.u

    def rhs(self, t, y):
        u = self.controls(y)
        return np.asarray(self._rhs(list(y) + list(u)), dtype=float)


def _check_degeneracy(c: np.ndarray) -> None:
    if np.min(np.abs(c)) < 1e-10:
        warnings.warn("p0 + p_z is (nearly) zero along the trajectory; the normal reduction degenerates",
                      RuntimeWarning, stacklevel=3)


def full_flow(
    problem: HerglotzOcpProblem,
    y0: Sequence[float],
    config: Optional[IntegratorConfig] = None,
    u_guess: Optional[Sequence[float]] = None,
) -> Trajectory:
    """Integrate the full system from ``y0`` over ``(x0, x, z, p0, p, p_z)``, controls from ``dH/du = 0``."""
    cfg = config or IntegratorConfig("rk4", steps=1000)
    k = len(problem.controls)
    flow = _ElimFlow(problem.full_eliminator, problem._full_rhs, np.zeros(k) if u_guess is None else u_guess)
    chart = problem.full_chart[: len(problem.full_chart) - k]
    traj = integrate(flow.rhs, y0, problem.interval, cfg, chart)
    flow.reset()
    U = np.array([flow.controls(y) for y in traj.samples]).reshape(len(traj), k)
    m = len(problem.states)
    c = traj.samples[:, 2 + m] + traj.samples[:, -1]
    _check_degeneracy(c)
    out = Trajectory(problem.full_chart, traj.times, np.hstack([traj.samples, U]), {},
                     np.hstack([traj.derivs, np.zeros_like(U)]))
    return out


@dataclass
class PzReport:
    min_abs: float
    max_rel_error: float
    law_holds: bool
    degenerate: bool


def pz_invariant_check(problem: HerglotzOcpProblem, traj: Trajectory, rtol: float = 1e-6) -> PzReport:
    """Check ``c = p0 + p_z`` against ``c(t) = c(a) exp(-int_a^t A)``.

    ``c' = -c A`` with ``A = dF/dz + p_j (dX^j/dz) / c``; for dynamics without z
    dependence ``A = dF/dz``. The integral uses cumulative Simpson weights.
    """
    c = traj.column(P0) + traj.column(PZ)
    Fz = compile_exprs([diff(problem.cost, Z)] + [diff(X, Z) for X in problem.dynamics], problem.full_chart)
    cols = [traj.index(n) for n in problem.full_chart]
    vals = np.array([Fz(list(r)) for r in traj.samples[:, cols]])
    P = np.column_stack([traj.column(ps) for ps in problem.costates]) if problem.states else np.zeros((len(traj), 0))
    degenerate = bool(np.min(np.abs(c)) < 1e-10)
    if degenerate:
        _check_degeneracy(c)
        return PzReport(float(np.min(np.abs(c))), float(np.max(np.abs(c - c[0]))), bool(np.all(c == 0) or np.max(np.abs(c)) < 1e-10), True)
    A = vals[:, 0] + np.sum(P * vals[:, 1:], axis=1) / c
    integral = cumulative_simpson(A, x=traj.times, initial=0.0)
    law = c[0] * np.exp(-integral)
    rel = np.abs(c - law) / np.maximum(np.abs(law), 1e-300)
    return PzReport(float(np.min(np.abs(c))), float(np.max(rel)), bool(np.max(rel) <= rtol), False)


# ---------------------------------------------------------------- reduction


@dataclass(frozen=True)
class ReducedContactOcp:
    """Contact picture on ``(x, p, z)`` with ``H0 = p_i X^i - F``; controls are parameters."""

    problem: HerglotzOcpProblem
    lambda0: float
    chart: Tuple[str, ...]
    H0: Expr
    contact: ContactSystem

    @property
    def flow_chart(self) -> Tuple[str, ...]:
        return self.contact.chart

    @cached_property
    def constraints(self) -> List[Expr]:
        return [diff(self.H0, u) for u in self.problem.controls]

    @cached_property
    def eliminator(self) -> ControlEliminator:
        return ControlEliminator(self.H0, self.problem.controls, self.contact.chart)

    def rhs(self, point: Mapping[str, float]) -> np.ndarray:
        """``contact_vf(H0)`` at a point binding chart and controls."""
        y = [float(point[n]) for n in self.contact.chart]
        u = [float(point[n]) for n in self.problem.controls]
        return self.contact.vf(y, u)

    def display_rhs(self, point: Mapping[str, float]) -> np.ndarray:
        """The printed right-hand side, typed in independently, for the sign audit."""
        pr = self.problem
        pt = dict(point)
        m = len(pr.states)
        F = eval_jet(pr.cost, pt, pr.states + (Z,), 1)
        Xj = [eval_jet(X, pt, pr.states + (Z,), 1) for X in pr.dynamics]
        p = np.array([pt[ps] for ps in pr.costates])
        Fx, Fz = F.grad[:m], F.grad[m]
        Xx = np.array([j.grad[:m] for j in Xj]).reshape(m, m)  # Xx[j, i] = dX^j/dx^i
        Xz = np.array([j.grad[m] for j in Xj])
        pdot = p * Fz - Xx.T @ p + Fx - Xz @ p * p
        return np.concatenate([[j.value for j in Xj], pdot, [F.value]])


def reduce(problem: HerglotzOcpProblem, lambda0: Optional[float] = None) -> ReducedContactOcp:
    lam = default_lambda0() if lambda0 is None else float(lambda0)
    if lam == 0.0:
        raise ValueError("the reduction needs lambda0 != 0")
    H0 = -problem.cost
    for ps, X in zip(problem.costates, problem.dynamics):
        H0 = H0 + var(ps) * X
    chart = problem.states + problem.costates + (Z,)
    contact = ContactSystem(len(problem.states), chart, H0, problem.controls)
    return ReducedContactOcp(problem, lam, chart + problem.controls, H0, contact)


def reduced_flow(
    red: ReducedContactOcp,
    y0: Sequence[float],
    config: Optional[IntegratorConfig] = None,
    u_guess: Optional[Sequence[float]] = None,
) -> Trajectory:
    cfg = config or IntegratorConfig("rk4", steps=1000)
    k = len(red.problem.controls)
    flow = _ElimFlow(red.eliminator, red.contact._compiled, np.zeros(k) if u_guess is None else u_guess)
    traj = integrate(flow.rhs, y0, red.problem.interval, cfg, red.flow_chart)
    flow.reset()
    U = np.array([flow.controls(y) for y in traj.samples]).reshape(len(traj), k)
    H0 = compile_exprs([red.H0], red.flow_chart + red.problem.controls)
    hv = np.array([H0(list(r))[0] for r in np.hstack([traj.samples, U])])
    res = np.array([np.max(np.abs(red.eliminator.residual(y, u))) if k else 0.0 for y, u in zip(traj.samples, U)])
    return Trajectory(red.chart, traj.times, np.hstack([traj.samples, U]), {"H0": hv, "dH0du": res},
                      np.hstack([traj.derivs, np.zeros_like(U)]))


def phi_lambda0(lambda0: float, p: np.ndarray, p_z: float) -> np.ndarray:
    """Momentum part of the reduction map."""
    return -np.asarray(p, dtype=float) / (lambda0 + p_z)


def consistency_project(
    problem: HerglotzOcpProblem,
    full_traj: Trajectory,
    lambda0: Optional[float] = None,
    red: Optional[ReducedContactOcp] = None,
) -> Trajectory:
    """Push a full-system trajectory to the reduced chart.

    Diagnostics: ``x0_minus_z`` and ``reduced_residual`` (max-norm of the
    pushed-forward velocity minus ``contact_vf(H0)`` at the image point).
    """
    lam = default_lambda0() if lambda0 is None else float(lambda0)
    red = red or reduce(problem, lam)
    x0, z = full_traj.column(X0), full_traj.column(Z)
    if abs(x0[0] - z[0]) > 1e-12:
        raise ValueError("full trajectory must start with x0(a) = z(a)")
    m = len(problem.states)
    X = np.column_stack([full_traj.column(s) for s in problem.states]) if m else np.zeros((len(full_traj), 0))
    P = np.column_stack([full_traj.column(ps) for ps in problem.costates]) if m else np.zeros((len(full_traj), 0))
    pz = full_traj.column(PZ)
    U = np.column_stack([full_traj.column(u) for u in problem.controls]) if problem.controls else np.zeros((len(full_traj), 0))
    c = lam + pz
    Pr = -P / c[:, None]
    Y = np.hstack([X, Pr, z[:, None], U])
    res = np.zeros(len(full_traj))
    D = None
    if full_traj.derivs is not None:
        # exact pushforward of the stored full velocity
        idx = {n: i for i, n in enumerate(full_traj.chart)}
        Dfull = full_traj.derivs
        Xdot = Dfull[:, [idx[s] for s in problem.states]] if m else np.zeros((len(full_traj), 0))
        Pdot = Dfull[:, [idx[ps] for ps in problem.costates]] if m else np.zeros((len(full_traj), 0))
        pzdot = Dfull[:, idx[PZ]]
        zdot = Dfull[:, idx[Z]]
        Prdot = -Pdot / c[:, None] + P * (pzdot / c ** 2)[:, None]
        D = np.hstack([Xdot, Prdot, zdot[:, None], np.zeros_like(U)])
        for i in range(len(full_traj)):
            target = red.contact.vf(Y[i, : 2 * m + 1], U[i])
            res[i] = np.max(np.abs(D[i, : 2 * m + 1] - target))
    traj = Trajectory(red.chart, full_traj.times, Y, {"x0_minus_z": x0 - z, "reduced_residual": res}, D)
    return traj


def conformal_residuals(
    problem: HerglotzOcpProblem,
    point: Mapping[str, float],
    lambda0: Optional[float] = None,
) -> Tuple[float, float]:
    """Residuals of ``Phi* eta0 = -(1/c) eta_tilde`` and ``Phi* H0 = -(1/c) H_tilde``, ``c = lambda0 + p_z``.

    ``eta_tilde = -c dz - p dx`` and ``H_tilde = c F + p X`` live on ``(x, z, p, p_z)``;
    the pullback of ``eta0`` uses the Jacobian of the map.
    """
    lam = default_lambda0() if lambda0 is None else float(lambda0)
    m = len(problem.states)
    pt = dict(point)
    x = np.array([pt[s] for s in problem.states])
    p = np.array([pt[ps] for ps in problem.costates])
    pz = float(pt[PZ])
    c = lam + pz
    pr = phi_lambda0(lam, p, pz)
    # coordinates on the source: (x, z, p, p_z); eta0 = dz - pr dx on the target (x, pr, z)
    n_src = 2 * m + 2
    # Jacobian rows: x (m), pr (m), z (1) with respect to (x, z, p, p_z)
    J = np.zeros((2 * m + 1, n_src))
    J[:m, :m] = np.eye(m)
    J[m: 2 * m, m + 1: 2 * m + 1] = -np.eye(m) / c
    J[m: 2 * m, 2 * m + 1] = p / c ** 2
    J[2 * m, m] = 1.0
    eta0 = np.concatenate([-pr, np.zeros(m), [1.0]])
    pulled = eta0 @ J
    eta_tilde = np.concatenate([-p, [-c], np.zeros(m), [0.0]])
    r_eta = float(np.max(np.abs(pulled + eta_tilde / c)))
    tgt = dict(pt)
    tgt.update(zip(problem.costates, pr))
    H0 = eval_jet(reduce(problem, lam).H0, tgt).value
    F = eval_jet(problem.cost, pt).value
    Xv = np.array([eval_jet(X, pt).value for X in problem.dynamics])
    H_tilde = c * F + p @ Xv
    r_H = abs(H0 + H_tilde / c)
    _ = x
    return r_eta, float(r_H)


def printed_map_residual(problem: HerglotzOcpProblem, point: Mapping[str, float], lambda0: float) -> float:
    """Conformal residual for the map ``p -> -(lambda0 + p_z) p`` as printed; nonzero unless ``|lambda0 + p_z| = 1``."""
    m = len(problem.states)
    p = np.array([point[ps] for ps in problem.costates])
    c = lambda0 + float(point[PZ])
    pr = -c * p
    # pullback of dz - pr dx is dz + c p dx; compare with -c * eta_tilde = c^2 dz + c p dx
    pulled = np.concatenate([c * p, [1.0]])
    target = np.concatenate([c * p, [c * c]])
    _ = m
    return float(np.max(np.abs(pulled - target)))


# ---------------------------------------------------------------- solvers


@dataclass
class HerglotzBvpConfig:
    integrator: IntegratorConfig = field(default_factory=lambda: IntegratorConfig("rk4", steps=1000))
    shooting: ShootingConfig = field(default_factory=ShootingConfig)
    p_guess: Optional[Sequence[float]] = None
    u_guess: Optional[Sequence[float]] = None


def solve_reduced(
    problem: HerglotzOcpProblem,
    lambda0: Optional[float] = None,
    config: Optional[HerglotzBvpConfig] = None,
) -> Trajectory:
    """Shoot on the reduced momenta ``p(a)`` so that ``x(b) = x_end``."""
    cfg = config or HerglotzBvpConfig()
    red = reduce(problem, lambda0)
    m = len(problem.states)
    p_guess = np.zeros(m) if cfg.p_guess is None else np.asarray(cfg.p_guess, dtype=float)
    x_start, x_end = np.array(problem.x_start), np.array(problem.x_end)
    k = len(problem.controls)
    u0 = np.zeros(k) if cfg.u_guess is None else cfg.u_guess
    flow = _ElimFlow(red.eliminator, red.contact._compiled, u0)

    def y_init(p):
        return np.concatenate([x_start, p, [problem.z_start]])

    def residual(p):
        flow.reset()
        tr = integrate(flow.rhs, y_init(p), problem.interval, cfg.integrator, red.flow_chart)
        return tr.samples[-1, :m] - x_end

    sol = shoot(residual, p_guess, cfg.shooting)
    traj = reduced_flow(red, y_init(sol.x), cfg.integrator, u0)
    traj.meta.update(
        branch="reduced",
        lambda0=red.lambda0,
        terminal_residual=float(np.max(np.abs(traj.samples[-1, :m] - x_end))) if m else 0.0,
        shooting_iterations=sol.iterations,
        restarts_used=sol.restarts_used,
        accepted_steps=len(traj) - 1,
    )
    return traj


def solve_full(
    problem: HerglotzOcpProblem,
    lambda0: Optional[float] = None,
    config: Optional[HerglotzBvpConfig] = None,
) -> Trajectory:
    """Shoot on ``(p(a), p_z(a))`` with ``x(b) = x_end`` and the transversality condition ``p_z(b) = 0``."""
    cfg = config or HerglotzBvpConfig()
    lam = default_lambda0() if lambda0 is None else float(lambda0)
    m = len(problem.states)
    k = len(problem.controls)
    u0 = np.zeros(k) if cfg.u_guess is None else cfg.u_guess
    x_start, x_end = np.array(problem.x_start), np.array(problem.x_end)
    p_guess = np.zeros(m) if cfg.p_guess is None else -lam * np.asarray(cfg.p_guess, dtype=float)
    flow = _ElimFlow(problem.full_eliminator, problem._full_rhs, u0)
    chart = problem.full_chart[: len(problem.full_chart) - k]

    def y_init(w):
        return np.concatenate([[problem.z_start], x_start, [problem.z_start, lam], w[:m], [w[m]]])

    def residual(w):
        flow.reset()
        tr = integrate(flow.rhs, y_init(w), problem.interval, cfg.integrator, chart)
        end = tr.samples[-1]
        return np.concatenate([end[1:1 + m] - x_end, [end[-1]]])

    sol = shoot(residual, np.concatenate([p_guess, [0.0]]), cfg.shooting)
    traj = full_flow(problem, y_init(sol.x), cfg.integrator, u0)
    traj.meta.update(
        branch="full",
        lambda0=lam,
        terminal_residual=float(np.max(np.abs(residual(sol.x)))),
        shooting_iterations=sol.iterations,
        restarts_used=sol.restarts_used,
        accepted_steps=len(traj) - 1,
        p0_drift=float(np.max(np.abs(traj.column(P0) - lam))),
        x0_z_drift=float(np.max(np.abs(traj.column(X0) - traj.column(Z)))),
    )
    return traj


# ---------------------------------------------------------------- Herglotz equations


def velocity_controlled_problem(
    lag: HerglotzLagrangian,
    interval: Tuple[float, float],
    q_start: Sequence[float],
    q_end: Sequence[float],
    z_start: float = 0.0,
) -> HerglotzOcpProblem:
    """Controls are the velocities, ``X = v`` and ``F = L``."""
    if lag.z != Z:
        raise ValueError(f"the Lagrangian's action variable must be named {Z!r}")
    return HerglotzOcpProblem(lag.q, lag.v, tuple(var(v) for v in lag.v), lag.L, interval, q_start, q_end, z_start)


@dataclass
class RecoveryReport:
    max_el_residual: float
    max_flow_deviation: float
    trajectory: Trajectory
    flow: Trajectory
    details: Dict[str, float] = field(default_factory=dict)


def herglotz_equation_recovery(
    lag: HerglotzLagrangian,
    interval: Tuple[float, float] = (0.0, 1.0),
    q_start: Optional[Sequence[float]] = None,
    q_end: Optional[Sequence[float]] = None,
    z_start: float = 0.0,
    config: Optional[HerglotzBvpConfig] = None,
) -> RecoveryReport:
    """Solve the velocity-controlled problem through the reduction and test the generalized Euler-Lagrange equations.

    The residual uses 4th-order central differences of ``dL/dv`` on the
    uniform RK4 grid; the Lagrangian flow from the same initial state gives
    the second comparison.
    """
    n = lag.n
    q_start = [1.0] * n if q_start is None else list(q_start)
    q_end = [0.0] * n if q_end is None else list(q_end)
    cfg = config or HerglotzBvpConfig()
    problem = velocity_controlled_problem(lag, interval, q_start, q_end, z_start)
    traj = solve_reduced(problem, config=cfg)
    # view along the Lagrangian chart (q, v, z)
    cols = [traj.index(c) for c in lag.q + lag.v + (Z,)]
    on_chart = Trajectory(lag.chart, traj.times, traj.samples[:, cols])
    el = euler_lagrange_residual(lag, on_chart)
    flow = herglotz_flow(lag, on_chart.samples[0], interval, cfg.integrator)
    dev = float(np.max(np.abs(flow.samples - on_chart.samples)))
    return RecoveryReport(float(np.max(np.abs(el))), dev, traj, flow,
                          {"terminal_residual": traj.meta["terminal_residual"]})


__all__ = [
    "HerglotzBvpConfig", "HerglotzOcpProblem", "PzReport", "RecoveryReport", "ReducedContactOcp",
    "conformal_residuals", "consistency_project", "default_lambda0", "full_extended_rhs", "full_flow",
    "herglotz_equation_recovery", "phi_lambda0", "printed_map_residual", "pz_invariant_check", "reduce",
    "reduced_flow", "solve_full", "solve_reduced", "velocity_controlled_problem",
]
