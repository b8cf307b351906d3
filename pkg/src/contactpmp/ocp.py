"""Classical optimal control through the presymplectic Pontryagin principle.

States ``x``, controls ``u``, dynamics ``x' = X(x, u)`` and running cost
``F(x, u)``. The extended system adds ``x0`` with ``x0' = F`` and the
Hamiltonian ``H = p0 F + p_i X^i`` on ``(x0, x, p0, p, u)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .expr import Expr, as_expr, compile_exprs, diff, eval_jet, var
from .geometry import (
    ConstraintSet,
    ContactSystem,
    PresymplecticControlSystem,
    compatibility_constraints,
)
from .integrate import (
    IntegratorConfig,
    ShootingConfig,
    Trajectory,
    integrate,
    shoot,
)

X0, P0 = "x0", "p0"


def costate(name: str) -> str:
    return f"p_{name}"


class ControlEliminationError(ArithmeticError):
    """``dH/du = 0`` could not be solved for the controls."""


class SingularProblemError(RuntimeError):
    """The control Hessian is singular; carries the constraint set found so far."""

    def __init__(self, message: str, constraints: Optional[ConstraintSet] = None):
        super().__init__(message)
        self.constraints = constraints


@dataclass(frozen=True)
class OcpProblem:
    states: Tuple[str, ...]
    controls: Tuple[str, ...]
    dynamics: Tuple[Expr, ...]
    cost: Expr
    interval: Tuple[float, float]
    x_start: Tuple[float, ...]
    x_end: Tuple[float, ...]
    sense: str = "minimize"

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "controls", tuple(self.controls))
        object.__setattr__(self, "dynamics", tuple(as_expr(e) for e in self.dynamics))
        object.__setattr__(self, "cost", as_expr(self.cost))
        object.__setattr__(self, "interval", tuple(float(v) for v in self.interval))
        object.__setattr__(self, "x_start", tuple(float(v) for v in self.x_start))
        object.__setattr__(self, "x_end", tuple(float(v) for v in self.x_end))
        if self.sense not in ("minimize", "maximize"):
            raise ValueError("sense must be 'minimize' or 'maximize'")
        m = len(self.states)
        if len(self.dynamics) != m:
            raise ValueError(f"{m} states need {m} dynamics expressions, got {len(self.dynamics)}")
        if len(self.x_start) != m or len(self.x_end) != m:
            raise ValueError("boundary vectors must match the number of states")
        names = self.states + self.controls
        if len(set(names)) != len(names):
            raise ValueError("state and control names must be distinct")
        reserved = {X0, P0} | {costate(s) for s in self.states}
        clash = sorted(reserved & set(names))
        if clash:
            raise ValueError(f"names reserved for the extended system: {clash}")
        for e in self.dynamics + (self.cost,):
            stray = [v for v in e.vars if v not in names]
            if stray:
                raise ValueError(f"expression {e} references undeclared names {stray}")
        a, b = self.interval
        if not b > a:
            raise ValueError("interval must satisfy b > a")


def default_lambda0(sense: str) -> float:
    return -1.0 if sense == "minimize" else 1.0


_SINGULAR = (
    "control elimination singular: d2H/du2 not invertible (use compatibility_constraints at higher depth)"
)


class ControlEliminator:
    """Newton solver for ``dH/du = 0`` using compiled derivatives of ``H``."""

    def __init__(self, H: Expr, controls: Sequence[str], others: Sequence[str]):
        self.controls = tuple(controls)
        self.others = tuple(others)
        names = self.others + self.controls
        grad = [diff(H, u) for u in self.controls]
        hess = [diff(g, u) for g in grad for u in self.controls]
        self.grad_exprs = grad
        self._g = compile_exprs(grad, names)
        self._h = compile_exprs(hess, names)
        self.k = len(self.controls)

    def residual(self, values: Sequence[float], u: Sequence[float]) -> np.ndarray:
        return np.array(self._g(list(values) + list(u)))

    def hessian(self, values: Sequence[float], u: Sequence[float]) -> np.ndarray:
        return np.array(self._h(list(values) + list(u))).reshape(self.k, self.k)

    def solve(
        self,
        values: Sequence[float],
        u_guess: Sequence[float],
        tol: float = 1e-12,
        max_iter: int = 50,
        cond_max: float = 1e12,
    ) -> np.ndarray:
        if self.k == 0:
            return np.zeros(0)
        if self.k == 1:
            return np.array([self._solve_scalar(list(values), float(u_guess[0]), tol, max_iter, cond_max)])
        if self.k == 2:
            return np.array(self._solve_pair(list(values), [float(v) for v in u_guess], tol, max_iter, cond_max))
        vals = list(values)
        u = np.array(u_guess, dtype=float)
        for _ in range(max_iter):
            g = np.array(self._g(vals + u.tolist()))
            W = np.array(self._h(vals + u.tolist())).reshape(self.k, self.k)
            if not np.any(W) or np.linalg.cond(W) > cond_max:
                raise ControlEliminationError(_SINGULAR)
            if np.max(np.abs(g)) <= tol:
                return u
            du = np.linalg.solve(W, g)
            u = u - du
            if not np.all(np.isfinite(u)):
                break
            if np.max(np.abs(du)) <= 1e-15 * (1 + np.max(np.abs(u))):
                g = np.array(self._g(vals + u.tolist()))
                if np.max(np.abs(g)) <= max(tol, 1e-9):
                    return u
        raise ControlEliminationError(f"control elimination did not converge in {max_iter} iterations")

    def _solve_pair(self, vals, u, tol, max_iter, cond_max) -> List[float]:
        # two controls: explicit 2x2 inverse, condition number in the Frobenius norm
        a, b = u
        for _ in range(max_iter):
            g0, g1 = self._g(vals + [a, b])
            w00, w01, w10, w11 = self._h(vals + [a, b])
            det = w00 * w11 - w01 * w10
            fro2 = w00 * w00 + w01 * w01 + w10 * w10 + w11 * w11
            if det == 0.0 or not math.isfinite(det) or fro2 / abs(det) > cond_max:
                raise ControlEliminationError(_SINGULAR)
            if max(abs(g0), abs(g1)) <= tol:
                return [a, b]
            da = (w11 * g0 - w01 * g1) / det
            db = (w00 * g1 - w10 * g0) / det
            a, b = a - da, b - db
            if not (math.isfinite(a) and math.isfinite(b)):
                break
            if max(abs(da), abs(db)) <= 1e-15 * (1 + max(abs(a), abs(b))):
                if max(abs(x) for x in self._g(vals + [a, b])) <= max(tol, 1e-9):
                    return [a, b]
        raise ControlEliminationError(f"control elimination did not converge in {max_iter} iterations")

    def _solve_scalar(self, vals, u, tol, max_iter, cond_max) -> float:
        # one control: same Newton iteration without array overhead
        for _ in range(max_iter):
            g = self._g(vals + [u])[0]
            w = self._h(vals + [u])[0]
            if w == 0.0 or not math.isfinite(w):
                raise ControlEliminationError(_SINGULAR)
            if abs(g) <= tol:
                return u
            du = g / w
            u -= du
            if not math.isfinite(u):
                break
            if abs(du) <= 1e-15 * (1 + abs(u)):
                if abs(self._g(vals + [u])[0]) <= max(tol, 1e-9):
                    return u
        raise ControlEliminationError(f"control elimination did not converge in {max_iter} iterations")


@dataclass(frozen=True)
class PmpSystem:
    problem: OcpProblem
    chart: Tuple[str, ...]
    H: Expr
    lambda0: float

    @property
    def states(self) -> Tuple[str, ...]:
        return self.problem.states

    @property
    def costates(self) -> Tuple[str, ...]:
        return tuple(costate(s) for s in self.problem.states)

    @property
    def controls(self) -> Tuple[str, ...]:
        return self.problem.controls

    @property
    def flow_chart(self) -> Tuple[str, ...]:
        """Chart without controls: ``(x0, x, p0, p)``."""
        return (X0,) + self.states + (P0,) + self.costates

    @cached_property
    def rhs_exprs(self) -> List[Expr]:
        pr = self.problem
        p0 = var(P0)
        ps = [var(c) for c in self.costates]
        out = [pr.cost] + list(pr.dynamics) + [as_expr(0.0)]
        for x in self.states:
            term = -(p0 * diff(pr.cost, x))
            for pj, Xj in zip(ps, pr.dynamics):
                d = diff(Xj, x)
                if not d.is_zero:
                    term = term - pj * d
            out.append(term)
        return out

    @cached_property
    def _rhs(self):
        return compile_exprs(self.rhs_exprs, self.chart)

    @cached_property
    def eliminator(self) -> ControlEliminator:
        return ControlEliminator(self.H, self.controls, self.flow_chart)

    @cached_property
    def _H(self):
        return compile_exprs([self.H], self.chart)

    def rhs_values(self, y: Sequence[float], u: Sequence[float]) -> np.ndarray:
        return np.array(self._rhs(list(y) + list(u)))

    def presymplectic(self) -> PresymplecticControlSystem:
        base = (X0,) + self.states + (P0,) + self.costates
        return PresymplecticControlSystem(base, self.controls, self.H)


def extend(problem: OcpProblem, lambda0: Optional[float] = None) -> PmpSystem:
    """Extended system with ``H = p0 F + p_i X^i``."""
    lam = default_lambda0(problem.sense) if lambda0 is None else float(lambda0)
    H = var(P0) * problem.cost
    for s, X in zip(problem.states, problem.dynamics):
        H = H + var(costate(s)) * X
    chart = (X0,) + problem.states + (P0,) + tuple(costate(s) for s in problem.states) + problem.controls
    return PmpSystem(problem, chart, H, lam)


def _values(sys: PmpSystem, point: Mapping[str, float], names: Sequence[str]) -> List[float]:
    missing = [n for n in names if n not in point]
    if missing:
        raise KeyError(f"point does not bind {missing}")
    return [float(point[n]) for n in names]


def pmp_rhs(sys: PmpSystem, point: Mapping[str, float]) -> np.ndarray:
    """``(x0', x', p0', p')`` from exact jets of ``H``: ``x0' = F``, ``x' = X``, ``p0' = 0``, ``p' = -dH/dx``."""
    pt = dict(point)
    _values(sys, pt, sys.chart)
    pr = sys.problem
    F = eval_jet(pr.cost, pt).value
    X = [eval_jet(e, pt).value for e in pr.dynamics]
    dHdx = eval_jet(sys.H, pt, sys.states, 1).grad
    return np.concatenate([[F], X, [0.0], -dHdx])


def eliminate_controls(
    sys: PmpSystem,
    point_without_u: Mapping[str, float],
    u_guess: Sequence[float] = None,
    tol: float = 1e-12,
    max_iter: int = 50,
) -> np.ndarray:
    vals = _values(sys, point_without_u, sys.flow_chart)
    guess = np.zeros(len(sys.controls)) if u_guess is None else u_guess
    return sys.eliminator.solve(vals, guess, tol, max_iter)


# ---------------------------------------------------------------- branches


@dataclass(frozen=True)
class NormalRestriction:
    """Contact picture of the normal branch ``p0 = lambda0 != 0``.

    The Darboux data are ``z = x0``, ``Q = x``, ``P = -p / lambda0`` and the
    contact Hamiltonian is ``-H_N / lambda0 = -F + P X`` with
    ``H_N = lambda0 F + p X``. The form ``-lambda0 dx0 - p dx`` equals
    ``-lambda0 (dz - P dQ)``, so both describe the same contact structure;
    the Reeb field of the former is ``-(1/lambda0) d/dx0``.
    """

    pmp: PmpSystem
    lambda0: float
    contact: ContactSystem
    H_N: Expr

    def to_contact(self, point: Mapping[str, float]) -> Dict[str, float]:
        out = {self.contact.z: float(point[X0])}
        for s, ps, P in zip(self.pmp.states, self.pmp.costates, self.contact.p):
            out[s] = float(point[s])
            out[P] = -float(point[ps]) / self.lambda0
        for u in self.pmp.controls:
            if u in point:
                out[u] = float(point[u])
        return out

    def from_contact(self, cpoint: Mapping[str, float]) -> Dict[str, float]:
        out = {X0: float(cpoint[self.contact.z]), P0: self.lambda0}
        for s, ps, P in zip(self.pmp.states, self.pmp.costates, self.contact.p):
            out[s] = float(cpoint[s])
            out[ps] = -self.lambda0 * float(cpoint[P])
        return out

    def reeb(self) -> np.ndarray:
        """Reeb field of ``-lambda0 dx0 - p dx`` in ``(x0, x, p)`` coordinates."""
        m = len(self.pmp.states)
        r = np.zeros(1 + 2 * m)
        r[0] = -1.0 / self.lambda0
        return r

    def rhs(self, point: Mapping[str, float], u: Optional[Sequence[float]] = None) -> np.ndarray:
        """``(x0', x', p0', p')`` generated by the contact field; controls eliminated if not given."""
        pt = dict(point)
        pt[P0] = self.lambda0
        if u is None:
            missing = [c for c in self.pmp.controls if c not in pt]
            if missing:
                guess = [0.0] * len(self.pmp.controls)
                u = eliminate_controls(self.pmp, pt, guess)
                pt.update(zip(self.pmp.controls, u))
        else:
            pt.update(zip(self.pmp.controls, u))
        c = self.to_contact(pt)
        vals = [c[n] for n in self.contact.chart] + [pt[u] for u in self.pmp.controls]
        X = self.contact.vf(vals[: len(self.contact.chart)], vals[len(self.contact.chart):])
        m = len(self.pmp.states)
        xdot, Pdot, zdot = X[:m], X[m: 2 * m], X[2 * m]
        return np.concatenate([[zdot], xdot, [0.0], -self.lambda0 * Pdot])


def normal_restriction(sys: PmpSystem, lambda0: Optional[float] = None) -> NormalRestriction:
    lam = sys.lambda0 if lambda0 is None else float(lambda0)
    if lam == 0.0:
        raise ValueError("the normal branch needs lambda0 != 0")
    pr = sys.problem
    Pnames = tuple(f"P_{s}" for s in pr.states)
    z = "z" if "z" not in pr.states + pr.controls else "z_"
    Hc = -pr.cost
    for P, X in zip(Pnames, pr.dynamics):
        Hc = Hc + var(P) * X
    contact = ContactSystem(len(pr.states), pr.states + Pnames + (z,), Hc, pr.controls)
    H_N = as_expr(lam) * pr.cost
    for ps, X in zip(sys.costates, pr.dynamics):
        H_N = H_N + var(ps) * X
    return NormalRestriction(sys, lam, contact, H_N)


@dataclass(frozen=True)
class AbnormalRestriction:
    """Branch ``p0 = 0``: presymplectic with ``H0 = p_i X^i``.

    The ``x0`` rate lies in the kernel and is undetermined; it is reported as ``F``.
    """

    pmp: PmpSystem
    H0: Expr
    x0_rate_undetermined: bool = True

    @cached_property
    def _rhs(self):
        pr = self.pmp.problem
        out = [pr.cost] + list(pr.dynamics)
        for x in pr.states:
            term = as_expr(0.0)
            for ps, Xj in zip(self.pmp.costates, pr.dynamics):
                d = diff(Xj, x)
                if not d.is_zero:
                    term = term - var(ps) * d
            out.append(term)
        names = pr.states + self.pmp.costates + pr.controls
        return compile_exprs(out, names)

    def rhs(self, point: Mapping[str, float]) -> np.ndarray:
        """``(x0', x', p')`` with ``x0' = F`` for reporting."""
        pr = self.pmp.problem
        names = pr.states + self.pmp.costates + pr.controls
        return np.array(self._rhs([float(point[n]) for n in names]))

    def constraints(self) -> List[Expr]:
        return [diff(self.H0, u) for u in self.pmp.controls]


def abnormal_restriction(sys: PmpSystem) -> AbnormalRestriction:
    H0 = as_expr(0.0)
    for ps, X in zip(sys.costates, sys.problem.dynamics):
        H0 = H0 + var(ps) * X
    return AbnormalRestriction(sys, H0)


# ---------------------------------------------------------------- shooting


@dataclass
class BvpConfig:
    integrator: IntegratorConfig = field(default_factory=lambda: IntegratorConfig("rk4", steps=1000))
    shooting: ShootingConfig = field(default_factory=ShootingConfig)
    segments: int = 1
    p_guess: Optional[Sequence[float]] = None
    u_guess: Optional[Sequence[float]] = None
    depth: int = 3


class _Flow:
    """Integrates the extended system with controls eliminated at every RHS call."""

    def __init__(self, sys: PmpSystem, lam: float, u_guess: Sequence[float]):
        self.sys = sys
        self.lam = lam
        self.u0 = np.array(u_guess, dtype=float)
        self.u = self.u0.copy()

    def reset(self):
        self.u = self.u0.copy()

    def controls(self, y: np.ndarray) -> np.ndarray:
        self.u = self.sys.eliminator.solve(y.tolist(), self.u)
        return self.u

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        u = self.controls(y)
        return self.sys.rhs_values(y, u)

    def run(self, y0, span, cfg) -> Trajectory:
        self.reset()
        return integrate(self.rhs, y0, span, cfg, self.sys.flow_chart)


def _segment_steps(cfg: IntegratorConfig, segments: int) -> IntegratorConfig:
    if segments == 1 or cfg.method != "rk4" or cfg.step is not None:
        return cfg
    return IntegratorConfig("rk4", steps=max(1, cfg.steps // segments), max_steps=cfg.max_steps)


def solve_bvp(
    sys: PmpSystem,
    lambda0: Optional[float] = None,
    config: Optional[BvpConfig] = None,
) -> Trajectory:
    """Shoot on ``p(a)`` so that ``x(b) = x_end``; controls from ``dH/du = 0`` at every step.

    Returns a trajectory over ``(x0, x, p0, p, u)`` with diagnostics ``H`` and
    ``dHdu`` (max-norm); ``meta`` holds the terminal residual and shooting data.
    """
    cfg = config or BvpConfig()
    lam = sys.lambda0 if lambda0 is None else float(lambda0)
    pr = sys.problem
    m, k = len(pr.states), len(pr.controls)
    a, b = pr.interval
    u_guess = np.zeros(k) if cfg.u_guess is None else np.asarray(cfg.u_guess, dtype=float)
    p_guess = np.zeros(m) if cfg.p_guess is None else np.asarray(cfg.p_guess, dtype=float)
    flow = _Flow(sys, lam, u_guess)
    x_start, x_end = np.array(pr.x_start), np.array(pr.x_end)

    def y_init(x, p, x0=0.0):
        return np.concatenate([[x0], x, [lam], p])

    # a singular control Hessian at the initial guess means shooting is pointless
    try:
        flow.controls(y_init(x_start, p_guess))
    except ControlEliminationError as exc:
        cs = compatibility_constraints(sys.presymplectic(), cfg.depth)
        raise SingularProblemError(str(exc), cs) from exc

    K = max(1, int(cfg.segments))
    nodes = np.linspace(a, b, K + 1)
    seg_cfg = _segment_steps(cfg.integrator, K)

    def unpack(w):
        p_a = w[:m]
        interior = w[m:].reshape(K - 1, 2 * m) if K > 1 else np.zeros((0, 2 * m))
        return p_a, interior

    def residual(w):
        p_a, interior = unpack(w)
        starts = [(x_start, p_a)] + [(row[:m], row[m:]) for row in interior]
        res = []
        for s, (x, p) in enumerate(starts):
            end = flow.run(y_init(x, p), (nodes[s], nodes[s + 1]), seg_cfg).samples[-1]
            xe, pe = end[1:1 + m], end[2 + m:]
            if s < K - 1:
                nxt = interior[s]
                res.append(xe - nxt[:m])
                res.append(pe - nxt[m:])
            else:
                res.append(xe - x_end)
        return np.concatenate(res)

    guess = np.concatenate([p_guess] + [np.concatenate([x_start + (x_end - x_start) * (nodes[s] - a) / (b - a), p_guess])
                                        for s in range(1, K)]) if K > 1 else p_guess
    sol = shoot(residual, guess, cfg.shooting)
    p_a, interior = unpack(sol.x)
    starts = [(x_start, p_a)] + [(row[:m], row[m:]) for row in interior]
    pieces, x0_offset = [], 0.0
    for s, (x, p) in enumerate(starts):
        tr = flow.run(y_init(x, p, x0_offset), (nodes[s], nodes[s + 1]), seg_cfg)
        x0_offset = tr.samples[-1, 0]
        pieces.append(tr if s == 0 else Trajectory(tr.chart, tr.times[1:], tr.samples[1:], {}, tr.derivs[1:]))
    times = np.concatenate([pc.times for pc in pieces])
    Y = np.vstack([pc.samples for pc in pieces])
    D = np.vstack([pc.derivs for pc in pieces])
    return _finish(sys, flow, times, Y, D, sol, lam, x_end)


def _finish(sys, flow, times, Y, D, sol, lam, x_end) -> Trajectory:
    m = len(sys.states)
    flow.reset()
    U = np.array([flow.controls(y) for y in Y]).reshape(len(Y), len(sys.controls))
    full = np.hstack([Y, U])
    Hvals = np.array([sys._H(list(r))[0] for r in full])
    dHdu = np.array([np.max(np.abs(sys.eliminator.residual(y, u))) if len(u) else 0.0 for y, u in zip(Y, U)])
    Dfull = np.hstack([D, np.zeros_like(U)])
    traj = Trajectory(sys.chart, times, full, {"H": Hvals, "dHdu": dHdu}, Dfull)
    terminal = float(np.max(np.abs(Y[-1, 1:1 + m] - x_end))) if m else 0.0
    traj.meta.update(
        branch="normal" if lam != 0 else "abnormal",
        lambda0=lam,
        terminal_residual=terminal,
        shooting_iterations=sol.iterations,
        restarts_used=sol.restarts_used,
        p0_drift=float(np.max(np.abs(Y[:, 1 + m] - lam))),
        accepted_steps=len(times) - 1,
    )
    return traj


__all__ = [
    "AbnormalRestriction", "BvpConfig", "ControlEliminationError", "ControlEliminator",
    "NormalRestriction", "OcpProblem", "PmpSystem", "SingularProblemError", "abnormal_restriction",
    "costate", "default_lambda0", "eliminate_controls", "extend", "normal_restriction",
    "pmp_rhs", "solve_bvp",
]
