"""Action-dependent (Herglotz) Lagrangians: generalized Euler-Lagrange flow and action."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from .expr import Expr, as_expr, compile_exprs, diff, eval_jet
from .integrate import IntegratorConfig, Trajectory, integrate, rk4_step


class RegularityError(ValueError):
    """The velocity Hessian of the Lagrangian is not invertible."""


def lagrangian_chart(n: int) -> Tuple[str, ...]:
    if n == 1:
        return ("q", "v", "z")
    return tuple(f"q{i}" for i in range(1, n + 1)) + tuple(f"v{i}" for i in range(1, n + 1)) + ("z",)


@dataclass(frozen=True)
class HerglotzLagrangian:
    """``L(q, v, z)`` over the chart ``(q^1..q^n, v^1..v^n, z)``."""

    n: int
    chart: Tuple[str, ...]
    L: Expr

    def __post_init__(self):
        object.__setattr__(self, "chart", tuple(self.chart))
        object.__setattr__(self, "L", as_expr(self.L))
        if len(self.chart) != 2 * self.n + 1 or len(set(self.chart)) != len(self.chart):
            raise ValueError("chart must hold 2n+1 distinct names")
        stray = [v for v in self.L.vars if v not in self.chart]
        if stray:
            raise ValueError(f"L references names outside the chart: {stray}")

    @classmethod
    def standard(cls, n: int, L) -> "HerglotzLagrangian":
        return cls(n, lagrangian_chart(n), as_expr(L))

    @property
    def q(self) -> Tuple[str, ...]:
        return self.chart[: self.n]

    @property
    def v(self) -> Tuple[str, ...]:
        return self.chart[self.n: 2 * self.n]

    @property
    def z(self) -> str:
        return self.chart[-1]

    @cached_property
    def _parts(self):
        L = self.L
        Lq = [diff(L, q) for q in self.q]
        Lv = [diff(L, v) for v in self.v]
        Lz = diff(L, self.z)
        W = [[diff(lv, v) for v in self.v] for lv in Lv]
        Lvq = [[diff(lv, q) for q in self.q] for lv in Lv]
        Lvz = [diff(lv, self.z) for lv in Lv]
        flat = [L, Lz] + Lq + Lv + Lvz + [w for row in W for w in row] + [c for row in Lvq for c in row]
        return compile_exprs(flat, self.chart)

    def accel_system(self, y: Sequence[float]) -> Tuple[np.ndarray, np.ndarray, float]:
        """``(W, rhs, L)`` of the linear system ``W v' = rhs`` at chart values ``y``."""
        n = self.n
        vals = self._parts(list(y))
        L, Lz = vals[0], vals[1]
        k = 2
        Lq = np.array(vals[k:k + n]); k += n
        Lv = np.array(vals[k:k + n]); k += n
        Lvz = np.array(vals[k:k + n]); k += n
        W = np.array(vals[k:k + n * n]).reshape(n, n); k += n * n
        Lvq = np.array(vals[k:k + n * n]).reshape(n, n)
        v = np.asarray(y[n:2 * n], dtype=float)
        rhs = Lq - Lvq @ v - Lvz * L + Lz * Lv
        return W, rhs, L

    def rhs(self, y: Sequence[float], cond_max: float = 1e12) -> np.ndarray:
        W, b, L = self.accel_system(y)
        vdot = _solve_regular(W, b, cond_max)
        return np.concatenate([np.asarray(y[self.n:2 * self.n], dtype=float), vdot, [L]])


def _solve_regular(W: np.ndarray, b: np.ndarray, cond_max: float) -> np.ndarray:
    if not np.any(W) or np.linalg.cond(W) > cond_max:
        raise RegularityError(
            "velocity Hessian W_ij = d2L/dv^i dv^j is singular; the Lagrangian is not regular here"
        )
    return np.linalg.solve(W, b)


def herglotz_rhs(lag: HerglotzLagrangian, point: Mapping[str, float], cond_max: float = 1e12) -> np.ndarray:
    """``(q', v', z')`` from the generalized Euler-Lagrange equations, using forward-mode jets."""
    n = lag.n
    j = eval_jet(lag.L, dict(point), lag.chart, 2)
    g, h = j.grad, j.hess
    Lq, Lv, Lz = g[:n], g[n:2 * n], g[2 * n]
    W = h[n:2 * n, n:2 * n]
    Lvq = h[n:2 * n, :n]
    Lvz = h[n:2 * n, 2 * n]
    v = np.array([float(point[name]) for name in lag.v])
    b = Lq - Lvq @ v - Lvz * j.value + Lz * Lv
    vdot = _solve_regular(W, b, cond_max)
    return np.concatenate([v, vdot, [j.value]])


def herglotz_flow(
    lag: HerglotzLagrangian,
    y0: Sequence[float],
    span: Tuple[float, float],
    config: Optional[IntegratorConfig] = None,
) -> Trajectory:
    return integrate(lambda t, y: lag.rhs(y), y0, span, config, lag.chart)


def legendre_momenta(lag: HerglotzLagrangian, point: Mapping[str, float]) -> np.ndarray:
    return eval_jet(lag.L, dict(point), lag.v, 1).grad


def herglotz_action(lag: HerglotzLagrangian, path: Trajectory, z0: float) -> float:
    """``z(b)`` for ``z' = L(gamma, gamma', z)``, ``z(a) = z0``.

    ``path`` is sampled over ``(q, v)`` (chart names of ``lag``); RK4 runs on the
    sample intervals with ``(q, v)`` interpolated linearly at the stage times.
    """
    cols = [path.index(name) for name in lag.q + lag.v]
    qv = path.samples[:, cols]
    f = compile_exprs([lag.L], lag.chart)
    times = path.times
    z = np.array([float(z0)])
    for i in range(len(times) - 1):
        t0, t1 = times[i], times[i + 1]
        a, b = qv[i], qv[i + 1]

        def zdot(t, zz, a=a, b=b, t0=t0, t1=t1):
            s = (t - t0) / (t1 - t0)
            return [f(list(a + s * (b - a)) + [zz[0]])[0]]

        z = rk4_step(zdot, t0, z, t1 - t0)
    return float(z[0])


def euler_lagrange_residual(lag: HerglotzLagrangian, traj: Trajectory) -> np.ndarray:
    """``d/dt(dL/dv) - dL/dq - (dL/dz)(dL/dv)`` per sample, with d/dt by 4th-order differences.

    Interior samples only (two points are dropped at each end); the grid
    must be uniform.
    """
    names = lag.chart
    cols = [traj.index(c) for c in names]
    Y = traj.samples[:, cols]
    f = compile_exprs([diff(lag.L, v) for v in lag.v] + [diff(lag.L, q) for q in lag.q] + [diff(lag.L, lag.z)], names)
    n = lag.n
    vals = np.array([f(list(y)) for y in Y])
    Lv, Lq, Lz = vals[:, :n], vals[:, n:2 * n], vals[:, 2 * n]
    h = np.diff(traj.times)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise ValueError("euler_lagrange_residual needs a uniform time grid")
    h = h[0]
    d = (Lv[:-4] - 8 * Lv[1:-3] + 8 * Lv[3:-1] - Lv[4:]) / (12 * h)
    mid = slice(2, -2)
    return d - Lq[mid] - Lz[mid, None] * Lv[mid]


__all__ = [
    "HerglotzLagrangian", "RegularityError", "euler_lagrange_residual", "herglotz_action",
    "herglotz_flow", "herglotz_rhs", "lagrangian_chart", "legendre_momenta",
]
