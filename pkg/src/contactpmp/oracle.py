"""Direct transcription oracle for classical and Herglotz optimal control.

Decision variables are the controls at ``N + 1`` uniform nodes. States and the
accumulated cost (``x0`` or ``z``) come from RK4 on each interval with linearly
interpolated controls, so the dynamics hold exactly by construction. The
terminal condition ``x(b) = x_end`` is enforced by an augmented Lagrangian and
gradients are forward differences, evaluated in one vectorized batch.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .expr import compile_exprs
from .herglotz_ocp import HerglotzOcpProblem
from .integrate import Trajectory
from .ocp import OcpProblem


@dataclass(frozen=True)
class TranscriptionConfig:
    N: int = 64
    optimizer: str = "quasi-newton"
    max_iters: int = 2000
    tol: float = 1e-6
    constraint_tol: float = 1e-9
    rho: float = 100.0
    outer_iters: int = 30
    fd_step: float = 1e-7

    def __post_init__(self):
        if self.N < 4:
            raise ValueError("N must be at least 4")
        if self.optimizer not in ("gd", "quasi-newton"):
            raise ValueError("optimizer must be 'gd' or 'quasi-newton'")
        if self.max_iters < 1 or self.tol <= 0 or self.constraint_tol <= 0 or self.rho <= 0:
            raise ValueError("max_iters, tol, constraint_tol and rho must be positive")


_RHO_MAX = 1e4


class OracleStall(RuntimeWarning):
    """The optimizer stopped with the gradient above tolerance."""


@dataclass
class OracleResult:
    trajectory: Trajectory
    objective: float
    constraint_residual: float
    grad_norm: float
    iterations: int
    converged: bool
    message: str = ""
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))


class _Transcription:
    def __init__(self, states, controls, dynamics, cost, acc: str, interval, x_start, x_end, acc_start,
                 sign: float, cfg: TranscriptionConfig):
        self.m, self.k = len(states), len(controls)
        self.names = tuple(states) + (acc,) + tuple(controls)
        self.chart = self.names
        self._f = compile_exprs(list(dynamics) + [cost], self.names, backend="numpy")
        self.a, self.b = interval
        self.N = cfg.N
        self.h = (self.b - self.a) / cfg.N
        self.s0 = np.concatenate([np.asarray(x_start, dtype=float), [float(acc_start)]])
        self.x_end = np.asarray(x_end, dtype=float)
        self.sign = sign
        self.cfg = cfg

    def _rhs(self, s, u):
        # s: (m+1, B), u: (k, B)
        return np.array(self._f(list(s) + list(u)))

    def rollout(self, U: np.ndarray, keep: bool = False):
        """``U`` has shape ``(B, k, N+1)``; returns final states ``(m+1, B)`` (and all nodes if ``keep``)."""
        B = U.shape[0]
        s = np.repeat(self.s0[:, None], B, axis=1)
        h = self.h
        path = [s] if keep else None
        for i in range(self.N):
            u0, u1 = U[:, :, i].T, U[:, :, i + 1].T
            um = 0.5 * (u0 + u1)
            k1 = self._rhs(s, u0)
            k2 = self._rhs(s + 0.5 * h * k1, um)
            k3 = self._rhs(s + 0.5 * h * k2, um)
            k4 = self._rhs(s + h * k3, u1)
            s = s + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            if keep:
                path.append(s)
        return (s, np.array(path)) if keep else s

    def merit(self, w: np.ndarray, mu: np.ndarray, rho: float) -> np.ndarray:
        """Augmented Lagrangian for a batch ``w`` of shape ``(B, k*(N+1))``."""
        U = w.reshape(w.shape[0], self.k, self.N + 1)
        s = self.rollout(U)
        c = s[: self.m] - self.x_end[:, None]
        return self.sign * s[self.m] + mu @ c + 0.5 * rho * np.sum(c * c, axis=0)

    def value_and_grad(self, w: np.ndarray, mu: np.ndarray, rho: float) -> Tuple[float, np.ndarray]:
        n = w.size
        steps = self.cfg.fd_step * np.maximum(1.0, np.abs(w))
        batch = np.repeat(w[None, :], n + 1, axis=0)
        batch[np.arange(1, n + 1), np.arange(n)] += steps
        vals = self.merit(batch, mu, rho)
        return float(vals[0]), (vals[1:] - vals[0]) / steps

    def _inner(self, w, mu, rho):
        cfg = self.cfg
        gtol = 0.5 * cfg.tol  # margin for the restoration step that follows
        if cfg.optimizer == "quasi-newton":
            res = minimize(lambda x: self.value_and_grad(x, mu, rho), w, jac=True, method="BFGS",
                           options={"gtol": gtol, "maxiter": cfg.max_iters})
            return res.x, int(res.nit)
        f, g = self.value_and_grad(w, mu, rho)
        it = 0
        step = 1.0
        while it < cfg.max_iters and np.max(np.abs(g)) > gtol:
            it += 1
            gg = float(g @ g)
            while step >= 1e-16:
                trial = w - step * g
                ft = float(self.merit(trial[None, :], mu, rho)[0])
                if np.isfinite(ft) and ft <= f - 1e-4 * step * gg:
                    break
                step *= 0.5
            else:
                break  # no descent along -g: stalled
            w = trial
            f, g = self.value_and_grad(w, mu, rho)
            step = min(2.0 * step, 1e6)
        return w, it

    def fd_parts(self, w: np.ndarray):
        """Objective, constraint and their forward-difference derivatives from one batched rollout."""
        n = w.size
        steps = self.cfg.fd_step * np.maximum(1.0, np.abs(w))
        batch = np.repeat(w[None, :], n + 1, axis=0)
        batch[np.arange(1, n + 1), np.arange(n)] += steps
        s = self.rollout(batch.reshape(n + 1, self.k, self.N + 1))
        J = self.sign * s[self.m]
        c = s[: self.m] - self.x_end[:, None]
        return J[0], c[:, 0], (J[1:] - J[0]) / steps, (c[:, 1:] - c[:, :1]) / steps

    def solve(self, u_guess: Optional[np.ndarray] = None) -> OracleResult:
        cfg = self.cfg
        n = self.k * (self.N + 1)
        w = np.zeros(n) if u_guess is None else np.asarray(u_guess, dtype=float).reshape(n)
        mu = np.zeros(self.m)
        rho = cfg.rho
        iters = 0
        c_prev = np.inf
        for _ in range(cfg.outer_iters):
            w, it = self._inner(w, mu, rho)
            iters += it
            c = self.merit_parts(w)[: self.m] - self.x_end
            cn = float(np.max(np.abs(c))) if self.m else 0.0
            if cn <= cfg.constraint_tol:
                break
            mu = mu + rho * c
            if cn > 0.25 * c_prev:
                rho = min(10.0 * rho, _RHO_MAX)
            c_prev = cn
        # feasibility restoration: minimal-norm Gauss-Newton steps on x(b) = x_end
        for _ in range(8):
            if not self.m:
                break
            _, c, _, Jc = self.fd_parts(w)
            if np.max(np.abs(c)) <= 1e-3 * cfg.constraint_tol:
                break
            w = w - np.linalg.lstsq(Jc, c, rcond=None)[0]
        _, c, gJ, Jc = self.fd_parts(w)
        if self.m:
            lam = np.linalg.lstsq(Jc.T, -gJ, rcond=None)[0]
            g = gJ + Jc.T @ lam
        else:
            lam, g = mu, gJ
        gn = float(np.max(np.abs(g))) if n else 0.0
        cn = float(np.max(np.abs(c))) if self.m else 0.0
        s_end, path = self.rollout(w.reshape(1, self.k, self.N + 1), keep=True)
        times = self.a + self.h * np.arange(self.N + 1)
        U = w.reshape(self.k, self.N + 1).T
        samples = np.hstack([path[:, :, 0], U])
        converged = gn <= cfg.tol and cn <= cfg.constraint_tol
        msg = "" if converged else f"optimizer stalled: projected gradient {gn:.3g}, terminal residual {cn:.3g}"
        if not converged:
            warnings.warn(msg, OracleStall, stacklevel=3)
        traj = Trajectory(self.chart, times, samples,
                          meta={"branch": "oracle", "N": self.N, "objective": float(s_end[self.m, 0]),
                                "terminal_residual": cn, "grad_norm": gn, "iterations": iters,
                                "converged": converged})
        return OracleResult(traj, float(s_end[self.m, 0]), cn, gn, iters, converged, msg, lam)

    def merit_parts(self, w: np.ndarray) -> np.ndarray:
        return self.rollout(w.reshape(1, self.k, self.N + 1))[:, 0]


def transcribe_classical(
    problem: OcpProblem,
    config: Optional[TranscriptionConfig] = None,
    u_guess: Optional[np.ndarray] = None,
) -> OracleResult:
    """Optimize ``x0(b) = int F`` over node controls; the trajectory chart is ``(x, x0, u)``."""
    cfg = config or TranscriptionConfig()
    sign = 1.0 if problem.sense == "minimize" else -1.0
    tr = _Transcription(problem.states, problem.controls, problem.dynamics, problem.cost, "x0", problem.interval,
                        problem.x_start, problem.x_end, 0.0, sign, cfg)
    return tr.solve(u_guess)


def transcribe_herglotz(
    problem: HerglotzOcpProblem,
    config: Optional[TranscriptionConfig] = None,
    u_guess: Optional[np.ndarray] = None,
) -> OracleResult:
    """Optimize ``z(b)`` for ``z' = F(x, z, u)``, ``z(a) = z_start``; chart ``(x, z, u)``."""
    cfg = config or TranscriptionConfig()
    sign = 1.0 if problem.sense == "minimize" else -1.0
    tr = _Transcription(problem.states, problem.controls, problem.dynamics, problem.cost, "z", problem.interval,
                        problem.x_start, problem.x_end, problem.z_start, sign, cfg)
    return tr.solve(u_guess)


def trajectory_gap(oracle: Trajectory, reference: Trajectory, names: Sequence[str],
                   interior: bool = True) -> float:
    """Max deviation over the oracle nodes for ``names``; the reference is interpolated."""
    idx = range(1, len(oracle) - 1) if interior else range(len(oracle))
    worst = 0.0
    for i in idx:
        ref = reference.at(float(oracle.times[i]))
        for n in names:
            worst = max(worst, abs(float(oracle.samples[i, oracle.index(n)]) - float(ref[reference.index(n)])))
    return worst


def refinement_study(problem, Ns: Sequence[int], herglotz: bool = False,
                     config: Optional[TranscriptionConfig] = None) -> Dict[int, float]:
    """Oracle objective for each ``N``."""
    base = config or TranscriptionConfig()
    out = {}
    for N in Ns:
        cfg = TranscriptionConfig(N, base.optimizer, base.max_iters, base.tol, base.constraint_tol, base.rho,
                                  base.outer_iters, base.fd_step)
        run = transcribe_herglotz if herglotz else transcribe_classical
        out[N] = run(problem, cfg).objective
    return out


__all__ = [
    "OracleResult", "OracleStall", "TranscriptionConfig", "refinement_study", "trajectory_gap",
    "transcribe_classical", "transcribe_herglotz",
]
