"""Explicit Runge-Kutta integration, dense output and Newton shooting."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np


class IntegrationError(RuntimeError):
    """Raised when an initial value problem cannot be advanced."""


class StepUnderflow(IntegrationError):
    pass


class MaxStepsExceeded(IntegrationError):
    pass


class RhsEvaluationError(IntegrationError):
    def __init__(self, t: float, cause: BaseException):
        super().__init__(f"right-hand side failed at t={t:.17g}: {cause}")
        self.t = t
        self.cause = cause


class ShootingError(RuntimeError):
    """No root found after all restarts."""

    def __init__(self, message: str, best: Optional[np.ndarray] = None, best_norm: float = math.inf):
        super().__init__(message)
        self.best = best
        self.best_norm = best_norm


class SingularJacobian(ShootingError):
    pass


@dataclass
class Trajectory:
    """Sampled curve over a named chart.

    ``derivs`` holds the vector field at each sample when the trajectory came
    from an integrator; ``at`` then uses cubic Hermite interpolation.
    """

    chart: Tuple[str, ...]
    times: np.ndarray
    samples: np.ndarray
    diagnostics: Dict[str, np.ndarray] = field(default_factory=dict)
    derivs: Optional[np.ndarray] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.chart = tuple(self.chart)
        self.times = np.asarray(self.times, dtype=float)
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if self.samples.shape != (len(self.times), len(self.chart)):
            raise ValueError(
                f"samples shape {self.samples.shape} does not match "
                f"{len(self.times)} times x {len(self.chart)} chart names"
            )
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        if len(set(self.chart)) != len(self.chart):
            raise ValueError("chart names must be distinct")

    def __len__(self) -> int:
        return len(self.times)

    def index(self, name: str) -> int:
        return self.chart.index(name)

    def column(self, name: str) -> np.ndarray:
        if name in self.chart:
            return self.samples[:, self.chart.index(name)]
        if name in self.diagnostics:
            return self.diagnostics[name]
        raise KeyError(name)

    def at(self, t: float) -> np.ndarray:
        """State at time ``t`` by dense interpolation between samples."""
        ts = self.times
        if t <= ts[0]:
            return self.samples[0].copy()
        if t >= ts[-1]:
            return self.samples[-1].copy()
        k = int(np.searchsorted(ts, t, side="right")) - 1
        t0, t1 = ts[k], ts[k + 1]
        h = t1 - t0
        s = (t - t0) / h
        y0, y1 = self.samples[k], self.samples[k + 1]
        if self.derivs is None:
            return (1 - s) * y0 + s * y1
        f0, f1 = self.derivs[k], self.derivs[k + 1]
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1

    def final(self) -> Dict[str, float]:
        return dict(zip(self.chart, self.samples[-1].tolist()))

    def with_diagnostics(self, **extra: np.ndarray) -> "Trajectory":
        diag = dict(self.diagnostics)
        for k, v in extra.items():
            diag[k] = np.asarray(v, dtype=float)
        return Trajectory(self.chart, self.times, self.samples, diag, self.derivs, dict(self.meta))

    def to_csv(self) -> str:
        """Text table: time, chart columns, then diagnostics; 17 significant digits."""
        names = list(self.diagnostics)
        buf = io.StringIO()
        buf.write(",".join(["t", *self.chart, *names]) + "\n")
        for i, t in enumerate(self.times):
            row = [t, *self.samples[i]] + [self.diagnostics[n][i] for n in names]
            buf.write(",".join("%.17g" % v for v in row) + "\n")
        return buf.getvalue()


@dataclass
class IntegratorConfig:
    """``rk4`` uses ``steps`` equal steps (or a fixed ``step``); ``rk45`` is adaptive."""

    method: str = "rk4"
    steps: int = 1000
    step: Optional[float] = None
    rtol: float = 1e-9
    atol: float = 1e-12
    max_steps: int = 200_000
    max_step: Optional[float] = None

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown method {self.method!r}")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if self.max_steps < 1 or self.steps < 1:
            raise ValueError("steps and max_steps must be at least 1")
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be positive")


Rhs = Callable[[float, np.ndarray], np.ndarray]


def _call(rhs: Rhs, t: float, y: np.ndarray) -> np.ndarray:
    try:
        f = np.asarray(rhs(t, y), dtype=float)
    except IntegrationError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the time stamp
        raise RhsEvaluationError(t, exc) from exc
    if not np.all(np.isfinite(f)):
        raise RhsEvaluationError(t, FloatingPointError("non-finite derivative"))
    return f


def rk4_step(rhs: Rhs, t: float, y: np.ndarray, h: float, f0: Optional[np.ndarray] = None) -> np.ndarray:
    k1 = _call(rhs, t, y) if f0 is None else f0
    k2 = _call(rhs, t + h / 2, y + h / 2 * k1)
    k3 = _call(rhs, t + h / 2, y + h / 2 * k2)
    k4 = _call(rhs, t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _rk4(rhs, y0, a, b, cfg):
    if cfg.step is not None:
        n = max(1, int(math.ceil((b - a) / cfg.step - 1e-12)))
    else:
        n = cfg.steps
    if n > cfg.max_steps:
        raise MaxStepsExceeded(f"{n} steps requested, max_steps={cfg.max_steps}")
    times = a + (b - a) * np.arange(n + 1) / n
    times[-1] = b
    ys = np.empty((n + 1, len(y0)))
    fs = np.empty_like(ys)
    ys[0] = y0
    fs[0] = _call(rhs, a, ys[0])
    for i in range(n):
        ys[i + 1] = rk4_step(rhs, times[i], ys[i], times[i + 1] - times[i], fs[i])
        fs[i + 1] = _call(rhs, times[i + 1], ys[i + 1])
    return times, ys, fs


# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4
# fifth-order continuous extension of the same stages, evaluated at the step midpoint
_W_MID = np.array([
    6025192743 / 60171106304, 0, 51252292925 / 130801643196, -2691868925 / 90256659456,
    187940372067 / 3189068634112, -1776094331 / 39487288512, 11237099 / 470086768,
])


def _rk45(rhs, y0, a, b, cfg):
    span = b - a
    max_step = cfg.max_step if cfg.max_step is not None else span
    y = np.array(y0, dtype=float)
    t = a
    f = _call(rhs, t, y)
    scale = cfg.atol + cfg.rtol * np.abs(y)
    d0 = np.linalg.norm(y / scale) / math.sqrt(len(y))
    d1 = np.linalg.norm(f / scale) / math.sqrt(len(y))
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h = min(h, max_step, span)
    times, ys, fs = [t], [y.copy()], [f.copy()]
    k = np.empty((7, len(y)))
    accepted = 0
    while t < b:
        if accepted >= cfg.max_steps:
            raise MaxStepsExceeded(f"max_steps={cfg.max_steps} reached at t={t:.17g}")
        if b - t < h * (1 + 1e-12):
            h = b - t
        if h < 16 * np.spacing(max(abs(t), 1.0)):
            raise StepUnderflow(f"step size underflow at t={t:.17g} (h={h:.3g})")
        k[0] = f
        for s in range(1, 7):
            k[s] = _call(rhs, t + _C[s] * h, y + h * np.dot(_A[s], k[:s]))
        y_new = y + h * np.dot(_B5, k)
        err_vec = h * np.dot(_E, k)
        tol = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = np.linalg.norm(err_vec / tol) / math.sqrt(len(y))
        # the cubic Hermite dense output must also meet the tolerance, so its
        # midpoint is compared with the continuous extension of the stages
        hermite_mid = 0.5 * (y + y_new) + h / 8 * (k[0] - k[6])
        dense_err = np.linalg.norm((hermite_mid - y - h * np.dot(_W_MID, k)) / tol) / math.sqrt(len(y))
        err = max(err, dense_err)
        if err <= 1.0:
            t = b if b - t - h <= 0 else t + h
            y = y_new
            f = k[6].copy()
            times.append(t)
            ys.append(y.copy())
            fs.append(f)
            accepted += 1
            factor = 5.0 if err == 0 else min(5.0, 0.9 * err ** -0.2)
        else:
            factor = max(0.2, 0.9 * err ** -0.2)
        h = min(h * factor, max_step)
    return np.array(times), np.array(ys), np.array(fs)


def integrate(
    rhs: Rhs,
    y0: Sequence[float],
    span: Tuple[float, float],
    config: Optional[IntegratorConfig] = None,
    chart: Optional[Sequence[str]] = None,
) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from ``span[0]`` to ``span[1]``."""
    cfg = config or IntegratorConfig()
    a, b = float(span[0]), float(span[1])
    if not b > a:
        raise ValueError("interval must satisfy b > a")
    y0 = np.asarray(y0, dtype=float).copy()
    if chart is None:
        chart = tuple(f"y{i}" for i in range(len(y0)))
    if len(chart) != len(y0):
        raise ValueError("chart length does not match the initial state")
    if cfg.method == "rk4":
        times, ys, fs = _rk4(rhs, y0, a, b, cfg)
    else:
        times, ys, fs = _rk45(rhs, y0, a, b, cfg)
    return Trajectory(tuple(chart), times, ys, {}, fs)


@dataclass
class ShootingConfig:
    tol: float = 1e-8
    max_iter: int = 50
    restarts: int = 16
    box: float = 2.0
    seed: int = 0
    fd_scale: float = 1e-7
    cond_max: float = 1e12


@dataclass
class ShootResult:
    x: np.ndarray
    residual: np.ndarray
    iterations: int
    restarts_used: int

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.residual))) if self.residual.size else 0.0


def _safe_residual(fun, x):
    try:
        r = np.asarray(fun(x), dtype=float)
    except (IntegrationError, ArithmeticError, ValueError):
        return None
    return r if np.all(np.isfinite(r)) else None


def fd_jacobian(fun, x: np.ndarray, r0: np.ndarray, scale: float = 1e-7) -> Optional[np.ndarray]:
    """Forward-difference Jacobian with step ``scale * (1 + |x_i|)``."""
    J = np.empty((len(r0), len(x)))
    for i in range(len(x)):
        h = scale * (1.0 + abs(x[i]))
        xp = x.copy()
        xp[i] += h
        rp = _safe_residual(fun, xp)
        if rp is None:
            return None
        J[:, i] = (rp - r0) / (xp[i] - x[i])
    return J


def _newton(fun, x0, cfg):
    x = np.array(x0, dtype=float)
    r = _safe_residual(fun, x)
    if r is None:
        return x, None, 0, "residual undefined at start"
    norm = np.max(np.abs(r)) if r.size else 0.0
    for it in range(1, cfg.max_iter + 1):
        if norm <= cfg.tol:
            # one polishing step; keep it only if it helps
            J = fd_jacobian(fun, x, r, cfg.fd_scale)
            if J is not None and np.linalg.cond(J) <= cfg.cond_max:
                xn = x - np.linalg.solve(J, r)
                rn = _safe_residual(fun, xn)
                if rn is not None and np.max(np.abs(rn)) < norm:
                    x, r = xn, rn
            return x, r, it - 1, None
        J = fd_jacobian(fun, x, r, cfg.fd_scale)
        if J is None:
            return x, r, it, "residual undefined near iterate"
        if J.shape[0] != J.shape[1] or np.linalg.cond(J) > cfg.cond_max:
            return x, r, it, "singular"
        dx = np.linalg.solve(J, r)
        lam = 1.0
        while True:
            xn = x - lam * dx
            rn = _safe_residual(fun, xn)
            if rn is not None:
                nn = np.max(np.abs(rn))
                if nn < (1 - 1e-4 * lam) * norm or nn <= cfg.tol:
                    break
            lam *= 0.5
            if lam < 1e-6:
                return x, r, it, "line search failed"
        x, r, norm = xn, rn, nn
    if norm <= cfg.tol:
        return x, r, cfg.max_iter, None
    return x, r, cfg.max_iter, "iteration limit"


def shoot(
    residual: Callable[[np.ndarray], np.ndarray],
    guess: Sequence[float],
    config: Optional[ShootingConfig] = None,
) -> ShootResult:
    """Damped Newton with seeded random restarts in a box around ``guess``."""
    cfg = config or ShootingConfig()
    guess = np.asarray(guess, dtype=float)
    rng = np.random.default_rng(cfg.seed)
    best, best_norm = None, math.inf
    reasons = []
    start = guess
    for attempt in range(cfg.restarts + 1):
        x, r, iters, why = _newton(residual, start, cfg)
        if why is None:
            return ShootResult(x, r, iters, attempt)
        reasons.append(why)
        if r is not None:
            n = float(np.max(np.abs(r)))
            if n < best_norm:
                best, best_norm = x, n
        start = guess + rng.uniform(-cfg.box, cfg.box, size=guess.shape)
    msg = f"shooting did not converge after {cfg.restarts} restarts (best residual {best_norm:.3g})"
    if reasons and all(w == "singular" for w in reasons):
        raise SingularJacobian(msg + "; Jacobian singular (condition > %.0e)" % cfg.cond_max, best, best_norm)
    raise ShootingError(msg, best, best_norm)
