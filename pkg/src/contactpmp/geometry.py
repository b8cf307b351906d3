"""Contact and presymplectic Hamiltonian structures in Darboux charts.

The contact form is fixed to ``eta = dz - p_i dq^i``, so the Reeb field is
``d/dz`` and the Hamiltonian vector field of ``H`` reads

    q' = H_p,   p' = -H_q - p H_z,   z' = p H_p - H.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .expr import Expr, as_expr, compile_exprs, diff, eval_jet
from .integrate import IntegratorConfig, Trajectory, integrate


def darboux_chart(n: int, q: str = "q", p: str = "p", z: str = "z") -> Tuple[str, ...]:
    if n == 1:
        return (q, p, z)
    return tuple(f"{q}{i}" for i in range(1, n + 1)) + tuple(f"{p}{i}" for i in range(1, n + 1)) + (z,)


@dataclass(frozen=True)
class ContactSystem:
    """Contact Hamiltonian system ``(n, chart, H)``; ``params`` are extra bound names (e.g. controls)."""

    n: int
    chart: Tuple[str, ...]
    H: Expr
    params: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "chart", tuple(self.chart))
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "H", as_expr(self.H))
        if len(self.chart) != 2 * self.n + 1:
            raise ValueError(f"chart needs 2n+1 = {2 * self.n + 1} names, got {len(self.chart)}")
        names = self.chart + self.params
        if len(set(names)) != len(names):
            raise ValueError("chart and parameter names must be distinct")
        stray = [v for v in self.H.vars if v not in names]
        if stray:
            raise ValueError(f"H references names outside the chart: {stray}")

    @classmethod
    def darboux(cls, n: int, H, params: Sequence[str] = ()) -> "ContactSystem":
        return cls(n, darboux_chart(n), as_expr(H), tuple(params))

    @property
    def q(self) -> Tuple[str, ...]:
        return self.chart[: self.n]

    @property
    def p(self) -> Tuple[str, ...]:
        return self.chart[self.n: 2 * self.n]

    @property
    def z(self) -> str:
        return self.chart[-1]

    @cached_property
    def rhs_exprs(self) -> List[Expr]:
        """Components of the contact Hamiltonian field as expressions, chart order."""
        H = self.H
        Hz = diff(H, self.z)
        Hp = [diff(H, p) for p in self.p]
        qdot = Hp
        pdot = [-diff(H, q) - as_expr(p) * Hz for q, p in zip(self.q, self.p)]
        zdot = sum((as_expr(p) * d for p, d in zip(self.p, Hp)), as_expr(0.0)) - H
        return qdot + pdot + [zdot]

    @cached_property
    def _compiled(self):
        return compile_exprs(self.rhs_exprs, self.chart + self.params)

    @cached_property
    def _compiled_energy(self):
        return compile_exprs([self.H, diff(self.H, self.z)], self.chart + self.params)

    def vf(self, y: Sequence[float], params: Sequence[float] = ()) -> np.ndarray:
        """Fast vector field at chart values ``y`` (compiled closed forms)."""
        return np.array(self._compiled(list(y) + list(params)))

    def energy(self, y: Sequence[float], params: Sequence[float] = ()) -> Tuple[float, float]:
        """``(H, dH/dz)`` at ``y``."""
        h, hz = self._compiled_energy(list(y) + list(params))
        return h, hz


def _bind(sys_names: Sequence[str], point: Mapping[str, float]) -> Dict[str, float]:
    missing = [n for n in sys_names if n not in point]
    if missing:
        raise KeyError(f"point does not bind {missing}")
    return {n: float(point[n]) for n in point}


def contact_vf(sys: ContactSystem, point: Mapping[str, float]) -> np.ndarray:
    """Darboux components of the contact Hamiltonian vector field, by forward-mode jets."""
    pt = _bind(sys.chart, point)
    j = eval_jet(sys.H, pt, sys.chart, 1)
    n = sys.n
    Hq, Hp, Hz = j.grad[:n], j.grad[n: 2 * n], j.grad[2 * n]
    p = np.array([pt[name] for name in sys.p])
    return np.concatenate([Hp, -Hq - p * Hz, [p @ Hp - j.value]])


def reeb(sys: ContactSystem) -> np.ndarray:
    r = np.zeros(2 * sys.n + 1)
    r[-1] = 1.0
    return r


def eta_covector(sys: ContactSystem, point: Mapping[str, float]) -> np.ndarray:
    """Components of ``dz - p dq`` in chart order."""
    p = np.array([float(point[name]) for name in sys.p])
    return np.concatenate([-p, np.zeros(sys.n), [1.0]])


def d_eta_matrix(n: int) -> np.ndarray:
    """Matrix of ``d eta = dq^i ^ dp_i`` (antisymmetric), chart order."""
    w = np.zeros((2 * n + 1, 2 * n + 1))
    for i in range(n):
        w[i, n + i] = 1.0
        w[n + i, i] = -1.0
    return w


def contact_vf_jacobian(sys: ContactSystem, point: Mapping[str, float]) -> Tuple[np.ndarray, np.ndarray]:
    """``(X, dX)`` with ``dX[k, j] = d X^k / d y^j`` from exact second derivatives of H."""
    pt = _bind(sys.chart, point)
    n, dim = sys.n, 2 * sys.n + 1
    j = eval_jet(sys.H, pt, sys.chart, 2)
    g, hs = j.grad, j.hess
    p = np.array([pt[name] for name in sys.p])
    Hq, Hp, Hz = g[:n], g[n: 2 * n], g[2 * n]
    X = np.concatenate([Hp, -Hq - p * Hz, [p @ Hp - j.value]])
    J = np.zeros((dim, dim))
    J[:n] = hs[n: 2 * n]
    for i in range(n):
        J[n + i] = -hs[i] - p[i] * hs[2 * n]
        J[n + i, n + i] -= Hz
    J[2 * n] = p @ hs[n: 2 * n] - g
    J[2 * n, n: 2 * n] += Hp
    return X, J


def check_contact_identities(sys: ContactSystem, point: Mapping[str, float]) -> Tuple[float, float]:
    """Residuals of ``eta(X_H) = -H`` and ``L_X eta = -R(H) eta``."""
    pt = _bind(sys.chart, point)
    X, J = contact_vf_jacobian(sys, pt)
    H = eval_jet(sys.H, pt).value
    eta = eta_covector(sys, pt)
    res_eta = abs(eta @ X + H)
    n = sys.n
    # (L_X eta)_j = X^k d_k eta_j + eta_k d_j X^k; only d_{p_i} eta_{q_i} = -1 is nonzero
    lie = J.T @ eta
    lie[:n] -= X[n: 2 * n]
    Rh = eval_jet(sys.H, pt, (sys.z,)).grad[0]
    res_lie = float(np.max(np.abs(lie + Rh * eta)))
    return float(res_eta), res_lie


def contact_flow(
    sys: ContactSystem,
    y0: Sequence[float],
    span: Tuple[float, float],
    config: Optional[IntegratorConfig] = None,
    params: Sequence[float] = (),
) -> Trajectory:
    """Integrate the contact field; diagnostics carry H and dH/dz per sample."""
    params = list(params)
    traj = integrate(lambda t, y: sys.vf(y, params), y0, span, config, sys.chart)
    hv = np.array([sys.energy(y, params) for y in traj.samples])
    return traj.with_diagnostics(H=hv[:, 0], H_z=hv[:, 1])


def dissipation_residuals(sys: ContactSystem, traj: Trajectory, params: Sequence[float] = ()) -> np.ndarray:
    """Scaled residual ``|dH/dt + H H_z| / (1 + |H|)`` per sample.

    ``dH/dt`` is the gradient of H contracted with the derivative the
    integrator stored for that sample.
    """
    if traj.derivs is None:
        raise ValueError("trajectory has no stored derivatives")
    grads = compile_exprs([diff(sys.H, c) for c in sys.chart], sys.chart + tuple(sys.params))
    out = np.empty(len(traj))
    for i, (y, f) in enumerate(zip(traj.samples, traj.derivs)):
        vals = list(y) + list(params)
        h, hz = sys.energy(y, params)
        dHdt = float(np.dot(grads(vals), f))
        out[i] = abs(dHdt + h * hz) / (1 + abs(h))
    return out


# ---------------------------------------------------------------- one-forms


def _wedge(a: Dict[tuple, float], b: Dict[tuple, float]) -> Dict[tuple, float]:
    out: Dict[tuple, float] = {}
    for ia, ca in a.items():
        for ib, cb in b.items():
            idx = ia + ib
            if len(set(idx)) < len(idx):
                continue
            # sign of the permutation sorting idx
            perm = sorted(range(len(idx)), key=idx.__getitem__)
            sign = 1
            seen = [False] * len(perm)
            for s in range(len(perm)):
                if seen[s]:
                    continue
                j, length = s, 0
                while not seen[j]:
                    seen[j] = True
                    j = perm[j]
                    length += 1
                if length % 2 == 0:
                    sign = -sign
            key = tuple(sorted(idx))
            out[key] = out.get(key, 0.0) + sign * ca * cb
    return out


@dataclass(frozen=True)
class OneFormClass:
    klass: int
    r: int
    rank_d_eta: int

    def __int__(self) -> int:
        return self.klass


def classify_one_form(
    coeffs: Sequence,
    chart: Sequence[str],
    point: Mapping[str, float],
    threshold: float = 1e-10,
) -> OneFormClass:
    """Class ``2r+1`` of ``eta = coeffs_i d(chart_i)``: largest r with ``eta ^ (d eta)^r != 0``.

    Also returns the rank of ``d eta`` at the point, which separates the
    cases the class alone does not.
    """
    chart = tuple(chart)
    dim = len(chart)
    if dim > 7:
        raise ValueError(f"dimension {dim} too large for explicit wedge expansion (max 7)")
    if len(coeffs) != dim:
        raise ValueError("one coefficient per chart name is required")
    exprs = [as_expr(c) for c in coeffs]
    pt = dict(point)
    vals, grads = [], []
    for e in exprs:
        j = eval_jet(e, pt, chart, 1)
        vals.append(j.value)
        grads.append(j.grad)
    omega = np.array(vals)
    if np.max(np.abs(omega)) <= threshold:
        raise ValueError("the one-form vanishes at this point; its class is not defined there")
    G = np.array(grads)  # G[i, j] = d_j omega_i
    D = G.T - G  # d eta = sum_{i<j} (d_i omega_j - d_j omega_i) dx^i ^ dx^j
    eta = {(i,): omega[i] for i in range(dim) if omega[i] != 0.0}
    d_eta = {(i, j): D[i, j] for i in range(dim) for j in range(i + 1, dim) if D[i, j] != 0.0}
    r = 0
    current = eta
    while True:
        nxt = _wedge(current, d_eta)
        if not nxt or max(abs(v) for v in nxt.values()) <= threshold:
            break
        r += 1
        current = nxt
    rank = int(np.linalg.matrix_rank(D, tol=threshold)) if dim else 0
    return OneFormClass(2 * r + 1, r, rank)


# ------------------------------------------------- presymplectic control systems


@dataclass(frozen=True)
class PresymplecticControlSystem:
    """``(T*M x U, omega, H)`` with ``omega = dx^i ^ dp_i`` pulled back; kernel = control directions.

    ``base`` lists the m positions followed by their m momenta.
    """

    base: Tuple[str, ...]
    controls: Tuple[str, ...]
    H: Expr
    params: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(self.base))
        object.__setattr__(self, "controls", tuple(self.controls))
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "H", as_expr(self.H))
        if len(self.base) % 2:
            raise ValueError("base chart must have even dimension 2m")
        names = self.base + self.controls + self.params
        if len(set(names)) != len(names):
            raise ValueError("duplicate names in presymplectic chart")
        stray = [v for v in self.H.vars if v not in names]
        if stray:
            raise ValueError(f"H references undeclared names: {stray}")

    @property
    def m(self) -> int:
        return len(self.base) // 2

    @property
    def positions(self) -> Tuple[str, ...]:
        return self.base[: self.m]

    @property
    def momenta(self) -> Tuple[str, ...]:
        return self.base[self.m:]

    @property
    def names(self) -> Tuple[str, ...]:
        return self.base + self.controls

    def kernel_directions(self) -> List[str]:
        return list(self.controls)


def poisson_along(sys: PresymplecticControlSystem, f: Expr) -> Expr:
    """Derivative of ``f`` along the Hamiltonian field of H on the base (control rates excluded)."""
    out = as_expr(0.0)
    for x, p in zip(sys.positions, sys.momenta):
        fx, fp = diff(f, x), diff(f, p)
        if not fx.is_zero:
            out = out + fx * diff(sys.H, p)
        if not fp.is_zero:
            out = out - fp * diff(sys.H, x)
    return out


def symplectic_vf(sys: PresymplecticControlSystem, point: Mapping[str, float]) -> np.ndarray:
    """Base components ``(x', p') = (H_p, -H_x)`` at a point binding base and controls."""
    j = eval_jet(sys.H, dict(point), sys.base, 1)
    m = sys.m
    return np.concatenate([j.grad[m:], -j.grad[:m]])


@dataclass
class ConstraintSet:
    """Constraint levels with provenance tags; ``closed_at`` is the level where the algorithm stopped."""

    levels: List[Tuple[int, List[Tuple[Expr, str]]]] = field(default_factory=list)
    closed_at: Optional[int] = None
    control_solvable: List[Tuple[int, str]] = field(default_factory=list)
    message: str = ""

    @property
    def closed(self) -> bool:
        return self.closed_at is not None

    def level(self, r: int) -> List[Expr]:
        for k, items in self.levels:
            if k == r:
                return [e for e, _ in items]
        raise KeyError(r)

    def all(self) -> List[Tuple[Expr, str]]:
        return [item for _, items in self.levels for item in items]

    def to_dict(self) -> dict:
        return {
            "closed": self.closed,
            "closed_at": self.closed_at,
            "message": self.message,
            "levels": [
                {"level": k, "constraints": [{"expr": str(e), "tag": t} for e, t in items]}
                for k, items in self.levels
            ],
            "control_solvable": [{"level": k, "tag": t} for k, t in self.control_solvable],
        }


def _sample_points(names: Sequence[str], count: int, seed: int, box: float) -> List[Dict[str, float]]:
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(count):
        # keep away from zero so generic rank is observed
        mag = rng.uniform(0.3, box, size=len(names))
        sign = rng.choice([-1.0, 1.0], size=len(names))
        pts.append(dict(zip(names, (mag * sign).tolist())))
    return pts


def _jac_rank(exprs: Sequence[Expr], names: Sequence[str], points, tol: float) -> int:
    if not exprs:
        return 0
    best = 0
    for pt in points:
        try:
            J = np.array([eval_jet(e, pt, names).grad for e in exprs])
        except ArithmeticError:
            continue
        best = max(best, int(np.linalg.matrix_rank(J, tol=tol)))
    return best


def compatibility_constraints(
    sys: PresymplecticControlSystem,
    depth: int = 3,
    samples: int = 8,
    seed: int = 0,
    box: float = 2.0,
    tol: float = 1e-10,
) -> ConstraintSet:
    """Constraint algorithm for a control-kernel presymplectic system.

    Level 0 holds ``dH/du^a``. A row whose control block ``d phi/du`` has full
    row rank fixes the kernel rates and is marked control-solvable; the other
    rows are differentiated along the Hamiltonian field to form the next level.
    The algorithm closes when nothing is left to propagate or when the new level
    does not raise the rank of the stacked constraint Jacobian at sample points.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    names = sys.names + sys.params
    points = _sample_points(names, samples, seed, box)
    out = ConstraintSet()
    level0 = [(diff(sys.H, u), f"dH/d{u}") for u in sys.controls]
    out.levels.append((0, level0))
    if all(e.is_zero for e, _ in level0):
        out.closed_at = 0
        out.message = "H does not depend on the controls; level 0 is identically zero"
        return out
    stacked = [e for e, _ in level0 if not e.is_zero]
    current = level0
    for r in range(0, depth + 1):
        live = [(e, t) for e, t in current if not e.is_zero]
        control_rows = [e for e, _ in live if any(not diff(e, u).is_zero for u in sys.controls)]
        block_rank = _jac_rank(control_rows, sys.controls, points, tol) if control_rows else 0
        propagate = []
        for e, t in live:
            if any(not diff(e, u).is_zero for u in sys.controls):
                out.control_solvable.append((r, t))
            else:
                propagate.append((e, t))
        if block_rank < len(control_rows):
            # dependent control rows: their combinations without control content must propagate
            out.message = f"control block rank deficient at level {r}"
        if not propagate and block_rank == len(control_rows):
            out.closed_at = r
            out.message = out.message or f"closed at level {r}: kernel rates determined"
            return out
        if r == depth:
            break
        nxt = [(poisson_along(sys, e), f"L_X({t})") for e, t in propagate]
        before = _jac_rank(stacked, names, points, tol)
        stacked = stacked + [e for e, _ in nxt if not e.is_zero]
        after = _jac_rank(stacked, names, points, tol)
        out.levels.append((r + 1, nxt))
        if after == before:
            out.closed_at = r + 1
            out.message = f"closed at level {r + 1}: constraint rank stabilised at {after}"
            return out
        current = nxt
    out.message = f"depth {depth} exceeded without closure"
    return out


def control_hessian(sys: PresymplecticControlSystem, point: Mapping[str, float]) -> np.ndarray:
    k = len(sys.controls)
    if k == 0:
        return np.zeros((0, 0))
    return eval_jet(sys.H, dict(point), sys.controls, 2).hess


def regularity_test(sys: PresymplecticControlSystem, point: Mapping[str, float], cond_max: float = 1e12) -> bool:
    """True iff ``d^2H/du^a du^b`` is invertible at the point (condition number at most ``cond_max``)."""
    W = control_hessian(sys, point)
    if W.size == 0:
        return True
    if not np.any(W):
        return False
    return bool(np.linalg.cond(W) <= cond_max)


__all__ = [
    "ConstraintSet", "ContactSystem", "OneFormClass", "PresymplecticControlSystem",
    "check_contact_identities", "classify_one_form", "compatibility_constraints", "contact_flow",
    "contact_vf", "contact_vf_jacobian", "control_hessian", "d_eta_matrix", "darboux_chart",
    "dissipation_residuals", "eta_covector", "poisson_along", "reeb", "regularity_test",
    "symplectic_vf",
]
