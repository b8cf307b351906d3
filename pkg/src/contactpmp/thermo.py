"""Port-thermodynamic systems in the entropy representation.

The thermodynamic phase space carries ``eta = dS - p_i dq^i``, so the entropy
``S`` is the contact coordinate. This module covers homogenization between the
symplectic and contact pictures, controlled contact dynamics on a Legendrian
state submanifold, the lifted optimal-control Hamiltonian and the gas-piston
damper example.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import qmc

from .expr import Expr, as_expr, compile_exprs, diff, eval_jet, substitute, var
from .geometry import ContactSystem, contact_vf, darboux_chart
from .integrate import IntegratorConfig, Trajectory, integrate


class HomogeneityError(ValueError):
    """The Hamiltonian is not homogeneous of degree one in the momenta."""


class SingularPointError(ArithmeticError):
    """The control cannot be recovered from the constraint at this point."""


# ---------------------------------------------------------------- homogenization


@dataclass(frozen=True)
class HomogeneousChart:
    """Names on ``T*(Q x R)``: positions ``q``, extra position ``z``, momenta ``P`` and ``P_z``."""

    q: Tuple[str, ...]
    z: str
    P: Tuple[str, ...]
    Pz: str

    @classmethod
    def standard(cls, n: int) -> "HomogeneousChart":
        c = darboux_chart(n)
        P = ("P",) if n == 1 else tuple(f"P{i}" for i in range(1, n + 1))
        return cls(c[:n], c[-1], P, "P_z")

    @property
    def n(self) -> int:
        return len(self.q)

    @property
    def names(self) -> Tuple[str, ...]:
        return self.q + (self.z,) + self.P + (self.Pz,)

    @property
    def contact_chart(self) -> Tuple[str, ...]:
        return self.q + _contact_momenta(self.n) + (self.z,)


def _contact_momenta(n: int) -> Tuple[str, ...]:
    return ("p",) if n == 1 else tuple(f"p{i}" for i in range(1, n + 1))


def dehomogenized(H, chart: HomogeneousChart) -> ContactSystem:
    """``h(q, p, z) = H(q, z, p, -1)`` as a contact system on ``(q, p, z)``."""
    cc = chart.contact_chart
    p = cc[chart.n: 2 * chart.n]
    mapping = {P: var(pi) for P, pi in zip(chart.P, p)}
    mapping[chart.Pz] = as_expr(-1.0)
    return ContactSystem(chart.n, cc, substitute(as_expr(H), mapping))


def check_homogeneity(H, chart: HomogeneousChart, point: Mapping[str, float], rtol: float = 1e-10) -> float:
    """Max relative defect of ``H(q, z, l P, l P_z) = l H`` for ``l`` in ``{2, -3}``; raises on violation."""
    H = as_expr(H)
    base = eval_jet(H, dict(point)).value
    worst = 0.0
    for lam in (2.0, -3.0):
        pt = dict(point)
        for name in chart.P + (chart.Pz,):
            pt[name] = lam * pt[name]
        val = eval_jet(H, pt).value
        worst = max(worst, abs(val - lam * base) / max(1.0, abs(lam * base)))
    if worst > rtol:
        raise HomogeneityError(f"H is not homogeneous of degree 1 in the momenta (defect {worst:.3g})")
    return worst


def phi_map(chart: HomogeneousChart, point: Mapping[str, float]) -> Dict[str, float]:
    """``(q, z, P, P_z) -> (q, p = -P/P_z, z)``."""
    Pz = float(point[chart.Pz])
    if abs(Pz) <= 1e-12:
        raise ValueError("P_z vanishes; the point lies at infinity of the projective bundle")
    cc = chart.contact_chart
    out = {q: float(point[q]) for q in chart.q}
    out.update({p: -float(point[P]) / Pz for p, P in zip(cc[chart.n: 2 * chart.n], chart.P)})
    out[chart.z] = float(point[chart.z])
    return out


def dehomogenize(H, chart: HomogeneousChart, point: Mapping[str, float]) -> Tuple[float, Dict[str, float]]:
    """Value of ``h`` at the mapped point, and the mapped point; homogeneity is checked at ``point``."""
    mapped = phi_map(chart, point)
    check_homogeneity(H, chart, point)
    h = dehomogenized(H, chart)
    return eval_jet(h.H, mapped).value, mapped


def symplectic_field(H, chart: HomogeneousChart, point: Mapping[str, float]) -> np.ndarray:
    """Hamiltonian field for ``dq ^ dP + dz ^ dP_z``, ordered as ``chart.names``."""
    n = chart.n
    g = eval_jet(as_expr(H), dict(point), chart.names, 1).grad
    Hq, Hz, HP, HPz = g[:n], g[n], g[n + 1: 2 * n + 1], g[2 * n + 1]
    return np.concatenate([HP, [HPz], -Hq, [-Hz]])


def homogeneous_flow_projects(H, chart: HomogeneousChart, point: Mapping[str, float]) -> float:
    """Max-norm of ``dPhi(X_H) - X_h`` at ``Phi(point)``."""
    n = chart.n
    mapped = phi_map(chart, point)
    X = symplectic_field(H, chart, point)
    qdot, zdot, Pdot, Pzdot = X[:n], X[n], X[n + 1: 2 * n + 1], X[2 * n + 1]
    P = np.array([float(point[name]) for name in chart.P])
    Pz = float(point[chart.Pz])
    pdot = -Pdot / Pz + P * Pzdot / Pz ** 2
    pushed = np.concatenate([qdot, pdot, [zdot]])
    return float(np.max(np.abs(pushed - contact_vf(dehomogenized(H, chart), mapped))))


# ---------------------------------------------------------------- port-thermodynamic systems


@dataclass
class ThermoReport:
    points: int
    max_state_residual: float
    max_h: float
    max_h_parts: List[float]
    min_entropy_rate: float
    min_dh_dS: float
    min_temperature: float = math.inf

    @property
    def vanishing_ok(self) -> bool:
        return self.max_h <= 1e-10 and all(v <= 1e-10 for v in self.max_h_parts)

    @property
    def second_law_ok(self) -> bool:
        return self.min_entropy_rate >= -1e-12

    def to_dict(self) -> dict:
        return {
            "points": self.points,
            "max_state_residual": self.max_state_residual,
            "max_h": self.max_h,
            "max_h_parts": self.max_h_parts,
            "min_entropy_rate": self.min_entropy_rate,
            "min_dh_dS": self.min_dh_dS,
            "min_temperature": self.min_temperature,
            "vanishing_ok": self.vanishing_ok,
            "second_law_ok": self.second_law_ok,
        }


@dataclass(frozen=True)
class PortThermoSystem:
    """Legendrian state equations plus ``h = h_internal + sum_a h_control[a] u^a`` on ``(q, p, S)``.

    ``parametrization`` maps every chart name to an expression in the
    ``free`` names; sampling it over ``box`` produces points of the
    Legendrian submanifold.
    """

    n: int
    chart: Tuple[str, ...]
    legendrian: Tuple[Expr, ...]
    h_internal: Expr
    h_control: Tuple[Expr, ...]
    controls: Tuple[str, ...]
    free: Tuple[str, ...]
    parametrization: Mapping[str, Expr]
    box: Mapping[str, Tuple[float, float]]

    def __post_init__(self):
        object.__setattr__(self, "chart", tuple(self.chart))
        object.__setattr__(self, "legendrian", tuple(as_expr(e) for e in self.legendrian))
        object.__setattr__(self, "h_internal", as_expr(self.h_internal))
        object.__setattr__(self, "h_control", tuple(as_expr(e) for e in self.h_control))
        object.__setattr__(self, "controls", tuple(self.controls))
        object.__setattr__(self, "parametrization", {k: as_expr(v) for k, v in self.parametrization.items()})
        if len(self.h_control) != len(self.controls):
            raise ValueError("one control Hamiltonian per control is required")
        if set(self.parametrization) != set(self.chart):
            raise ValueError("the parametrization must cover every chart name")
        if len(self.legendrian) != self.n + 1:
            raise ValueError(f"a Legendrian submanifold of a {2 * self.n + 1}-dimensional space needs "
                             f"{self.n + 1} state equations")
        missing = [f for f in self.free if f not in self.box]
        if missing:
            raise ValueError(f"box lacks ranges for {missing}")

    @property
    def S(self) -> str:
        return self.chart[-1]

    @cached_property
    def h(self) -> Expr:
        h = self.h_internal
        for hc, u in zip(self.h_control, self.controls):
            h = h + hc * var(u)
        return h

    @cached_property
    def contact(self) -> ContactSystem:
        return ContactSystem(self.n, self.chart, self.h, self.controls)

    @cached_property
    def entropy_rate_expr(self) -> Expr:
        """``S' = p_i dh/dp_i - h``, the last component of the contact field."""
        return self.contact.rhs_exprs[-1]

    @cached_property
    def _param(self):
        return compile_exprs([self.parametrization[c] for c in self.chart], self.free)

    def sample_legendrian(self, count: int = 50, seed: int = 0) -> np.ndarray:
        """Quasi-random (Halton) points on the Legendrian submanifold, rows over ``chart``."""
        lo = np.array([self.box[f][0] for f in self.free])
        hi = np.array([self.box[f][1] for f in self.free])
        u = qmc.Halton(len(self.free), scramble=True, seed=seed).random(count)
        return np.array([self._param(list(lo + r * (hi - lo))) for r in u])

    @cached_property
    def _checks(self):
        names = self.chart + self.controls
        return compile_exprs(
            list(self.legendrian) + [self.h_internal, *self.h_control, self.entropy_rate_expr, diff(self.h, self.S)],
            names,
        )

    def check(self, count: int = 50, seed: int = 0, controls: Optional[Sequence[float]] = None) -> ThermoReport:
        k = len(self.controls)
        rng = np.random.default_rng(seed)
        pts = self.sample_legendrian(count, seed)
        state, hmax, rate, dhdS = 0.0, 0.0, math.inf, math.inf
        parts = [0.0] * k
        for y in pts:
            u = list(controls) if controls is not None else list(rng.uniform(-1, 1, k))
            vals = self._checks(list(y) + u)
            n = self.n + 1
            state = max(state, max(abs(v) for v in vals[:n]))
            hmax = max(hmax, abs(vals[n]))
            parts = [max(p, abs(v)) for p, v in zip(parts, vals[n + 1: n + 1 + k])]
            rate = min(rate, vals[n + 1 + k])
            dhdS = min(dhdS, vals[n + 2 + k])
        return ThermoReport(count, state, hmax, parts, rate, dhdS)

    def state_residual(self, y: Sequence[float]) -> float:
        return float(max(abs(v) for v in self._checks(list(y) + [0.0] * len(self.controls))[: self.n + 1]))


def controlled_flow(
    system: PortThermoSystem,
    y0: Sequence[float],
    span: Tuple[float, float],
    u=0.0,
    config: Optional[IntegratorConfig] = None,
) -> Trajectory:
    """Integrate ``X_{h_u}`` with the control given by an expression (or constant) over the chart.

    Diagnostics: ``state_residual`` (max state-equation defect) and ``u``.
    """
    policies = [as_expr(u)] if not isinstance(u, (list, tuple)) else [as_expr(v) for v in u]
    if len(policies) != len(system.controls):
        raise ValueError("one control law per control is required")
    policy = compile_exprs(policies, system.chart)
    vf = system.contact.vf

    def rhs(t, y):
        return vf(y, policy(list(y)))

    traj = integrate(rhs, y0, span, config or IntegratorConfig("rk4", steps=1000), system.chart)
    res = np.array([system.state_residual(y) for y in traj.samples])
    U = np.array([policy(list(y)) for y in traj.samples])
    diags = {"state_residual": res}
    for j, name in enumerate(system.controls):
        diags[name] = U[:, j]
    return traj.with_diagnostics(**diags)


def entropy_monotone(traj: Trajectory, S: str = "S", tol: float = 1e-12) -> Tuple[bool, float]:
    """``(ok, largest single-step decrease)``."""
    dS = np.diff(traj.column(S))
    worst = float(max(0.0, -np.min(dS))) if len(dS) else 0.0
    return worst <= tol, worst


# ---------------------------------------------------------------- gas-piston damper

GAS_Q = ("V", "pi", "E")
GAS_P = ("p_V", "p_pi", "p_E")
GAS_CHART = GAS_Q + GAS_P + ("S",)
GAS_BOX = {"V": (0.5, 2.0), "pi": (-1.0, 1.0), "S": (-0.5, 0.5)}


def default_internal_energy(U0: float = 1.0, c: float = 1.0, r: float = 2.0 / 3.0) -> Expr:
    """``U = U0 exp(S/c) V^(-r)``: positive temperature everywhere."""
    if U0 <= 0 or c <= 0 or r <= 0:
        raise ValueError("U0, c and r must be positive")
    return as_expr(f"{U0!r}*exp(S/{c!r})*V^(-{r!r})")


@dataclass(frozen=True)
class GasPistonParams:
    """Piston mass ``m``, damping ``d`` and internal energy ``U(V, S)``.

    Negative ``d`` is accepted so that the second-law check can be shown to
    fail; ``premise_violations`` lists it.
    """

    m: float = 1.0
    d: float = 0.5
    U: Expr = field(default_factory=default_internal_energy)
    box: Mapping[str, Tuple[float, float]] = field(default_factory=lambda: dict(GAS_BOX))

    def __post_init__(self):
        object.__setattr__(self, "U", as_expr(self.U))
        if not self.m > 0:
            raise ValueError("piston mass m must be positive")
        stray = [v for v in self.U.vars if v not in ("V", "S")]
        if stray:
            raise ValueError(f"U may only depend on V and S, found {stray}")

    def premise_violations(self) -> List[str]:
        return ["damping d < 0"] if self.d < 0 else []


def _U_derivatives(U: Expr) -> Dict[str, Expr]:
    out = {"U": U}
    for key in ("V", "S", "VV", "VS", "SS", "VVV", "VVS", "VSS", "SSS"):
        e = U
        for ch in key:
            e = diff(e, ch)
        out["U_" + key] = e
    return out


def gas_piston_h(params: GasPistonParams) -> Tuple[Expr, Expr]:
    """``(h_internal, h_control)`` transcribed from the closed form of the example."""
    m, d = params.m, params.d
    D = _U_derivatives(params.U)
    pi, pV, ppi, pE = var("pi"), var("p_V"), var("p_pi"), var("p_E")
    h_int = pV * pi / m + ppi * (-D["U_V"] - d * pi / m) - d * (pi / m) ** 2 / D["U_S"]
    h_ctl = ppi + pE * pi / m
    return h_int, h_ctl


def gas_piston_system(params: GasPistonParams, count: int = 50, seed: int = 0) -> PortThermoSystem:
    """The gas-piston port-thermodynamic system; checks temperature and vanishing of h on the states."""
    m = params.m
    D = _U_derivatives(params.U)
    h_int, h_ctl = gas_piston_h(params)
    V, pi, E, S = var("V"), var("pi"), var("E"), var("S")
    pV, ppi, pE = var("p_V"), var("p_pi"), var("p_E")
    legendrian = (
        E - pi ** 2 / (2 * m) - D["U"],
        pV + pE * D["U_V"],
        ppi + pE * pi / m,
        pE - 1 / D["U_S"],
    )
    param = {
        "V": V, "pi": pi, "S": S,
        "E": pi ** 2 / (2 * m) + D["U"],
        "p_E": 1 / D["U_S"],
        "p_V": -D["U_V"] / D["U_S"],
        "p_pi": -(pi / m) / D["U_S"],
    }
    system = GasPistonSystem(3, GAS_CHART, legendrian, h_int, (h_ctl,), ("u",), ("V", "pi", "S"), param,
                             dict(params.box), params)
    report = system.check(count, seed)
    if report.min_temperature <= 0:
        raise ValueError("dU/dS must be positive on the sampled domain (positive temperature)")
    if not report.vanishing_ok or report.max_state_residual > 1e-10:
        raise ValueError(f"h does not vanish on the state submanifold (max |h| = {report.max_h:.3g})")
    return system


@dataclass(frozen=True)
class GasPistonSystem(PortThermoSystem):
    params: Optional[GasPistonParams] = None

    @cached_property
    def _temperature(self):
        return compile_exprs([diff(self.params.U, "S")], self.chart)

    def check(self, count: int = 50, seed: int = 0, controls=None) -> ThermoReport:
        rep = super().check(count, seed, controls)
        rep.min_temperature = float(min(self._temperature(list(y))[0] for y in self.sample_legendrian(count, seed)))
        return rep


def gas_piston_point(system: PortThermoSystem, V: float, pi: float, S: float) -> np.ndarray:
    """The state on the Legendrian submanifold with the given free coordinates."""
    return np.array(system._param([V, pi, S]))


# ---------------------------------------------------------------- lifted control Hamiltonian


_MAX_DEPTH = 4


def lifted_name(name: str) -> str:
    return "Pi_" + name


@dataclass(frozen=True)
class LiftedThermo:
    """Contact system on ``(q, p, Pi_q, Pi_p, S)`` whose normal solutions are the optimal processes."""

    base: PortThermoSystem
    H: Expr
    contact: ContactSystem

    @property
    def chart(self) -> Tuple[str, ...]:
        return self.contact.chart

    @cached_property
    def constraint(self) -> Expr:
        (u,) = self.base.controls
        return diff(self.H, u)

    def lie(self, f: Expr) -> Expr:
        """Derivative of ``f`` along the lifted contact field (still a function of ``u``)."""
        out = as_expr(0.0)
        for c, X in zip(self.chart, self.contact.rhs_exprs):
            out = out + diff(f, c) * X
        return out

    @cached_property
    def chain(self) -> List[Expr]:
        """``dH/du`` and its successive derivatives along the flow, up to the first one involving ``u``.

        All but the last must vanish along a solution; the last is affine in
        ``u`` and fixes it.
        """
        (u,) = self.base.controls
        out = [self.constraint]
        rng = np.random.default_rng(0)
        names = self.chart + (u,)
        for _ in range(_MAX_DEPTH):
            du = diff(out[-1], u)
            f = compile_exprs([du], names)
            if not du.is_zero and any(abs(f(list(rng.uniform(0.2, 1.5, len(names))))[0]) > 1e-12 for _ in range(8)):
                return out
            out.append(self.lie(out[-1]))
        raise SingularPointError(f"control does not appear within {_MAX_DEPTH} derivatives of dH/du")

    @cached_property
    def _chain(self):
        (u,) = self.base.controls
        return compile_exprs(self.chain, self.chart + (u,))

    def control(self, y: Sequence[float]) -> float:
        """``u`` from the first derivative of ``dH/du`` that involves it; ``H`` is affine in ``u``."""
        A = self._chain(list(y) + [0.0])[-1]
        B = self._chain(list(y) + [1.0])[-1] - A
        if abs(B) <= 1e-12 * (1.0 + abs(A)):
            raise SingularPointError("control cannot be recovered: the tangency condition does not involve u here")
        return -A / B

    def constraint_values(self, y: Sequence[float]) -> np.ndarray:
        return np.array(self._chain(list(y) + [0.0])[:-1])

    def project_onto_constraints(self, y: Sequence[float], names: Sequence[str], tol: float = 1e-13) -> np.ndarray:
        """Newton on the coordinates ``names`` until every constraint of the chain vanishes."""
        y = np.array(y, dtype=float)
        k = len(self.chain) - 1
        if len(names) != k:
            raise ValueError(f"{k} coordinates are needed to satisfy {k} constraints")
        idx = [self.chart.index(n) for n in names]
        grads = compile_exprs([diff(c, n) for c in self.chain[:-1] for n in names], self.chart + self.base.controls)
        for _ in range(50):
            r = self.constraint_values(y)
            if np.max(np.abs(r)) <= tol:
                return y
            J = np.array(grads(list(y) + [0.0])).reshape(k, k)
            if np.linalg.cond(J) > 1e12:
                raise SingularPointError(f"constraints cannot be solved for {list(names)} here")
            y[idx] -= np.linalg.solve(J, r)
        raise SingularPointError("projection onto the constraints did not converge")

    def flow(self, y0: Sequence[float], span: Tuple[float, float], config: Optional[IntegratorConfig] = None
             ) -> Trajectory:
        """Integrate with ``u`` eliminated; diagnostics ``u``, ``constraint`` and ``state_residual``."""

        def rhs(t, y):
            return self.contact.vf(y, [self.control(y)])

        traj = integrate(rhs, y0, span, config or IntegratorConfig("rk4", steps=1000), self.chart)
        base_cols = [traj.index(c) for c in self.base.chart]
        return traj.with_diagnostics(**{
            "u": np.array([self.control(y) for y in traj.samples]),
            "constraint": np.array([np.max(np.abs(self.constraint_values(y))) for y in traj.samples]),
            "state_residual": np.array([self.base.state_residual(y[base_cols]) for y in traj.samples]),
        })


def lifted_hamiltonian(system: PortThermoSystem) -> LiftedThermo:
    """Apply the lift formula ``H = Pi_q h_p - Pi_p h_q - Pi_p p h_S - p h_p + h`` to ``h_u``."""
    n = system.n
    q, p, S = system.chart[:n], system.chart[n: 2 * n], system.S
    h = system.h
    H = h
    for qi, pi in zip(q, p):
        hp, hq = diff(h, pi), diff(h, qi)
        H = H + var(lifted_name(qi)) * hp - var(lifted_name(pi)) * hq
        H = H - var(lifted_name(pi)) * var(pi) * diff(h, S) - var(pi) * hp
    chart = q + p + tuple(lifted_name(c) for c in q + p) + (S,)
    return LiftedThermo(system, H, ContactSystem(2 * n, chart, H, system.controls))


def gas_piston_control_hamiltonian(params: GasPistonParams) -> LiftedThermo:
    return lifted_hamiltonian(gas_piston_system(params))


# Printed closed forms for the gas piston, kept as plain functions of numbers so that the
# check compares two constructions that share nothing but the values of U and its derivatives.


def _gas_values(lifted: LiftedThermo, point: Mapping[str, float]) -> Dict[str, float]:
    params = lifted.base.params
    vals = {k: eval_jet(e, dict(point)).value for k, e in _U_derivatives(params.U).items()}
    vals.update(point)
    vals["m"], vals["d"] = params.m, params.d
    return vals


def printed_alpha(v: Mapping[str, float]) -> Dict[str, float]:
    """The fifteen terms of the printed drift coefficient, keyed by their momentum factor."""
    m2 = v["m"] ** 2
    pi, d = v["pi"], v["d"]
    pE, ppi, pV = v["p_E"], v["p_pi"], v["p_V"]
    PpE, Pppi, PpV, Ppi = v["Pi_p_E"], v["Pi_p_pi"], v["Pi_p_V"], v["Pi_pi"]
    US, USS, USSS = v["U_S"], v["U_SS"], v["U_SSS"]
    UVS, UVSS, UVVS = v["U_VS"], v["U_VSS"], v["U_VVS"]
    k2 = pi ** 2 * d / (m2 * US ** 2)
    k3 = pi ** 2 * d / (m2 * US ** 3)
    return {
        "Pi_p_E": -pE * ppi * PpE * UVSS - 2 * k3 * pE * PpE * USS ** 2 + k2 * pE * PpE * USSS,
        "Pi_p_pi": (-ppi ** 2 * Pppi * UVSS - 2 * k3 * ppi * Pppi * USS ** 2 + k2 * ppi * Pppi * USSS
                    + 2 * pi * d * Pppi * USS / (m2 * US ** 2)),
        "Pi_p_V": (-ppi * pV * PpV * UVSS - ppi * PpV * UVVS - 2 * k3 * pV * PpV * USS ** 2
                   + k2 * pV * PpV * USSS + k2 * PpV * UVSS - 2 * k3 * PpV * UVS * USS),
        "Pi_pi": Ppi * UVS,
        "1": -k2 * USS,
    }


def printed_H_terms(v: Mapping[str, float]) -> Dict[str, float]:
    """Printed lifted Hamiltonian split by momentum; the printed P_{p_x} is the factor of x'."""
    m, d, u = v["m"], v["d"], v["u"]
    pi, US = v["pi"], v["U_S"]
    return {
        "Pi_pi": -(pi * d / m - u + v["U_V"]) * v["Pi_pi"],
        "Pi_E": pi * v["Pi_E"] * u / m,
        "Pi_V": pi * v["Pi_V"] / m,
        "Pi_p_pi": -(d * v["p_pi"] / m - v["p_E"] * u / m - v["p_V"] / m + 2 * pi * d / (m ** 2 * US)) * v["Pi_p_pi"],
        "Pi_p_V": -(v["p_pi"] * v["U_VV"] - pi ** 2 * d * v["U_VS"] / (m ** 2 * US ** 2)) * v["Pi_p_V"],
        "Pi_p_E": 0.0,
        "1": -pi ** 2 * d / (m ** 2 * US),
    }


def printed_constraint(v: Mapping[str, float]) -> float:
    """Printed control constraint, momenta renamed to the standard pairing as in ``printed_H_terms``."""
    return v["p_E"] * v["Pi_p_pi"] / v["m"] + v["pi"] * v["Pi_E"] / v["m"] + v["Pi_pi"]


def _generated_terms(lifted: LiftedThermo, point: Mapping[str, float]) -> Dict[str, float]:
    """Generated H split by momentum: coefficient times momentum, plus the momentum-free part."""
    out = {}
    zero = dict(point)
    for name in lifted.chart:
        if name.startswith("Pi_"):
            zero[name] = 0.0
    out["1"] = eval_jet(lifted.H, zero).value
    for name in lifted.chart:
        if name.startswith("Pi_"):
            coeff = eval_jet(diff(lifted.H, name), dict(point)).value
            out[name] = coeff * float(point[name])
    return out


def generated_alpha(lifted: LiftedThermo, point: Mapping[str, float]) -> float:
    """``alpha = -dH/dS``, the drift coefficient of every momentum equation."""
    return -eval_jet(diff(lifted.H, lifted.base.S), dict(point)).value


@dataclass
class TermCheck:
    points: int
    term_residuals: Dict[str, float]
    alpha_residuals: Dict[str, float]
    constraint_residual: float
    printed_constraint_residual: float
    printed_constraint_self_residual: float
    tol: float = 1e-9

    @property
    def matching_terms(self) -> List[str]:
        return [k for k, v in self.term_residuals.items() if v <= self.tol]

    @property
    def discrepant_terms(self) -> List[str]:
        return [k for k, v in self.term_residuals.items() if v > self.tol]

    @property
    def alpha_ok(self) -> bool:
        return max(self.alpha_residuals.values()) <= self.tol

    def to_dict(self) -> dict:
        return {
            "points": self.points,
            "term_residuals": self.term_residuals,
            "matching_terms": self.matching_terms,
            "discrepant_terms": self.discrepant_terms,
            "alpha_residuals": self.alpha_residuals,
            "alpha_ok": self.alpha_ok,
            "constraint_residual": self.constraint_residual,
            "printed_constraint_residual": self.printed_constraint_residual,
            "printed_constraint_self_residual": self.printed_constraint_self_residual,
        }


def lifted_term_check(lifted: LiftedThermo, count: int = 50, seed: int = 0, tol: float = 1e-9) -> TermCheck:
    """Compare the formula-generated lifted Hamiltonian with the printed closed forms.

    Points have base coordinates on the state submanifold and random lifted
    momenta and control. ``alpha_residuals`` compares the printed drift
    coefficient term group by term group (the total is keyed ``"total"``).
    """
    rng = np.random.default_rng(seed)
    base = lifted.base
    pts = base.sample_legendrian(count, seed)
    terms: Dict[str, float] = {}
    alpha: Dict[str, float] = {}
    cres = pres = pself = 0.0
    for y in pts:
        point = dict(zip(base.chart, y))
        for name in lifted.chart:
            if name.startswith("Pi_"):
                point[name] = float(rng.uniform(-1, 1))
        point["u"] = float(rng.uniform(-1, 1))
        v = _gas_values(lifted, point)
        gen = _generated_terms(lifted, point)
        for k, val in printed_H_terms(v).items():
            terms[k] = max(terms.get(k, 0.0), abs(gen[k] - val))
        pa = printed_alpha(v)
        # generated alpha grouped the same way: each momentum's share and the momentum-free part
        dHdS = diff(lifted.H, base.S)
        for k in pa:
            if k == "1":
                zero = {n: (0.0 if n.startswith("Pi_") else val) for n, val in point.items()}
                g = -eval_jet(dHdS, zero).value
            else:
                g = -eval_jet(diff(dHdS, k), point).value * point[k]
            alpha[k] = max(alpha.get(k, 0.0), abs(g - pa[k]))
        alpha["total"] = max(alpha.get("total", 0.0), abs(generated_alpha(lifted, point) - sum(pa.values())))
        # constraint: generated dH/du against its hand-derived form with the standard pairing
        m = v["m"]
        own = v["Pi_pi"] + v["pi"] * v["Pi_E"] / m - v["p_E"] * v["Pi_p_pi"] / m
        cres = max(cres, abs(eval_jet(lifted.constraint, point).value - own))
        # the printed constraint is du of the printed H (self-consistent) but differs from the generated one
        du_printed = sum(printed_H_terms({**v, "u": 1.0}).values()) - sum(printed_H_terms({**v, "u": 0.0}).values())
        pself = max(pself, abs(printed_constraint(v) - du_printed))
        pres = max(pres, abs(printed_constraint(v) - own))
    return TermCheck(count, terms, alpha, cres, pres, pself, tol)


@dataclass
class GasPistonRun:
    trajectory: Trajectory
    entropy_ok: bool
    max_entropy_decrease: float
    max_state_residual: float
    max_constraint: float
    report: ThermoReport
    terms: Optional[TermCheck] = None

    def to_dict(self) -> dict:
        out = {
            "entropy_nondecreasing": self.entropy_ok,
            "max_entropy_decrease": self.max_entropy_decrease,
            "max_state_residual": self.max_state_residual,
            "max_constraint_residual": self.max_constraint,
            "sampled_checks": self.report.to_dict(),
            "accepted_steps": len(self.trajectory) - 1,
        }
        if self.terms is not None:
            out["term_check"] = self.terms.to_dict()
        return out


def gas_piston_run(
    params: GasPistonParams,
    start: Tuple[float, float, float] = (1.0, 0.5, 0.0),
    span: Tuple[float, float] = (0.0, 5.0),
    u=0.0,
    config: Optional[IntegratorConfig] = None,
    lifted: bool = False,
    seed: int = 0,
) -> GasPistonRun:
    """Simulate from the state with free coordinates ``start = (V, pi, S)``.

    With ``lifted`` the optimal-control flow runs instead: lifted momenta start
    at fixed values with ``Pi_pi`` adjusted onto ``dH/du = 0`` and the control
    comes from the tangency condition.
    """
    system = gas_piston_system(params, seed=seed)
    report = system.check(seed=seed)
    y0 = gas_piston_point(system, *start)
    cfg = config or IntegratorConfig("rk4", steps=1000)
    terms = None
    if lifted:
        lt = lifted_hamiltonian(system)
        mom = {lifted_name(c): 0.1 * (i + 1) for i, c in enumerate(GAS_Q + GAS_P)}
        full = np.array([dict(zip(GAS_CHART, y0), **mom)[c] for c in lt.chart])
        full = lt.project_onto_constraints(full, [lifted_name(c) for c in ("pi", "p_pi", "E")][: len(lt.chain) - 1])
        traj = lt.flow(full, span, cfg)
        cmax = float(np.max(np.abs(traj.column("constraint"))))
        terms = lifted_term_check(lt, seed=seed)
    else:
        traj = controlled_flow(system, y0, span, u, cfg)
        cmax = 0.0
    ok, worst = entropy_monotone(traj)
    return GasPistonRun(traj, ok, worst, float(np.max(traj.column("state_residual"))), cmax, report, terms)


__all__ = [
    "GAS_CHART", "GasPistonParams", "GasPistonRun", "GasPistonSystem", "HomogeneityError", "HomogeneousChart", "LiftedThermo",
    "PortThermoSystem", "SingularPointError", "TermCheck", "ThermoReport", "check_homogeneity",
    "controlled_flow", "default_internal_energy", "dehomogenize", "dehomogenized", "entropy_monotone",
    "gas_piston_control_hamiltonian", "gas_piston_h", "gas_piston_point", "gas_piston_run", "gas_piston_system",
    "generated_alpha", "homogeneous_flow_projects", "lifted_hamiltonian", "lifted_name", "lifted_term_check",
    "phi_map", "printed_H_terms", "printed_alpha", "printed_constraint", "symplectic_field",
]
