"""Command-line front end: JSON problem files in, trajectory CSV and JSON reports out.

Exit codes: 0 success, 1 input error, 2 solver failure or failed check.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import jsonschema
import numpy as np

from .expr import ExprError, parse
from .geometry import ContactSystem, check_contact_identities, contact_flow, dissipation_residuals
from .herglotz_ocp import (
    HerglotzBvpConfig,
    HerglotzOcpProblem,
    conformal_residuals,
    consistency_project,
    herglotz_equation_recovery,
    pz_invariant_check,
    solve_full,
    solve_reduced,
)
from .integrate import IntegrationError, IntegratorConfig, ShootingConfig, ShootingError, Trajectory
from .lagrangian import HerglotzLagrangian, lagrangian_chart
from .ocp import BvpConfig, ControlEliminationError, OcpProblem, SingularProblemError, extend, solve_bvp
from .oracle import OracleStall, TranscriptionConfig, trajectory_gap, transcribe_classical, transcribe_herglotz
from .thermo import GAS_BOX, GasPistonParams, default_internal_energy, gas_piston_run, gas_piston_system

EXIT_OK, EXIT_INPUT, EXIT_FAILURE = 0, 1, 2

KINDS = ("ocp", "herglotz_ocp", "herglotz_lagrangian", "contact", "gas_piston")

_NUM = {"type": "number"}
_VECTOR = {"oneOf": [{"type": "array", "items": _NUM}, {"type": "object", "additionalProperties": _NUM}]}
_NAMES = {"type": "array", "items": {"type": "string", "pattern": "^[A-Za-z_][A-Za-z0-9_]*$"}, "uniqueItems": True}

SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": list(KINDS)},
        "name": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "states": _NAMES,
        "controls": _NAMES,
        "dynamics": {"type": "object", "additionalProperties": {"type": "string"}},
        "cost": {"type": "string"},
        "L": {"type": "string"},
        "H": {"type": "string"},
        "interval": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
        "boundary": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"start": _VECTOR, "end": _VECTOR},
        },
        "z_start": _NUM,
        "lambda0": _NUM,
        "sense": {"enum": ["minimize", "maximize"]},
        "m": _NUM,
        "d": _NUM,
        "U": {"type": "string"},
        "u": {"oneOf": [{"type": "string"}, _NUM]},
        "box": {
            "type": "object",
            "additionalProperties": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
        },
        "lifted": {"type": "boolean"},
        "integrator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": ["rk4", "rk45"]},
                "steps": {"type": "integer", "minimum": 1},
                "rtol": {"type": "number", "exclusiveMinimum": 0},
                "atol": {"type": "number", "exclusiveMinimum": 0},
                "max_steps": {"type": "integer", "minimum": 1},
            },
        },
        "shooting": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "restarts": {"type": "integer", "minimum": 0},
                "box": {"type": "number", "exclusiveMinimum": 0},
                "p_guess": {"type": "array", "items": _NUM},
                "u_guess": {"type": "array", "items": _NUM},
            },
        },
    },
    "allOf": [
        {"if": {"properties": {"kind": {"enum": ["ocp", "herglotz_ocp"]}}},
         "then": {"required": ["states", "controls", "dynamics", "cost", "interval", "boundary"]}},
        {"if": {"properties": {"kind": {"const": "herglotz_lagrangian"}}},
         "then": {"required": ["L", "interval", "boundary"]}},
        {"if": {"properties": {"kind": {"const": "contact"}}}, "then": {"required": ["H", "boundary"]}},
    ],
}


class InputError(ValueError):
    """Problem file or flags are invalid."""


@dataclass
class Options:
    seed: int = 0
    tol: float = 1e-8
    steps: Optional[int] = None
    depth: int = 3
    lambda0: Optional[float] = None
    N: Sequence[int] = (64,)
    samples: int = 100


@dataclass
class Outcome:
    ok: bool
    report: Dict[str, Any]
    trajectory: Optional[Trajectory] = None
    checks: List[Dict[str, Any]] = field(default_factory=list)


# ---------------------------------------------------------------- loading


def load_problem(path: str) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    validate_problem(data)
    return data


def validate_problem(data: Any) -> None:
    errors = sorted(jsonschema.Draft7Validator(SCHEMA).iter_errors(data), key=lambda e: list(e.path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.path) or "<root>"
        raise InputError(f"problem file invalid at {where}: {err.message}")
    for key in ("cost", "L", "H", "U") + (("u",) if isinstance(data.get("u"), str) else ()):
        if key in data:
            _parse_field(key, data[key])
    for name, text in data.get("dynamics", {}).items():
        _parse_field(f"dynamics/{name}", text)


def _parse_field(where: str, text: str):
    try:
        return parse(text)
    except ExprError as exc:
        raise InputError(f"expression at {where}: {exc}") from exc


def _vector(data: Dict[str, Any], key: str, names: Sequence[str], default=None) -> List[float]:
    raw = data.get("boundary", {}).get(key, default)
    if raw is None:
        raise InputError(f"boundary/{key} is required")
    if isinstance(raw, dict):
        missing = [n for n in names if n not in raw]
        extra = sorted(set(raw) - set(names))
        if missing or extra:
            raise InputError(f"boundary/{key}: missing {missing}, unknown {extra}")
        return [float(raw[n]) for n in names]
    if len(raw) != len(names):
        raise InputError(f"boundary/{key} has {len(raw)} entries for {len(names)} names")
    return [float(v) for v in raw]


def _interval(data, default=(0.0, 1.0)):
    return tuple(float(v) for v in data.get("interval", default))


def _integrator(data: Dict[str, Any], opts: Options) -> IntegratorConfig:
    spec = dict(data.get("integrator", {}))
    spec.setdefault("method", "rk4")
    if opts.steps is not None:
        spec["steps"] = opts.steps
    spec.setdefault("steps", 1000)
    return IntegratorConfig(**spec)


def _shooting(data: Dict[str, Any], opts: Options) -> ShootingConfig:
    spec = {k: v for k, v in data.get("shooting", {}).items() if k not in ("p_guess", "u_guess")}
    spec["tol"] = min(spec.get("tol", opts.tol), opts.tol)
    return ShootingConfig(seed=opts.seed, **spec)


def _guesses(data):
    s = data.get("shooting", {})
    return s.get("p_guess"), s.get("u_guess")


def _dynamics(data) -> List[str]:
    dyn = data["dynamics"]
    missing = [s for s in data["states"] if s not in dyn]
    extra = sorted(set(dyn) - set(data["states"]))
    if missing or extra:
        raise InputError(f"dynamics: missing {missing}, unknown {extra}")
    return [dyn[s] for s in data["states"]]


def build(data: Dict[str, Any]):
    """Domain object for the problem file; ``ValueError`` from constructors becomes ``InputError``."""
    kind = data["kind"]
    try:
        if kind == "ocp":
            return OcpProblem(data["states"], data["controls"], _dynamics(data), data["cost"], _interval(data),
                              _vector(data, "start", data["states"]), _vector(data, "end", data["states"]),
                              data.get("sense", "minimize"))
        if kind == "herglotz_ocp":
            return HerglotzOcpProblem(data["states"], data["controls"], _dynamics(data), data["cost"],
                                      _interval(data), _vector(data, "start", data["states"]),
                                      _vector(data, "end", data["states"]), data.get("z_start", 0.0),
                                      data.get("sense", "maximize"))
        if kind == "herglotz_lagrangian":
            n = int(data.get("n", 1))
            return HerglotzLagrangian(n, lagrangian_chart(n), data["L"])
        if kind == "contact":
            n = int(data.get("n", 1))
            return ContactSystem.darboux(n, data["H"])
        box = dict(GAS_BOX)
        box.update({k: tuple(v) for k, v in data.get("box", {}).items()})
        return GasPistonParams(float(data.get("m", 1.0)), float(data.get("d", 0.5)),
                               data.get("U", default_internal_energy()), box)
    except InputError:
        raise
    except (ValueError, ExprError) as exc:
        raise InputError(f"{kind} problem invalid: {exc}") from exc


# ---------------------------------------------------------------- checks


def _check(name: str, value: float, tol: float, *, lower: bool = False) -> Dict[str, Any]:
    value = float(value)
    ok = math.isfinite(value) and (value >= -tol if lower else value <= tol)
    return {"check": name, "value": value, "tol": tol, "passed": bool(ok)}


def _traj_summary(traj: Trajectory) -> Dict[str, Any]:
    meta = {k: (v if not isinstance(v, (np.floating, np.integer)) else v.item()) for k, v in traj.meta.items()}
    meta["accepted_steps"] = len(traj) - 1
    return meta


# ---------------------------------------------------------------- solve


def _solve_ocp(problem: OcpProblem, data, opts: Options) -> Outcome:
    p_guess, u_guess = _guesses(data)
    lam = opts.lambda0 if opts.lambda0 is not None else data.get("lambda0")
    sys_ = extend(problem, lam)
    cfg = BvpConfig(_integrator(data, opts), _shooting(data, opts), p_guess=p_guess, u_guess=u_guess,
                    depth=opts.depth)
    traj = solve_bvp(sys_, config=cfg)
    rep = _traj_summary(traj)
    rep["max_dHdu"] = float(np.max(traj.column("dHdu"))) if len(problem.controls) else 0.0
    return Outcome(rep["terminal_residual"] <= opts.tol, rep, traj)


def _herglotz_config(data, opts):
    p_guess, u_guess = _guesses(data)
    return HerglotzBvpConfig(_integrator(data, opts), _shooting(data, opts), p_guess, u_guess)


def _lambda0(data, opts):
    return opts.lambda0 if opts.lambda0 is not None else data.get("lambda0")


def _solve_herglotz(problem: HerglotzOcpProblem, data, opts: Options) -> Outcome:
    traj = solve_reduced(problem, _lambda0(data, opts), _herglotz_config(data, opts))
    rep = _traj_summary(traj)
    rep["max_dH0du"] = float(np.max(np.abs(traj.column("dH0du")))) if "dH0du" in traj.diagnostics else 0.0
    rep["objective_z_b"] = traj.final()["z"]
    return Outcome(rep["terminal_residual"] <= opts.tol, rep, traj)


def _lagrangian_endpoints(lag: HerglotzLagrangian, data):
    return _vector(data, "start", lag.q), _vector(data, "end", lag.q)


def _solve_lagrangian(lag: HerglotzLagrangian, data, opts: Options) -> Outcome:
    q0, q1 = _lagrangian_endpoints(lag, data)
    rec = herglotz_equation_recovery(lag, _interval(data), q0, q1, float(data.get("z_start", 0.0)),
                                     _herglotz_config(data, opts))
    rep = _traj_summary(rec.trajectory)
    rep.update(max_el_residual=rec.max_el_residual, max_flow_deviation=rec.max_flow_deviation)
    return Outcome(rep["terminal_residual"] <= opts.tol, rep, rec.trajectory)


def _contact_run(system: ContactSystem, data, opts: Options) -> Trajectory:
    y0 = _vector(data, "start", system.chart)
    return contact_flow(system, y0, _interval(data), _integrator(data, opts))


def _solve_contact(system: ContactSystem, data, opts: Options) -> Outcome:
    traj = _contact_run(system, data, opts)
    rep = _traj_summary(traj)
    rep.update(branch="contact", max_dissipation_residual=float(np.max(dissipation_residuals(system, traj))))
    return Outcome(True, rep, traj)


def _gas_start(data) -> tuple:
    return tuple(_vector(data, "start", ("V", "pi", "S"), default=[1.0, 0.5, 0.0]))


def _gas_run(params: GasPistonParams, data, opts: Options):
    return gas_piston_run(params, _gas_start(data), _interval(data, (0.0, 5.0)), data.get("u", 0.0),
                          _integrator(data, opts), bool(data.get("lifted", False)), opts.seed)


def _solve_gas(params: GasPistonParams, data, opts: Options) -> Outcome:
    run = _gas_run(params, data, opts)
    rep = run.to_dict()
    rep.update(branch="lifted" if data.get("lifted") else "contact", premise_violations=params.premise_violations())
    return Outcome(True, rep, run.trajectory)


SOLVERS: Dict[str, Callable[..., Outcome]] = {
    "ocp": _solve_ocp,
    "herglotz_ocp": _solve_herglotz,
    "herglotz_lagrangian": _solve_lagrangian,
    "contact": _solve_contact,
    "gas_piston": _solve_gas,
}


# ---------------------------------------------------------------- verify


def _verify_contact(system: ContactSystem, data, opts: Options) -> Outcome:
    rng = np.random.default_rng(opts.seed)
    worst_eta = worst_lie = 0.0
    for _ in range(opts.samples):
        pt = dict(zip(system.chart, rng.uniform(-1.0, 1.0, len(system.chart))))
        r_eta, r_lie = check_contact_identities(system, pt)
        worst_eta, worst_lie = max(worst_eta, r_eta), max(worst_lie, r_lie)
    checks = [_check("eta(X_H) = -H", worst_eta, 1e-9), _check("L_X eta = -R(H) eta", worst_lie, 1e-9)]
    traj = None
    if "start" in data.get("boundary", {}):
        traj = _contact_run(system, data, opts)
        checks.append(_check("dissipation law", np.max(dissipation_residuals(system, traj)), 1e-6))
    return Outcome(all(c["passed"] for c in checks), {}, traj, checks)


def _verify_ocp(problem: OcpProblem, data, opts: Options) -> Outcome:
    out = _solve_ocp(problem, data, opts)
    rep = out.report
    out.checks = [
        _check("terminal residual", rep["terminal_residual"], opts.tol),
        _check("p0 drift", rep["p0_drift"], 1e-9),
        _check("dH/du on the extremal", rep["max_dHdu"], 1e-8),
    ]
    out.ok = all(c["passed"] for c in out.checks)
    return out


def _verify_herglotz(problem: HerglotzOcpProblem, data, opts: Options) -> Outcome:
    lam = _lambda0(data, opts)
    cfg = _herglotz_config(data, opts)
    red = solve_reduced(problem, lam, cfg)
    full = solve_full(problem, lam, cfg)
    proj = consistency_project(problem, full, full.meta["lambda0"])
    rng = np.random.default_rng(opts.seed)
    worst = 0.0
    count = 0
    while count < opts.samples:
        pt = {n: rng.uniform(-1, 1) for n in problem.full_chart}
        if abs(full.meta["lambda0"] + pt["p_z"]) < 0.1:
            continue
        worst = max(worst, *conformal_residuals(problem, pt, full.meta["lambda0"]))
        count += 1
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        pz = pz_invariant_check(problem, full)
    checks = [
        _check("reduced terminal residual", red.meta["terminal_residual"], opts.tol),
        _check("full terminal residual", full.meta["terminal_residual"], opts.tol),
        _check("reduced vs projected full", np.max(np.abs(proj.samples - red.samples)), 1e-6),
        _check("x0 - z drift", full.meta["x0_z_drift"], 1e-9),
        _check("p0 drift", full.meta["p0_drift"], 1e-9),
        _check("conformal pullback", worst, 1e-10),
        _check("p0 + p_z law (relative)", pz.max_rel_error if not pz.degenerate else math.inf, 1e-6),
    ]
    rep = _traj_summary(red)
    return Outcome(all(c["passed"] for c in checks), rep, red, checks)


def _verify_lagrangian(lag: HerglotzLagrangian, data, opts: Options) -> Outcome:
    out = _solve_lagrangian(lag, data, opts)
    out.checks = [
        _check("generalized Euler-Lagrange residual", out.report["max_el_residual"], 1e-6),
        _check("agreement with the Lagrangian flow", out.report["max_flow_deviation"], 1e-6),
    ]
    out.ok = all(c["passed"] for c in out.checks)
    return out


def _verify_gas(params: GasPistonParams, data, opts: Options) -> Outcome:
    try:
        system = gas_piston_system(params, seed=opts.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    rep = system.check(seed=opts.seed)
    checks = [
        _check("h on the state submanifold", rep.max_h, 1e-10),
        _check("sampled entropy rate", rep.min_entropy_rate, 1e-12, lower=True),
        _check("sampled temperature", rep.min_temperature, 0.0, lower=True),
    ]
    report: Dict[str, Any] = {"sampled_checks": rep.to_dict(), "premise_violations": params.premise_violations()}
    traj = None
    try:
        with np.errstate(all="ignore"):
            run = _gas_run(params, data, opts)
    except IntegrationError as exc:
        checks.append({"check": "entropy nondecreasing along the run", "value": math.inf, "tol": 1e-12,
                       "passed": False, "error": str(exc)})
    else:
        traj = run.trajectory
        report.update(run.to_dict())
        checks.append(_check("entropy nondecreasing along the run", run.max_entropy_decrease, 1e-12))
        checks.append(_check("state residual along the run", run.max_state_residual, 1e-6))
        if run.terms is not None:
            checks.append(_check("lifted constraint", run.max_constraint, 1e-6))
            checks.append(_check("lifted alpha vs printed", max(run.terms.alpha_residuals.values()), 1e-9))
    return Outcome(all(c["passed"] for c in checks), report, traj, checks)


VERIFIERS: Dict[str, Callable[..., Outcome]] = {
    "ocp": _verify_ocp,
    "herglotz_ocp": _verify_herglotz,
    "herglotz_lagrangian": _verify_lagrangian,
    "contact": _verify_contact,
    "gas_piston": _verify_gas,
}


# ---------------------------------------------------------------- oracle


def _oracle(obj, data, opts: Options) -> Outcome:
    kind = data["kind"]
    if kind not in ("ocp", "herglotz_ocp"):
        raise InputError(f"oracle needs kind 'ocp' or 'herglotz_ocp', got {kind!r}")
    Ns = sorted(set(int(n) for n in opts.N))
    if Ns[0] < 4:
        raise InputError("--N values must be at least 4")
    try:
        if kind == "ocp":
            reference = solve_bvp(extend(obj, _lambda0(data, opts)),
                                  config=BvpConfig(_integrator(data, opts), _shooting(data, opts), depth=opts.depth))
            ref_obj = reference.final()["x0"]
        else:
            reference = solve_reduced(obj, _lambda0(data, opts), _herglotz_config(data, opts))
            ref_obj = reference.final()["z"]
    except (ShootingError, IntegrationError, ArithmeticError, SingularProblemError) as exc:
        reference, ref_obj, ref_error = None, None, str(exc)
    else:
        ref_error = None
    runs = []
    result = None
    names = tuple(obj.states) + tuple(obj.controls)
    for N in Ns:
        cfg = TranscriptionConfig(N=N)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OracleStall)
            result = (transcribe_classical if kind == "ocp" else transcribe_herglotz)(obj, cfg)
        entry = {"N": N, "objective": result.objective, "converged": result.converged,
                 "terminal_residual": result.constraint_residual, "grad_norm": result.grad_norm}
        if reference is not None:
            entry["trajectory_gap"] = trajectory_gap(result.trajectory, reference, names)
            entry["objective_gap"] = abs(result.objective - ref_obj)
        runs.append(entry)
    rep: Dict[str, Any] = {"branch": "oracle", "runs": runs, "accepted_steps": len(result.trajectory) - 1}
    if reference is None:
        rep["indirect_error"] = ref_error
    else:
        gaps = [r["trajectory_gap"] for r in runs]
        rep["indirect_objective"] = ref_obj
        rep["gap_monotone"] = bool(all(b <= a for a, b in zip(gaps, gaps[1:])))
    return Outcome(all(r["converged"] for r in runs), rep, result.trajectory)


# ---------------------------------------------------------------- driver


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _emit(args, command: str, kind: str, out: Outcome, started: float) -> int:
    report = {"command": command, "kind": kind, "ok": out.ok, **out.report}
    if out.checks:
        report["checks"] = out.checks
    report["seed"] = args.seed
    report["wall_time"] = time.perf_counter() - started
    if out.trajectory is not None:
        report["accepted_steps"] = len(out.trajectory) - 1
        if args.out:
            _write(args.out, out.trajectory.to_csv())
    text = json.dumps(report, indent=2, default=_json_default, allow_nan=True) + "\n"
    if args.report:
        _write(args.report, text)
    else:
        sys.stdout.write(text)
    for c in out.checks:
        if not c["passed"]:
            print(f"check failed: {c['check']} = {c['value']:.3g} (tol {c['tol']:.1g})", file=sys.stderr)
    return EXIT_OK if out.ok else EXIT_FAILURE


def _fail(args, command: str, kind: str, stage: str, exc: BaseException, started: float, extra=None) -> int:
    msg = f"{stage} failed: {exc}"
    print(msg, file=sys.stderr)
    report = {"command": command, "kind": kind, "ok": False, "error": msg, "seed": args.seed,
              "wall_time": time.perf_counter() - started}
    report.update(extra or {})
    text = json.dumps(report, indent=2, default=_json_default) + "\n"
    if args.report:
        _write(args.report, text)
    else:
        sys.stdout.write(text)
    return EXIT_FAILURE


def _options(args) -> Options:
    return Options(seed=args.seed, tol=args.tol, steps=args.steps, depth=args.depth, lambda0=args.lambda0,
                   N=tuple(getattr(args, "N", None) or (64,)))


def run_command(args) -> int:
    started = time.perf_counter()
    command = args.command
    try:
        opts = _options(args)
        if command == "demo":
            data = load_problem(args.config) if args.config else {"kind": "gas_piston"}
            if data["kind"] != "gas_piston":
                raise InputError("demo gas-piston needs a gas_piston config")
            if args.lifted:
                data["lifted"] = True
            command = "solve"
        else:
            data = load_problem(args.problem)
        obj = build(data)
        np.random.seed(opts.seed)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    kind = data["kind"]
    try:
        if command == "solve":
            out = SOLVERS[kind](obj, data, opts)
        elif command == "verify":
            out = VERIFIERS[kind](obj, data, opts)
        else:
            out = _oracle(obj, data, opts)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SingularProblemError as exc:
        cs = exc.constraints.to_dict() if exc.constraints is not None else None
        return _fail(args, command, kind, "control elimination", exc, started, {"constraints": cs})
    except ControlEliminationError as exc:
        return _fail(args, command, kind, "control elimination", exc, started)
    except ShootingError as exc:
        return _fail(args, command, kind, "shooting", exc, started, {"best_residual": exc.best_norm})
    except IntegrationError as exc:
        return _fail(args, command, kind, "integration", exc, started)
    except ArithmeticError as exc:
        return _fail(args, command, kind, "evaluation", exc, started)
    return _emit(args, command, kind, out, started)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="trajectory CSV path ('-' for stdout)")
    common.add_argument("--report", help="JSON report path (default: stdout)")
    common.add_argument("--seed", type=int, default=0, help="seed for restarts and sample points")
    common.add_argument("--tol", type=float, default=1e-8, help="terminal residual tolerance")
    common.add_argument("--steps", type=int, default=None, help="RK4 steps (overrides the file)")
    common.add_argument("--depth", type=int, default=3, help="constraint algorithm depth")
    common.add_argument("--lambda0", type=float, default=None, help="cost multiplier (nonzero)")

    parser = argparse.ArgumentParser(prog="contactpmp", description="Contact-geometric optimal control tools.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", parents=[common], help="run the solver pipeline for a problem file")
    p.add_argument("problem")
    p = sub.add_parser("verify", parents=[common], help="run the invariant checks for a problem file")
    p.add_argument("problem")
    p = sub.add_parser("oracle", parents=[common], help="direct transcription and gap to the indirect solution")
    p.add_argument("problem")
    p.add_argument("--N", type=int, nargs="+", default=[64], help="control nodes minus one (several allowed)")
    p = sub.add_parser("demo", parents=[common], help="built-in demonstrations")
    p.add_argument("name", choices=["gas-piston"])
    p.add_argument("--config", help="gas_piston JSON overriding the defaults")
    p.add_argument("--lifted", action="store_true", help="run the lifted optimal-control flow")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.lambda0 is not None and args.lambda0 == 0.0:
        print("input error: --lambda0 must be nonzero", file=sys.stderr)
        return EXIT_INPUT
    if args.steps is not None and args.steps < 1:
        print("input error: --steps must be positive", file=sys.stderr)
        return EXIT_INPUT
    return run_command(args)


__all__ = ["SCHEMA", "InputError", "build", "build_parser", "load_problem", "main", "validate_problem"]
