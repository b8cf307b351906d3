from __future__ import annotations

import numpy as np
import pytest

from contactpmp.expr import parse
from contactpmp.geometry import check_contact_identities
from contactpmp.herglotz_ocp import (
    HerglotzOcpProblem,
    conformal_residuals,
    consistency_project,
    full_extended_rhs,
    full_flow,
    herglotz_equation_recovery,
    printed_map_residual,
    pz_invariant_check,
    reduce,
    reduced_flow,
    solve_full,
    solve_reduced,
)
from contactpmp.integrate import Trajectory
from contactpmp.lagrangian import HerglotzLagrangian
from contactpmp.ocp import extend, solve_bvp

BENCHMARKS = {
    "lq": HerglotzOcpProblem(("x",), ("u",), ("u",), "(x^2 + u^2)/2", (0, 1), (1,), (0,)),
    "damped_oscillator": HerglotzOcpProblem(("q",), ("v",), ("v",), "v^2/2 - q^2/2 - 0.1*z", (0, 1), (1,), (0,)),
    "discounted_lq": HerglotzOcpProblem(("x",), ("u",), ("u",), "(x^2 + u^2)/2 - 0.5*z", (0, 2), (1,), (0.2,)),
    "z_in_dynamics": HerglotzOcpProblem(("x",), ("u",), ("u - 0.1*z*x",), "u^2/2 + x^2/2 + 0.2*z", (0, 1), (1,), (0.5,)),
    "planar": HerglotzOcpProblem(
        ("x1", "x2"), ("u1", "u2"), ("x2 + u1", "u2"), "(u1^2 + u2^2)/2 + x1^2/2 - 0.2*z", (0, 1), (1, 0), (0, 0)
    ),
}


def random_point(problem, rng):
    return {n: rng.uniform(-1, 1) for n in problem.full_chart}


def test_problem_validation():
    with pytest.raises(ValueError, match="reserved"):
        HerglotzOcpProblem(("p0",), ("u",), ("u",), "u^2", (0, 1), (0,), (1,))
    with pytest.raises(ValueError, match="reserved"):
        HerglotzOcpProblem(("x",), ("z",), ("z",), "x", (0, 1), (0,), (1,))
    with pytest.raises(ValueError):
        HerglotzOcpProblem(("x",), ("u",), ("u + w",), "u^2", (0, 1), (0,), (1,))
    with pytest.raises(ValueError):
        BENCHMARKS["damped_oscillator"].classical()
    assert BENCHMARKS["lq"].classical().cost == parse("(x^2 + u^2)/2")


def test_full_extended_rhs_by_hand():
    P = BENCHMARKS["z_in_dynamics"]
    pt = {"x0": 0.1, "x": 0.3, "z": 0.4, "p0": -1.0, "p_x": 0.5, "p_z": 0.2, "u": -0.6}
    F = 0.18 + 0.045 + 0.08
    X = -0.6 - 0.012
    c = -0.8
    # dH/dx = c F_x + p X_x, dH/dz = c F_z + p X_z
    expect = [F, X, F, 0.0, -(c * 0.3 + 0.5 * (-0.04)), -(c * 0.2 + 0.5 * (-0.03))]
    assert np.allclose(full_extended_rhs(P, pt), expect, atol=1e-15)
    with pytest.raises(KeyError):
        full_extended_rhs(P, {"x": 0.0})


def test_reduced_matches_printed_equations():
    rng = np.random.default_rng(11)
    for P in BENCHMARKS.values():
        red = reduce(P)
        for _ in range(20):
            pt = {n: rng.uniform(-2, 2) for n in red.chart}
            assert np.max(np.abs(red.rhs(pt) - red.display_rhs(pt))) <= 1e-12
            assert max(check_contact_identities(red.contact, pt)) <= 1e-9


def test_reduce_rejects_zero_lambda0():
    with pytest.raises(ValueError):
        reduce(BENCHMARKS["lq"], 0.0)


def test_conformal_pullback():
    rng = np.random.default_rng(2)
    for P in BENCHMARKS.values():
        for lam in (-1.0, -2.5, 0.7):
            for _ in range(20):
                pt = random_point(P, rng)
                if abs(lam + pt["p_z"]) < 0.1:
                    continue
                assert max(conformal_residuals(P, pt, lam)) <= 1e-10


def test_printed_map_only_conformal_for_unit_factor():
    P = BENCHMARKS["damped_oscillator"]
    pt = {"q": 0.2, "p_q": 0.4, "p_z": 0.0}
    assert printed_map_residual(P, pt, -1.0) == 0.0
    assert printed_map_residual(P, {**pt, "p_z": 0.5}, -1.0) > 0.1


def test_projection_of_full_flow_is_a_reduced_solution():
    rng = np.random.default_rng(4)
    for P in BENCHMARKS.values():
        m = len(P.states)
        y0 = np.concatenate([[0.0], P.x_start, [0.0, -1.0], rng.uniform(-0.5, 0.5, m), [rng.uniform(-0.3, 0.3)]])
        full = full_flow(P, y0)
        proj = consistency_project(P, full)
        assert np.max(np.abs(proj.diagnostics["x0_minus_z"])) <= 1e-12
        assert np.max(proj.diagnostics["reduced_residual"]) <= 1e-10
        red = reduced_flow(reduce(P), proj.samples[0, : 2 * m + 1])
        assert np.max(np.abs(red.samples - proj.samples)) <= 1e-8


def test_projection_requires_matching_start():
    P = BENCHMARKS["lq"]
    full = full_flow(P, [0.3, 1.0, 0.0, -1.0, -1.0, 0.0])
    with pytest.raises(ValueError):
        consistency_project(P, full)


def test_pz_law():
    rng = np.random.default_rng(8)
    for P in BENCHMARKS.values():
        m = len(P.states)
        y0 = np.concatenate([[0.0], P.x_start, [0.0, -1.0], rng.uniform(-0.5, 0.5, m), [0.4]])
        report = pz_invariant_check(P, full_flow(P, y0))
        assert report.law_holds and not report.degenerate
        assert report.max_rel_error <= 1e-8


def test_pz_degeneracy_warns():
    P = BENCHMARKS["damped_oscillator"]
    t = np.linspace(0, 1, 5)
    cols = {n: np.zeros(5) for n in P.full_chart}
    cols["p0"][:] = -1.0
    cols["p_z"][:] = 1.0
    tr = Trajectory(P.full_chart, t, np.column_stack([cols[n] for n in P.full_chart]))
    with pytest.warns(RuntimeWarning, match="degenerate"):
        report = pz_invariant_check(P, tr)
    assert report.degenerate


@pytest.mark.parametrize("name", sorted(BENCHMARKS))
def test_reduced_and_full_bvp_agree(name):
    P = BENCHMARKS[name]
    red = solve_reduced(P)
    full = solve_full(P)
    proj = consistency_project(P, full)
    assert red.meta["terminal_residual"] <= 1e-8 and full.meta["terminal_residual"] <= 1e-8
    assert np.max(np.abs(proj.samples - red.samples)) <= 1e-6
    assert abs(full.final()["p_z"]) <= 1e-8


def test_classical_limit():
    for name in ("lq", "planar_classical"):
        if name == "lq":
            P = BENCHMARKS["lq"]
        else:
            P = HerglotzOcpProblem(("x1", "x2"), ("u1", "u2"), ("x2 + u1", "u2"), "(u1^2 + u2^2)/2 + x1^2/2",
                                   (0, 1), (1, 0), (0, 0))
        red = solve_reduced(P)
        cl = solve_bvp(extend(P.classical(), -1.0))
        for s in P.states + P.controls:
            assert np.max(np.abs(red.column(s) - cl.column(s))) <= 1e-9
        for s in P.states:
            assert np.max(np.abs(red.column("p_" + s) - cl.column("p_" + s))) <= 1e-9
        assert np.max(np.abs(red.column("z") - cl.column("x0"))) <= 1e-9


def test_lq_analytic():
    red = solve_reduced(BENCHMARKS["lq"])
    t = red.times
    assert np.max(np.abs(red.column("x") - np.sinh(1 - t) / np.sinh(1))) <= 1e-9
    assert red.final()["z"] == pytest.approx(0.5 / np.tanh(1), abs=1e-9)


@pytest.mark.parametrize("L", ["v^2/2 - q^2/2 - 0.1*z", "v^2/2 - q^4/4 - 0.3*z*v", "exp(-0.2*q)*v^2/2 - 0.1*z^2"])
def test_herglotz_equations_recovered(L):
    rep = herglotz_equation_recovery(HerglotzLagrangian.standard(1, L), (0.0, 1.0), [1.0], [0.2])
    assert rep.max_el_residual <= 1e-6
    assert rep.max_flow_deviation <= 1e-6


def test_recovery_two_dimensions():
    lag = HerglotzLagrangian.standard(2, "(v1^2 + v2^2)/2 - (q1^2 + q1*q2 + q2^2)/2 - 0.1*z")
    rep = herglotz_equation_recovery(lag, (0.0, 1.0), [1.0, 0.0], [0.0, 0.5])
    assert rep.max_el_residual <= 1e-6 and rep.max_flow_deviation <= 1e-6
