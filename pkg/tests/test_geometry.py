from __future__ import annotations

import random

import numpy as np
import pytest

from contactpmp.expr import diff, eval_jet, parse
from contactpmp.geometry import (
    ContactSystem,
    PresymplecticControlSystem,
    check_contact_identities,
    classify_one_form,
    compatibility_constraints,
    contact_flow,
    contact_vf,
    d_eta_matrix,
    darboux_chart,
    dissipation_residuals,
    reeb,
    regularity_test,
)
from contactpmp.integrate import IntegratorConfig


def random_polynomial(rng: random.Random, names, degree: int = 3, terms: int = 6) -> str:
    parts = []
    for _ in range(terms):
        c = round(rng.uniform(-1, 1), 4)
        k = rng.randint(0, degree)
        mono = "*".join(rng.choice(names) for _ in range(k)) or "1"
        parts.append(f"({c})*{mono}")
    return " + ".join(parts)


def random_systems(count: int, seed: int):
    rng = random.Random(seed)
    for _ in range(count):
        n = rng.choice([1, 2, 3])
        chart = darboux_chart(n)
        yield ContactSystem(n, chart, parse(random_polynomial(rng, chart))), rng


def test_contact_vf_examples():
    assert contact_vf(ContactSystem.darboux(1, "p"), {"q": 0, "p": 2, "z": 5}).tolist() == [1, 0, 0]
    assert contact_vf(ContactSystem.darboux(1, "z"), {"q": 1, "p": 3, "z": 2}).tolist() == [0, -3, -2]
    assert contact_vf(ContactSystem.darboux(1, "0"), {"q": 1, "p": 3, "z": 2}).tolist() == [0, 0, 0]


def test_chart_validation():
    with pytest.raises(ValueError):
        ContactSystem(1, ("q", "p"), parse("p"))
    with pytest.raises(ValueError):
        ContactSystem(1, ("q", "q", "z"), parse("q"))
    with pytest.raises(ValueError):
        ContactSystem(1, ("q", "p", "z"), parse("w"))


def test_reeb():
    assert reeb(ContactSystem.darboux(1, "p")).tolist() == [0, 0, 1]
    r3 = reeb(ContactSystem.darboux(3, "p1"))
    assert len(r3) == 7 and r3[-1] == 1 and not r3[:-1].any()
    rng = np.random.default_rng(3)
    for n in (1, 2, 3):
        sys = ContactSystem.darboux(n, "z")
        W = d_eta_matrix(n)
        for _ in range(50):
            point = dict(zip(sys.chart, rng.normal(size=2 * n + 1)))
            eta = np.concatenate([-np.array([point[p] for p in sys.p]), np.zeros(n), [1.0]])
            assert np.all(W @ reeb(sys) == 0)
            assert eta @ reeb(sys) == 1.0


def test_identities_examples():
    pt = {"q": 0.4, "p": -1.3, "z": 2.0}
    assert max(check_contact_identities(ContactSystem.darboux(1, "p"), pt)) <= 1e-12
    assert max(check_contact_identities(ContactSystem.darboux(1, "z"), pt)) <= 1e-9
    assert check_contact_identities(ContactSystem.darboux(1, "0"), pt) == (0.0, 0.0)


def test_identities_random_battery():
    worst = 0.0
    for sys, rng in random_systems(100, 1):
        for _ in range(10):
            pt = {c: rng.uniform(-2, 2) for c in sys.chart}
            worst = max(worst, *check_contact_identities(sys, pt))
    assert worst <= 1e-9


def test_compiled_field_matches_jets():
    for sys, rng in random_systems(30, 5):
        pt = {c: rng.uniform(-2, 2) for c in sys.chart}
        y = [pt[c] for c in sys.chart]
        assert np.allclose(sys.vf(y), contact_vf(sys, pt), rtol=1e-12, atol=1e-12)


def test_energy_dissipation_along_flows():
    cfg = IntegratorConfig("rk45", rtol=1e-9, atol=1e-11)
    for sys, rng in random_systems(12, 9):
        y0 = [rng.uniform(-0.5, 0.5) for _ in sys.chart]
        tr = contact_flow(sys, y0, (0.0, 0.5), cfg)
        assert np.max(dissipation_residuals(sys, tr)) <= 1e-6
    damped = ContactSystem.darboux(1, "p^2/2 + q^2/2 + 0.3*z")
    tr = contact_flow(damped, [1.0, 0.0, 0.0], (0.0, 10.0), cfg)
    assert np.max(dissipation_residuals(damped, tr)) <= 1e-6
    # H decays exponentially: H(t) = H(0) exp(-0.3 t)
    assert tr.column("H")[-1] == pytest.approx(0.5 * np.exp(-3.0), rel=1e-6)


def test_classify_one_form():
    pt = {"q": 0.2, "p": 1.0, "z": 0.0}
    assert classify_one_form(["-p", "0", "1"], ["q", "p", "z"], pt).klass == 3
    abnormal = classify_one_form(["0", "-p", "0"], ["x0", "x", "p"], {"x0": 0, "x": 0, "p": 1.0})
    assert (abnormal.klass, abnormal.rank_d_eta) == (1, 2)
    assert classify_one_form(["0", "0", "1"], ["q", "p", "z"], pt).klass == 1
    for n in (1, 2, 3):
        chart = darboux_chart(n)
        coeffs = [f"-{p}" for p in chart[n:2 * n]] + ["0"] * n + ["1"]
        point = {c: 0.7 for c in chart}
        assert classify_one_form(coeffs, chart, point).klass == 2 * n + 1
    with pytest.raises(ValueError):
        classify_one_form(["1"] * 8, [f"y{i}" for i in range(8)], {f"y{i}": 0 for i in range(8)})
    with pytest.raises(ValueError):
        classify_one_form(["p", "0", "0"], ["q", "p", "z"], {"q": 0, "p": 0, "z": 0})


def test_compatibility_lq():
    sys = PresymplecticControlSystem(("x0", "x", "p0", "p"), ("u",), parse("p0*(x^2 + u^2)/2 + p*u"))
    cs = compatibility_constraints(sys, 3)
    (level0,) = cs.level(0)
    for pt in ({"p0": -1.0, "u": 0.3, "p": 2.0, "x": 0.0}, {"p0": 2.0, "u": -1.0, "p": 0.5, "x": 1.0}):
        assert eval_jet(level0, pt).value == pytest.approx(pt["p0"] * pt["u"] + pt["p"])
    assert cs.closed_at == 0


def test_compatibility_herglotz_as_ocp():
    F = parse("v^2/2 - q^2/2 - 0.1*z")
    H = parse(f"p0*({F}) + pq*v + pz*({F})")
    sys = PresymplecticControlSystem(("x0", "q", "z", "p0", "pq", "pz"), ("v",), H)
    cs = compatibility_constraints(sys, 2)
    (c0,) = cs.level(0)
    rng = np.random.default_rng(0)
    for _ in range(10):
        pt = dict(zip(["x0", "q", "z", "p0", "pq", "pz", "v"], rng.normal(size=7)))
        expect = (pt["p0"] + pt["pz"]) * eval_jet(diff(F, "v"), pt).value + pt["pq"]
        assert eval_jet(c0, pt).value == pytest.approx(expect, abs=1e-12)


def test_compatibility_without_controls_in_H():
    sys = PresymplecticControlSystem(("x0", "x", "p0", "p"), ("u",), parse("p0*x^2 + p*x"))
    cs = compatibility_constraints(sys, 3)
    assert all(e.is_zero for e in cs.level(0)) and cs.closed_at == 0
    sys2 = PresymplecticControlSystem(("x0", "x", "p0", "p"), ("u",), parse("p0*x^2 + p*u"))
    assert not all(e.is_zero for e in compatibility_constraints(sys2, 3).level(0))


def test_singular_problem_goes_deeper():
    sys = PresymplecticControlSystem(("x0", "x", "p0", "p"), ("u",), parse("p0*x^2/2 + p*u"))
    cs = compatibility_constraints(sys, 4)
    assert cs.closed_at == 2
    assert [t for _, t in cs.control_solvable] == ["L_X(L_X(dH/du))"]
    shallow = compatibility_constraints(sys, 1)
    assert not shallow.closed and "exceeded" in shallow.message


def test_regularity():
    sys = PresymplecticControlSystem(("x0", "x", "p0", "p"), ("u",), parse("p0*(x^2 + u^2)/2 + p*u"))
    pt = {"x0": 0, "x": 1.0, "p0": -1.0, "p": 0.0, "u": 0.0}
    assert regularity_test(sys, pt)
    lin = PresymplecticControlSystem(("x0", "x", "p0", "p"), ("u",), parse("p0*x + p*u"))
    assert not regularity_test(lin, pt)
    L = parse("v^2/2 - q^2/2 - 0.1*z")
    H = parse(f"p0*({L}) + pq*v + pz*({L})")
    hz = PresymplecticControlSystem(("x0", "q", "z", "p0", "pq", "pz"), ("v",), H)
    pt = {"x0": 0, "q": 1, "z": 0, "p0": -1, "pq": 0.2, "pz": 0.3, "v": 0.5}
    assert regularity_test(hz, pt)
    pt["pz"] = 1.0  # p0 + pz = 0
    assert not regularity_test(hz, pt)
