from __future__ import annotations

import math

import numpy as np
import pytest

from contactpmp.integrate import (
    IntegratorConfig,
    MaxStepsExceeded,
    RhsEvaluationError,
    ShootingConfig,
    ShootingError,
    SingularJacobian,
    StepUnderflow,
    Trajectory,
    integrate,
    shoot,
)


def test_exponential_rk45():
    tr = integrate(lambda t, y: y, [1.0], (0.0, 1.0), IntegratorConfig("rk45", rtol=1e-10, atol=1e-12))
    assert abs(tr.samples[-1, 0] - math.e) <= 1e-9
    assert tr.times[-1] == 1.0


def test_constant_is_exact():
    for method in ("rk4", "rk45"):
        tr = integrate(lambda t, y: np.zeros(2), [3.0, -1.0], (0.0, 2.0), IntegratorConfig(method))
        assert np.all(tr.samples == np.array([3.0, -1.0]))


def test_harmonic_oscillator_period():
    rhs = lambda t, y: np.array([y[1], -y[0]])
    tr = integrate(rhs, [1.0, 0.0], (0.0, 2 * math.pi), IntegratorConfig("rk45", rtol=1e-9, atol=1e-12))
    assert np.max(np.abs(tr.samples[-1] - [1.0, 0.0])) <= 1e-6


def test_rk4_fourth_order():
    errs = []
    for n in (10, 20, 40):
        tr = integrate(lambda t, y: y, [1.0], (0.0, 1.0), IntegratorConfig("rk4", steps=n))
        errs.append(abs(tr.samples[-1, 0] - math.e))
    assert errs[0] / errs[1] >= 14 and errs[1] / errs[2] >= 14


def test_dense_output_matches_reintegration():
    rhs = lambda t, y: np.array([y[1], -y[0] - 0.1 * y[1]])
    cfg = IntegratorConfig("rk45", rtol=1e-8, atol=1e-10)
    tr = integrate(rhs, [1.0, 0.0], (0.0, 5.0), cfg)
    for t in (0.37, 1.9, 3.14159, 4.2):
        direct = integrate(rhs, [1.0, 0.0], (0.0, t), cfg).samples[-1]
        local_tol = 1e-10 + 1e-8 * np.max(np.abs(direct))
        assert np.max(np.abs(tr.at(t) - direct)) <= 5 * local_tol


def test_errors():
    with pytest.raises(RhsEvaluationError) as info:
        integrate(lambda t, y: [math.log(0.5 - t)], [0.0], (0, 1), IntegratorConfig("rk4", steps=4))
    assert "t=0.5" in str(info.value)
    with pytest.raises(MaxStepsExceeded):
        integrate(lambda t, y: y, [1.0], (0, 1), IntegratorConfig("rk45", max_steps=2, rtol=1e-12, atol=1e-14))
    with pytest.raises((StepUnderflow, RhsEvaluationError)):
        integrate(lambda t, y: y ** 2, [1.0], (0, 2), IntegratorConfig("rk45"))


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(rtol=0)
    with pytest.raises(ValueError):
        IntegratorConfig(max_steps=0)
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")


def test_trajectory_invariants_and_csv():
    with pytest.raises(ValueError):
        Trajectory(("a",), [0.0, 0.0], [[1.0], [2.0]])
    with pytest.raises(ValueError):
        Trajectory(("a", "b"), [0.0, 1.0], [[1.0], [2.0]])
    tr = Trajectory(("a",), [0.0, 1.0], [[1.0], [2.0]], {"H": np.array([0.1, 0.2])})
    text = tr.to_csv()
    assert text.splitlines()[0] == "t,a,H"
    assert text.endswith("\n") and "\r" not in text
    assert text.splitlines()[2] == "1,2,0.20000000000000001"
    assert tr.at(0.5)[0] == 1.5


def test_shoot_linear_one_step():
    res = shoot(lambda p: p - 2.0, [0.0])
    assert res.x[0] == pytest.approx(2.0, abs=1e-12)
    assert res.iterations == 1


def test_shoot_lq_costate():
    # x' = p, p' = x, x(0) = 1; want x(1) = 0 -> p(0) = -cosh(1)/sinh(1)
    cfg = IntegratorConfig("rk4", steps=400)

    def residual(p0):
        tr = integrate(lambda t, y: np.array([y[1], y[0]]), [1.0, p0[0]], (0.0, 1.0), cfg)
        return tr.samples[-1, :1]

    res = shoot(residual, [0.0])
    assert res.x[0] == pytest.approx(-math.cosh(1) / math.sinh(1), abs=1e-8)


def test_shoot_no_root():
    with pytest.raises(ShootingError):
        shoot(lambda p: p ** 2 + 1.0, [0.3], ShootingConfig(restarts=3, max_iter=20))


def test_shoot_singular():
    with pytest.raises(SingularJacobian):
        shoot(lambda p: np.array([1.0]), [0.0], ShootingConfig(restarts=2))
