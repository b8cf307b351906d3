from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import simpson

from contactpmp.integrate import IntegratorConfig, Trajectory
from contactpmp.lagrangian import (
    HerglotzLagrangian,
    RegularityError,
    euler_lagrange_residual,
    herglotz_action,
    herglotz_flow,
    herglotz_rhs,
    legendre_momenta,
)

DAMPED = "v^2/2 - q^2/2 - 0.1*z"


def test_rhs_damped_oscillator():
    lag = HerglotzLagrangian.standard(1, DAMPED)
    f = herglotz_rhs(lag, {"q": 1.0, "v": 0.0, "z": 0.0})
    assert f.tolist() == pytest.approx([0.0, -1.0, -0.5])
    f = herglotz_rhs(lag, {"q": 0.3, "v": 2.0, "z": 0.4})
    assert f[1] == pytest.approx(-0.3 - 0.1 * 2.0)


def test_rhs_compiled_matches_jets():
    lag = HerglotzLagrangian.standard(2, "v1^2/2 + v1*v2*cos(q1) + v2^2 - q2^2*z/3 + sin(z)*v1*q2")
    rng = np.random.default_rng(1)
    for _ in range(20):
        y = rng.uniform(-1, 1, size=5)
        pt = dict(zip(lag.chart, y))
        assert np.allclose(lag.rhs(y), herglotz_rhs(lag, pt), rtol=1e-11, atol=1e-12)


def classical_el_rhs(y):
    # L = v1^2/2 + v1*v2*cos(q1) + v2^2 - q2^2 (independent of z), derived by hand
    q1, q2, v1, v2, _ = y
    W = np.array([[1.0, math.cos(q1)], [math.cos(q1), 2.0]])
    Lq = np.array([-v1 * v2 * math.sin(q1), -2 * q2])
    dLv_dq_v = np.array([-v2 * math.sin(q1) * v1, -v1 * math.sin(q1) * v1])
    acc = np.linalg.solve(W, Lq - dLv_dq_v)
    L = v1 ** 2 / 2 + v1 * v2 * math.cos(q1) + v2 ** 2 - q2 ** 2
    return np.array([v1, v2, acc[0], acc[1], L])


def test_z_independent_reduces_to_euler_lagrange():
    lag = HerglotzLagrangian.standard(2, "v1^2/2 + v1*v2*cos(q1) + v2^2 - q2^2")
    rng = np.random.default_rng(2)
    for _ in range(20):
        y = rng.uniform(-1, 1, size=5)
        got = herglotz_rhs(lag, dict(zip(lag.chart, y)))
        assert np.max(np.abs(got - classical_el_rhs(y))) <= 1e-12


def test_singular_hessian():
    lag = HerglotzLagrangian.standard(1, "v^4")
    with pytest.raises(RegularityError, match="not regular"):
        herglotz_rhs(lag, {"q": 0, "v": 0, "z": 0})


def test_legendre_momenta():
    assert legendre_momenta(HerglotzLagrangian.standard(1, "v^2/2"), {"q": 0, "v": 3, "z": 0}).tolist() == [3]
    lag = HerglotzLagrangian.standard(1, DAMPED)
    assert legendre_momenta(lag, {"q": 2, "v": -1.5, "z": 4}).tolist() == [-1.5]
    lag2 = HerglotzLagrangian.standard(2, "v1*v2")
    assert legendre_momenta(lag2, {"q1": 0, "q2": 0, "v1": 2, "v2": 5, "z": 0}).tolist() == [5, 2]


def _sine_path(n_samples: int, a=0.0, b=1.0):
    t = np.linspace(a, b, n_samples)
    return Trajectory(("q", "v"), t, np.column_stack([np.sin(t), np.cos(t)]))


def test_action_z_independent_is_quadrature():
    lag = HerglotzLagrangian.standard(1, "v^2/2 - q^2/2 + q*v")
    path = _sine_path(20001)
    q, v = path.samples[:, 0], path.samples[:, 1]
    quad = simpson(v ** 2 / 2 - q ** 2 / 2 + q * v, x=path.times)
    assert herglotz_action(lag, path, 0.0) == pytest.approx(quad, abs=1e-8)


def test_action_closed_forms():
    path = _sine_path(101)
    assert herglotz_action(HerglotzLagrangian.standard(1, "-0.1*z"), path, 1.0) == pytest.approx(math.exp(-0.1), abs=1e-10)
    assert herglotz_action(HerglotzLagrangian.standard(1, "0"), path, 0.7) == 0.7


def _path_from(traj: Trajectory, t):
    Y = np.array([traj.at(s) for s in t])
    return Y


def test_flow_is_critical_point_of_action():
    lag = HerglotzLagrangian.standard(1, DAMPED)
    cfg = IntegratorConfig("rk45", rtol=1e-12, atol=1e-14)
    traj = herglotz_flow(lag, [1.0, 0.3, 0.0], (0.0, 1.0), cfg)
    t = np.linspace(0.0, 1.0, 4001)
    Y = _path_from(traj, t)
    base = Trajectory(("q", "v"), t, Y[:, :2])
    A0 = herglotz_action(lag, base, 0.0)
    rng = np.random.default_rng(4)
    eps = 1e-5
    for _ in range(20):
        k = rng.integers(1, 5)
        amp = rng.normal()
        eta = amp * np.sin(k * np.pi * t) * (1 + 0.3 * t)
        deta = amp * (k * np.pi * np.cos(k * np.pi * t) * (1 + 0.3 * t) + 0.3 * np.sin(k * np.pi * t))
        pert = Trajectory(("q", "v"), t, np.column_stack([Y[:, 0] + eps * eta, Y[:, 1] + eps * deta]))
        dA = herglotz_action(lag, pert, 0.0) - A0
        norm = eps * max(np.max(np.abs(eta)), np.max(np.abs(deta)))
        assert abs(dA) <= 1e-4 * norm


def test_generalized_euler_lagrange_along_flow():
    lag = HerglotzLagrangian.standard(1, DAMPED)
    traj = herglotz_flow(lag, [1.0, 0.0, 0.0], (0.0, 3.0), IntegratorConfig("rk4", steps=3000))
    assert np.max(np.abs(euler_lagrange_residual(lag, traj))) <= 1e-6
