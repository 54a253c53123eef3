from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from grushin import jacobian, oracle, synthesis
from grushin.geoflow import GeodesicPath, MultiIndex, hamiltonian, random_angles
from grushin.oracle import CutEstimate, IntegratorConfig


def test_straight_line_exact():
    traj = oracle.integrate_hamilton((1, 2), [0.3, 1.0, 0.0], [1.0, 0.0, 0.0], 4.0)
    assert np.allclose(traj.x[:, 0], 0.3 + traj.t, atol=1e-14)
    assert np.all(traj.x[:, 1:] == [1.0, 0.0])


def test_classical_grushin_plane():
    path = GeodesicPath.from_spherical((1,), [1.0, 0.2], [1.0])
    ts = np.linspace(0, 6, 61)
    assert oracle.closed_form_residual(path, ts) <= 1e-8
    assert oracle.closed_form_residual(path, [0.0]) == 0.0


def test_energy_drift_long_run():
    path = GeodesicPath.from_spherical((2, 1), [0.9, 1.1, 0.0], [1.2, 2.0])
    tau = synthesis.cut_report(path).tau
    traj = oracle.integrate_hamilton(path.index, path.x0, path.p0, 5 * tau)
    assert traj.energy_drift() <= 1e-8


def test_rk4_is_fourth_order():
    index = MultiIndex((1, 1))
    path = GeodesicPath.from_spherical(index, [1.0, 1.0, 0.0], [1.0, 2.0])
    t_end = 2.0
    exact = np.concatenate(path.state(t_end))
    errs = []
    for steps in (20, 40, 80):
        traj = oracle.rk4(index, path.x0, path.p0, t_end, steps)
        errs.append(np.max(np.abs(traj.y[:, -1] - exact)))
    rates = [math.log2(errs[k] / errs[k + 1]) for k in range(2)]
    assert all(3.7 <= r <= 4.3 for r in rates)


def test_integrator_config():
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")
    cfg = IntegratorConfig(method="rk4", step=1e-2)
    traj = oracle.integrate_hamilton((1,), [1.0, 0.0], [0.6, 0.8], 1.0, cfg)
    assert traj.t[-1] == pytest.approx(1.0) and len(traj.t) == 101
    with pytest.raises(ValueError):
        oracle.integrate_hamilton((1,), [1.0, 0.0], [0.6, 0.8], -1.0)
    zero = oracle.integrate_hamilton((1,), [1.0, 0.0], [0.6, 0.8], 0.0)
    assert zero.y.shape == (4, 1)


def test_dense_output():
    path = GeodesicPath.from_spherical((1, 2), [1.0, 0.8, 0.0], [1.0, 2.0])
    traj = oracle.integrate_hamilton(path.index, path.x0, path.p0, 3.0)
    x, p = path.state(1.234)
    assert np.allclose(traj(1.234), np.concatenate([x, p]), atol=1e-6)


@given(st.integers(0, 2**32 - 1))
def test_fiber_chart_round_trip(seed):
    rng = np.random.default_rng(seed)
    index = MultiIndex((int(rng.integers(1, 4)), int(rng.integers(0, 3))))
    x0 = rng.uniform(0.4, 1.6, 3) * rng.choice([-1.0, 1.0], 3)
    theta = np.array([rng.uniform(0.05, math.pi - 0.05), rng.uniform(0, 2 * math.pi)])
    p = oracle.fiber_chart(index, x0, theta)
    assert hamiltonian(index, x0, p) == pytest.approx(0.5, abs=1e-13)
    assert np.allclose(oracle.fiber_chart_inverse(index, x0, p), theta, atol=1e-10)


def test_cut_estimate_helpers():
    est = CutEstimate(2.0, 2.5, None)
    assert est.found and est.width == 0.5
    assert est.contains(2.0) and est.contains(2.5) and not est.contains(2.6)
    assert est.contains(2.0 * (1 - 1e-10), rtol=1e-9)
    assert not CutEstimate(3.0, math.inf, None).found


@pytest.mark.parametrize("ab, q0, phi", [
    ((1, 1), (1.0, 1.0, 0.0), (math.pi / 2, math.pi / 2)),
    ((1, 1), (1.0, 1.0, 0.0), (1.0, 2.0)),
    ((2, 1), (0.7, -1.2, 0.3), (1.4, 1.0)),
    ((2, 3), (1.4, 0.6, 0.0), (1.0, 1.2)),
])
def test_numeric_conjugate_time_matches_closed_form(ab, q0, phi):
    path = GeodesicPath.from_spherical(ab, np.array(q0), np.array(phi))
    tau = synthesis.cut_report(path).tau
    closed, _ = jacobian.first_conjugate_time(path)
    numeric = oracle.conjugate_time_numeric(ab, q0, path.p0, 3 * tau)
    assert numeric == pytest.approx(closed, rel=1e-10)


def test_numeric_conjugate_time_straight_line():
    assert oracle.conjugate_time_numeric((1, 1), (1.0, 1.0, 0.0), [1.0, 0.0, 0.0], 5.0) == math.inf


def test_brute_force_quarter_period():
    q0 = np.array([1.0, 1.0, 0.0])
    path = GeodesicPath.from_spherical((1, 1), q0, [math.pi / 2, math.pi / 2])
    tau = synthesis.cut_report(path).tau
    est = oracle.brute_cut_time((1, 1), q0, path.p0, 1.25 * tau)
    assert est.contains(tau, rtol=1e-9)


def test_brute_force_straight_line():
    est = oracle.brute_cut_time((1, 1), (1.0, 1.0, 0.0), [1.0, 0.0, 0.0], 4.0)
    assert est.witness is None and not est.found


def test_brute_force_generic_covector():
    q0 = np.array([1.0, 1.0, 0.0])
    path = GeodesicPath.from_spherical((2, 2), q0, [0.8, 3.6])
    rep = synthesis.cut_report(path)
    est = oracle.brute_cut_time((2, 2), q0, path.p0, 1.25 * rep.tau)
    assert est.witness is not None
    assert est.contains(rep.tau, rtol=1e-9)
    assert est.width <= 0.02 * rep.tau
    # the witness really reaches the same point at t_high
    a, b = oracle._pair_endpoints(path.index, q0, est.witness, path.p0, est.t_high)
    assert np.allclose(a, b, atol=1e-8)


def test_brute_force_validation():
    with pytest.raises(NotImplementedError):
        oracle.brute_cut_time((1,), (1.0, 0.0), [1.0, 0.0], 1.0)
    with pytest.raises(ValueError):
        oracle.brute_cut_time((1, 1), (0.0, 1.0, 0.0), [1.0, 0.0, 0.0], 1.0)
    with pytest.raises(ValueError):
        oracle.brute_cut_time((1, 1), (1.0, 1.0, 0.0), [2.0, 0.0, 0.0], 1.0)


@pytest.mark.parametrize("alpha", [(2, 2), (1, 1), (1, 0), (0, 2), (3, 1)])
def test_rhs_3d_matches_general(alpha, rng):
    index = MultiIndex(alpha)
    y = rng.normal(size=(6, 9))
    np.testing.assert_allclose(oracle._rhs_3d(*alpha, y), oracle._rhs_general(index, y),
                               rtol=1e-15, atol=1e-15)
    yc = y + 1j * rng.normal(size=y.shape)
    np.testing.assert_allclose(oracle._rhs_3d(*alpha, yc), oracle._rhs_general(index, yc),
                               rtol=1e-14, atol=1e-14)
