from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from grushin import gentrig
from grushin.gentrig import DomainError, TrigParams

# 40-digit mpmath quadrature of 2 * int_0^1 (1 - t^a)^(-1/b) dt, written in w = 1 - t
# so that 1 - t^a is formed without cancellation
HALF_PERIODS = {
    (2, 2): math.pi,
    (4, 2): 2.6220575542921198105,
    (16, 2): 2.168204838178411993,
    (3, 1.5): 3.5332775005708950079,
    (1.5, 3): 2.737853623918902908,
}
# (a, b, x) -> s with F_{a,b}(s) = x, mpmath findroot on the quadrature
SIN_VALUES = {
    (4, 2, 0.7): 0.68352258419179198963,
    (16, 2, 1.0): 0.97351601697644160681,
    (3, 1.5, 0.4): 0.39578475189610892839,
    (6, 2, 0.9): 0.86748638261783183789,
}

params_st = st.tuples(st.sampled_from([2.0, 3.0, 4.0, 6.0, 8.0, 16.0]),
                      st.sampled_from([1.5, 2.0, 3.0])).map(lambda ab: TrigParams(*ab))


@pytest.mark.parametrize("ab, value", HALF_PERIODS.items())
def test_half_period_against_quadrature(ab, value):
    assert gentrig.half_period(TrigParams(*ab)) == pytest.approx(value, rel=1e-14)


def test_half_period_grushin_specialization():
    assert gentrig.pi_alpha(1) == gentrig.half_period(TrigParams(2, 2))
    assert gentrig.pi_alpha(8) == gentrig.half_period(TrigParams(16, 2))


@pytest.mark.parametrize("a, b", [(0.5, 2), (2, 1), (2, 0.5), (float("nan"), 2)])
def test_params_domain(a, b):
    with pytest.raises(DomainError):
        TrigParams(a, b)


def test_forward_values():
    assert gentrig.forward(TrigParams(2, 2), 0.0) == 0.0
    assert gentrig.forward(TrigParams(2, 2), 1.0) == pytest.approx(math.pi / 2, abs=1e-15)
    # tanh-sinh quadrature, 30 digits
    assert gentrig.forward(TrigParams(8, 2), 0.5) == pytest.approx(0.50010867561340842871, abs=1e-14)
    with pytest.raises(DomainError):
        gentrig.forward(TrigParams(2, 2), 1.5)


@pytest.mark.parametrize("key, value", SIN_VALUES.items())
def test_gsin_against_quadrature_inverse(key, value):
    a, b, x = key
    assert gentrig.gsin(TrigParams(a, b), x) == pytest.approx(value, abs=1e-14)


def test_trivial_values():
    p22 = TrigParams(2, 2)
    assert gentrig.gsin(p22, math.pi / 2) == pytest.approx(1.0, abs=1e-15)
    assert gentrig.gcos(p22, math.pi) == pytest.approx(-1.0, abs=1e-15)
    for a in (2, 4, 16):
        params = TrigParams(a, 2)
        assert gentrig.gsin(params, 0.0) == 0.0
        assert gentrig.gcos(params, 0.0) == 1.0


def test_gsin_round_trip_quarter():
    p = TrigParams(4, 2)
    x = gentrig.half_period(p) / 4
    assert gentrig.forward(p, gentrig.gsin(p, x)) == pytest.approx(x, abs=1e-12)


def test_gcos_is_derivative_of_gsin():
    p = TrigParams(8, 2)
    h = 1e-5
    fd = (gentrig.gsin(p, 0.3 + h) - gentrig.gsin(p, 0.3 - h)) / (2 * h)
    assert gentrig.gcos(p, 0.3) == pytest.approx(fd, abs=1e-7)


def test_classical_case_matches_numpy():
    x = np.linspace(-20, 20, 2001)
    s, c = gentrig.gsincos(TrigParams(2, 2), x)
    assert np.max(np.abs(s - np.sin(x))) < 1e-13
    assert np.max(np.abs(c - np.cos(x))) < 1e-13


def test_eta_values():
    assert gentrig.eta(1, 0.0) == 0.0
    assert gentrig.eta(1, math.pi) == pytest.approx(math.pi, abs=1e-15)
    for beta in (1, 2, 5):
        half = gentrig.pi_alpha(beta)
        assert gentrig.eta(beta, half / 2) == pytest.approx(half / 2, abs=1e-14)


def test_eta_derivative():
    beta, x, h = 3, 0.8, 1e-5
    fd = (gentrig.eta(beta, x + h) - gentrig.eta(beta, x - h)) / (2 * h)
    s = gentrig.gsin(gentrig.grushin_params(beta), x)
    assert fd == pytest.approx((beta + 1) * s ** (2 * beta), rel=1e-8)


def test_rho():
    assert gentrig.rho(1, -3.0) == -3.0
    assert gentrig.rho(3, -2.0) == -8.0
    assert gentrig.rho(2.5, 0.0) == 0.0
    with pytest.raises(DomainError):
        gentrig.rho(0.5, 1.0)


def test_garcsin():
    assert gentrig.garcsin(2, 0.0) == 0.0
    assert gentrig.garcsin(3, 1.0) == pytest.approx(gentrig.pi_alpha(3) / 2, abs=1e-15)
    assert gentrig.garcsin(1, 0.5) == pytest.approx(math.pi / 6, abs=1e-15)


def test_tan_cot_consistent():
    p = TrigParams(4, 2)
    x = 0.9
    s, c = gentrig.gsincos(p, x)
    assert gentrig.gtan(p, x) == pytest.approx(s / c)
    assert gentrig.gcot(p, x) == pytest.approx(c / s)


def test_array_and_scalar_kinds():
    p = TrigParams(4, 2)
    assert isinstance(gentrig.gsin(p, 0.5), float)
    assert gentrig.gsin(p, np.array([0.5, 1.0])).shape == (2,)


@given(params_st, st.floats(-50, 50, allow_nan=False))
def test_pythagorean_identity(params, x):
    s, c = gentrig.gsincos(params, x)
    assert abs(abs(s) ** params.a + abs(c) ** params.b - 1.0) <= 1e-10


@given(params_st, st.floats(-50, 50, allow_nan=False))
def test_symmetries(params, x):
    half = gentrig.half_period(params)
    s = gentrig.gsin(params, x)
    assert gentrig.gsin(params, -x) == pytest.approx(-s, abs=1e-12)
    assert gentrig.gsin(params, x + 2 * half) == pytest.approx(s, abs=1e-11)
    assert gentrig.gsin(params, half - x) == pytest.approx(s, abs=1e-11)
    assert gentrig.gcos(params, -x) == pytest.approx(gentrig.gcos(params, x), abs=1e-11)


@given(params_st, st.floats(0.0, 0.9))
def test_round_trip(params, x):
    # forward is ill-conditioned at the quarter period, where F' blows up
    quarter = gentrig.half_period(params) / 2
    t = x * quarter
    assert gentrig.forward(params, gentrig.gsin(params, t)) == pytest.approx(t, abs=1e-12)


@given(params_st, st.floats(0.0, 1.0))
def test_inverse_round_trip(params, s):
    assert gentrig.gsin(params, gentrig.forward(params, s)) == pytest.approx(s, abs=1e-13)


@given(st.sampled_from([1, 2, 3, 4]), st.floats(-10, 10), st.floats(-1, 1))
def test_gangle_recovers_angle(beta, x, scale):
    params = gentrig.grushin_params(beta)
    s, c = gentrig.gsincos(params, x)
    ang = gentrig.gangle(params, s, c)
    s2, c2 = gentrig.gsincos(params, ang)
    assert s2 == pytest.approx(s, abs=1e-12) and c2 == pytest.approx(c, abs=1e-12)
