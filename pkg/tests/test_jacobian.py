from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from grushin import jacobian, synthesis
from grushin.gentrig import DomainError, gsincos, grushin_params, pi_alpha
from grushin.geoflow import GeodesicPath, MultiIndex, random_angles


def _path(alpha, x0, phi):
    return GeodesicPath.from_spherical(alpha, np.asarray(x0, float), np.asarray(phi, float))


def test_phase_values():
    path = _path((2, 1), [0.8, 1.3, 0.0], [1.0, 2.0])
    assert jacobian.phase(path, 0, 0.0) == pytest.approx(1.0)
    assert jacobian.phase(path, 0, 1.7) == pytest.approx(path.omega[0] * 1.7 + 1.0)
    for j in (0, 1):
        tau = synthesis.tau_j(path, j)
        if math.isfinite(tau):
            moved = abs(jacobian.phase(path, j, tau) - path.phi[j])
            assert moved == pytest.approx(pi_alpha(path.index.alpha[j]), rel=1e-10)
    with pytest.raises(DomainError):
        jacobian.phase(_path((1, 0), [1.0, 1.0, 0.0], [1.0, 1.0]), 1, 1.0)


def test_s_factor_quarter_period_zero():
    a = 2
    path = _path((a, 1), [0.9, 1.1, 0.0], [0.5 * pi_alpha(a), 1.0])
    tau1 = synthesis.tau_j(path, 0)
    # at a quarter period S_j = cos(Q_j), whose first zero after t = 0 is at tau_j
    assert jacobian.s_factor(path, 0, tau1) == pytest.approx(0.0, abs=1e-12)
    ts = np.linspace(0.0, tau1, 200)[1:-1]
    assert np.all(np.asarray(jacobian.s_factor(path, 0, ts)) < 0)


def test_s_factor_outside_J():
    path = _path((1, 0, 2), [1.0, 0.5, 1.2, 0.0], [1.0, 0.7, 1.5])
    assert jacobian.s_factor(path, 1, 1.0) == pytest.approx(float(path.integrals(1.0)[1]))


@st.composite
def interior_cases(draw):
    index = MultiIndex(draw(st.sampled_from([(1,), (3,), (1, 1), (2, 3), (1, 0, 2), (2, 0, 1, 0)])))
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    x0 = rng.uniform(0.4, 1.6, index.dim) * rng.choice([-1.0, 1.0], index.dim)
    phi = random_angles(index, rng, margin=0.05)
    return index, x0, phi


@given(interior_cases())
def test_no_early_zero(case):
    index, x0, phi = case
    path = _path(index, x0, phi)
    tau = synthesis.cut_report(path).tau
    assert math.isfinite(tau)
    ts = np.linspace(0.0, tau, 402)[1:-1]
    for j in range(index.n):
        S = np.asarray(jacobian.s_factor(path, j, ts))
        assert np.all(S > 0) or np.all(S < 0)


@given(interior_cases(), st.floats(0.1, 0.9))
def test_factorization_matches_finite_differences(case, frac):
    index, x0, phi = case
    path = _path(index, x0, phi)
    t = frac * min(synthesis.cut_report(path).tau, 4.0)
    d = jacobian.det_spherical(path, t).determinant
    ref = jacobian.det_fd(index, x0, t, phi, richardson=True)
    assert d == pytest.approx(ref, rel=1e-6, abs=1e-12)


def test_richardson_second_order():
    index = MultiIndex((2, 1))
    x0, phi, t = np.array([0.8, 1.1, 0.3]), np.array([1.0, 2.2]), 1.3
    exact = jacobian.det_spherical(_path(index, x0, phi), t).determinant
    errs = [abs(jacobian.det_fd(index, x0, t, phi, step=h) - exact) for h in (4e-3, 2e-3, 1e-3)]
    rates = [math.log2(errs[k] / errs[k + 1]) for k in range(2)]
    assert all(1.7 <= r <= 2.3 for r in rates)
    rich = abs(jacobian.det_fd(index, x0, t, phi, step=2e-3, richardson=True) - exact)
    assert rich < errs[1] / 50


def test_fd_rejects_small_t():
    with pytest.raises(DomainError):
        jacobian.det_fd((1,), [1.0, 0.0], 1e-7, [1.0])


def test_sign_bookkeeping():
    # x0 < 0 makes omega_0 < 0, so S_0 > 0 for small t
    path = _path((1, 0), [-1.0, 1.0, 0.0], [2.0, 1.0])
    f = jacobian.det_spherical(path, 0.5)
    assert np.all(f.S > 0)
    assert f.gphi > 0
    assert f.determinant > 0
    # g < 0 with both factors positive gives D < 0
    neg = _path((0, 1), [0.4, -1.0, 0.0], [1.2, 0.9])
    f = jacobian.det_spherical(neg, 0.3)
    assert f.gphi < 0 and np.all(f.S > 0) and f.determinant < 0
    both = _path((1, 1), [1.0, 1.0, 0.0], [2.0, 1.0])
    f = jacobian.det_spherical(both, 0.5)
    assert np.sign(f.determinant) == np.sign(f.gphi) * np.prod(np.sign(f.S))


def test_volume_element_classical():
    path = _path((1, 1), [1.0, 1.0, 0.0], [1.1, 2.0])
    t = 0.7
    expected = t**2 * math.sin(1.1)
    assert jacobian.cartesian_volume_factor_3d(path, t) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("side", [0, 1])
@pytest.mark.parametrize("ab, x0, phi1, t", [
    ((2, 1), [0.9, 1.2, 0.0], 1.1, 0.8),
    ((1, 1), [-1.3, 0.7, 0.2], 2.0, 1.5),
    ((3, 1), [0.6, -1.0, 0.0], 0.7, 0.5),
])
def test_cartesian_limit_beta_one(side, ab, x0, phi1, t):
    x0 = np.array(x0)
    target = jacobian.det_cartesian_3d_limit(ab, x0, phi1, t, side=side)
    base = 0.0 if side == 0 else pi_alpha(ab[1])
    sign = 1.0 if side == 0 else -1.0
    vals = {h: jacobian.det_cartesian_3d(_path(ab, x0, [phi1, base + sign * h]), t)
            for h in (1.6e-2, 8e-3)}
    # the remainder is O(h^2); smaller steps lose digits to cancellation
    extrap = (4 * vals[8e-3] - vals[1.6e-2]) / 3
    assert extrap == pytest.approx(target, rel=1e-6)
    assert math.isfinite(target) and target != 0


@pytest.mark.parametrize("ab", [(1, 2), (2, 2), (3, 3)])
def test_cartesian_limit_higher_beta(ab):
    x0 = np.array([1.1, 0.9, 0.0])
    phi1, t = 1.0, 0.6
    target = jacobian.det_cartesian_3d_limit(ab, x0, phi1, t)
    near = jacobian.det_cartesian_3d(_path(ab, x0, [phi1, 1e-2]), t)
    assert near == pytest.approx(target, rel=0.05)


def test_upsilon_forms():
    s = np.linspace(0, 5, 11)
    assert np.allclose(jacobian.upsilon_general(1, 0.7, s), jacobian.upsilon(1, 0.7, s) / 3)


@pytest.mark.parametrize("beta", [1, 2, 3])
@pytest.mark.parametrize("eps", [0.5, -0.5, 2.0, -2.0])
def test_upsilon_no_positive_zero(beta, eps):
    s = np.linspace(1e-6, 100, 200_001)
    vals = jacobian.upsilon_general(beta, eps, s)
    assert np.all(vals > 0) or np.all(vals < 0)


def test_first_conjugate_time_quarter():
    path = _path((1, 2), [1.0, 0.7, 0.0], [0.5 * pi_alpha(1), 0.4])
    rep = synthesis.cut_report(path)
    assert rep.argmin == (0,) and rep.conjugate_at_tau
    t_con, info = jacobian.first_conjugate_time(path)
    assert t_con == rep.tau and info["reason"] == "quarter period"


def test_first_conjugate_time_straight_line():
    path = _path((1, 1), [1.0, 1.0, 0.0], [0.0, 1.0])
    t_con, _ = jacobian.first_conjugate_time(path)
    assert t_con == math.inf


def test_first_conjugate_time_generic():
    path = _path((1, 1), [1.0, 1.0, 0.0], [1.0, 1.0])
    rep = synthesis.cut_report(path)
    t_con, info = jacobian.first_conjugate_time(path)
    assert rep.tau < t_con < rep.tau + 2 * pi_alpha(1) / abs(path.omega[rep.argmin[0]]) * 4
    assert info["reason"] == "sign change"
    j = [k for k in range(2) if abs(jacobian.s_factor(path, k, t_con)) < 1e-9]
    assert j


def test_sparse4_expansion():
    rng = np.random.default_rng(3)
    for a1, a3 in [(1, 1), (2, 1), (1, 3)]:
        index = MultiIndex((a1, 0, a3, 0))
        x0 = rng.uniform(0.5, 1.5, 5)
        path = _path(index, x0, random_angles(index, rng, margin=0.1))
        t = 0.9
        direct, expanded = jacobian.sparse4_det(path, t)
        factored = jacobian.det_spherical(path, t).determinant
        assert direct == pytest.approx(factored, rel=1e-10)
        assert expanded == pytest.approx(factored, rel=1e-10)
        assert np.sum(jacobian.sparse4_terms(path, t)) == pytest.approx(1.0, abs=1e-13)
        fd = jacobian._jacobian_fd(index, x0, t, path.phi, 1e-6)
        assert np.allclose(jacobian.sparse4_jacobian(path, t), fd, atol=1e-7)
    with pytest.raises(DomainError):
        jacobian.sparse4_jacobian(_path((1, 1), [1, 1, 0], [1, 1]), 1.0)


@given(st.integers(1, 5), st.floats(0.02, 0.98))
def test_tan_equation_only_trivial_root(a, frac):
    pa = pi_alpha(a)
    phi = frac * pa
    if abs(phi - 0.5 * pa) < 1e-3 * pa:
        return
    roots = jacobian.tan_roots(a, phi, samples=4001)
    assert len(roots) >= 1
    assert all(abs(r) < 1e-8 for r in roots)
