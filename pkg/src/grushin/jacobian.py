"""Jacobian determinant of the exponential map in ``(t, phi)`` coordinates.

The determinant factors as ``D(t, phi) = g(phi) prod_j S_j(t, phi)`` with

* ``S_j = I_j(t)`` when ``a_j = 0``,
* ``S_j = cos(Q_j) (cot(phi_j) omega_j I_j + 1) - cot(phi_j) sin(Q_j)`` otherwise,
  where ``Q_j = omega_j I_j + phi_j``,

and a prefactor depending only on the angles,

    g(phi) = (-1)^{|J|} prod_{j < n, a_j = 0} prod_{i < j} delta_i
             * prod_{j in J} |x0_j / sin(phi_j)|^{a_j + 1}.

Zeros of ``D`` in ``t`` are conjugate times.  :func:`det_fd` is an
independent finite-difference oracle for the factorization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .gentrig import DomainError, grushin_params, gsincos, pi_alpha
from .geoflow import GeodesicPath

__all__ = [
    "JacobianFactors",
    "phase",
    "s_factor",
    "g_prefactor",
    "det_spherical",
    "det_fd",
    "det_cartesian_3d",
    "cartesian_volume_factor_3d",
    "det_cartesian_3d_limit",
    "upsilon",
    "upsilon_general",
    "first_conjugate_time",
    "tan_residual",
    "tan_roots",
    "sparse4_jacobian",
    "sparse4_terms",
    "sparse4_det",
]


@dataclass(frozen=True)
class JacobianFactors:
    S: np.ndarray
    gphi: float
    Q: np.ndarray  # nan where a_j = 0
    determinant: float


def _require_spherical(path: GeodesicPath) -> None:
    if path.phi is None:
        raise DomainError("determinant factors need a path built from spherical angles")


def phase(path: GeodesicPath, j: int, t):
    """``Q_j(t) = omega_j I_j(t) + phi_j`` for ``j`` in ``J``."""
    if path.index.alpha[j] == 0:
        raise DomainError(f"index {j} is not in J")
    return path.phase(j, t)


def s_factor(path: GeodesicPath, j: int, t):
    """The factor ``S_j(t)``.

    The cotangent is kept as ``cos/sin`` so the expression is
    ``[cos(Q)(c omega I + s) - c sin(Q)] / s`` with ``(s, c)`` the sine and
    cosine of ``phi_j``; at a quarter period ``c = 0`` and this is exactly
    ``cos(Q)``.
    """
    _require_spherical(path)
    a = path.index.alpha[j]
    I = path.integrals(t)[j]
    if a == 0:
        return float(I) if np.ndim(I) == 0 else I
    if not path.is_trig(j):
        raise DomainError(f"angle {j} lies on the chart boundary (sine vanishes)")
    params = grushin_params(a)
    s, c = gsincos(params, float(path.phi[j]))
    wI = path.omega[j] * I
    sq, cq = gsincos(params, wI + path.phi[j])
    out = (cq * (c * wI + s) - c * sq) / s
    return float(out) if np.ndim(out) == 0 else out


def g_prefactor(path: GeodesicPath) -> float:
    """Angle-only prefactor ``g(phi)`` of the factorization."""
    _require_spherical(path)
    index = path.index
    delta = path.delta()
    g = (-1.0) ** len(index.J)
    for j, a in enumerate(index.alpha):
        if a == 0:
            g *= float(np.prod(delta[:j]))
        else:
            s = gsincos(grushin_params(a), float(path.phi[j]))[0]
            g *= abs(path.x0[j] / s) ** (a + 1)
    return g


def det_spherical(path: GeodesicPath, t: float) -> JacobianFactors:
    """Factored determinant ``g(phi) prod S_j`` at time ``t``."""
    _require_spherical(path)
    S = np.array([s_factor(path, j, t) for j in range(path.n)])
    Q = np.array([path.phase(j, t) if path.index.alpha[j] else np.nan for j in range(path.n)])
    g = g_prefactor(path)
    return JacobianFactors(S, g, Q, g * float(np.prod(S)))


def _exp_map(index, x0, t, phi):
    return GeodesicPath.from_spherical(index, x0, phi)(t)


def _jacobian_fd(index, x0, t, phi, h_rel):
    z = np.concatenate([[t], phi])
    cols = []
    for k in range(z.size):
        h = h_rel * max(1.0, abs(z[k]))
        zp, zm = z.copy(), z.copy()
        zp[k] += h
        zm[k] -= h
        fp = _exp_map(index, x0, zp[0], zp[1:])
        fm = _exp_map(index, x0, zm[0], zm[1:])
        cols.append((fp - fm) / (2 * h))
    return np.stack(cols, axis=1)


def det_fd(index, x0, t: float, phi, step: float = 1e-5, richardson: bool = False) -> float:
    """Central-difference Jacobian of ``(t, phi) -> exp(t p0(phi))`` and its determinant.

    With ``richardson`` the Jacobian entries are extrapolated from steps
    ``h`` and ``h/2``.  The determinant is taken by pivoted LU.
    """
    phi = np.asarray(phi, dtype=float)
    if t - step * max(1.0, abs(t)) < 0:
        raise DomainError("t too close to 0 for a central difference")
    Jm = _jacobian_fd(index, x0, t, phi, step)
    if richardson:
        J2 = _jacobian_fd(index, x0, t, phi, step / 2)
        Jm = (4.0 * J2 - Jm) / 3.0
    return float(np.linalg.det(Jm))


def cartesian_volume_factor_3d(path: GeodesicPath, t: float) -> float:
    """``|d(u0, v0, w0) / d(t, phi1, phi2)|`` for the ray ``t p0(phi)`` in G^3."""
    _require_spherical(path)
    a, b = path.index.alpha
    x0, y0 = path.x0[0], path.x0[1]
    s1 = gsincos(grushin_params(a), float(path.phi[0]))[0]
    s2 = gsincos(grushin_params(b), float(path.phi[1]))[0]
    return t**2 * a * b * abs(s1) ** (2 * a - 1) * abs(s2) ** (b - 1) / (x0 ** (2 * a) * abs(y0) ** b)


def det_cartesian_3d(path: GeodesicPath, t: float) -> float:
    """Jacobian determinant of the exponential map in Cartesian covector coordinates (n = 2)."""
    if path.n != 2:
        raise DomainError("det_cartesian_3d is defined for n = 2")
    if t <= 0:
        raise DomainError("t must be positive")
    return det_spherical(path, t).determinant / cartesian_volume_factor_3d(path, t)


def upsilon(beta: float, eps: float, s):
    """``beta (eps s + 1)^3 + beta eps s - beta (eps s + 1)``, i.e. ``beta ((eps s + 1)^3 - 1)``."""
    s = np.asarray(s, dtype=float)
    u = eps * s + 1.0
    return beta * u**3 + beta * eps * s - beta * u


def upsilon_general(beta: int, eps: float, s):
    """``beta ((eps s + 1)^{2 beta + 1} - 1) / (2 beta + 1)``; equals ``upsilon / 3`` for ``beta = 1``."""
    s = np.asarray(s, dtype=float)
    return beta * ((eps * s + 1.0) ** (2 * beta + 1) - 1.0) / (2 * beta + 1)


def det_cartesian_3d_limit(index, x0, phi1: float, t: float, *, side: int = 0) -> float:
    """Limit of :func:`det_cartesian_3d` as ``phi2 -> 0`` (``side=0``) or ``pi_beta`` (``side=1``).

    Expanding ``S_2`` for small ``sin(phi2)`` gives
    ``S_2 ~ -sin(phi2)^{2b} upsilon_general(b, eps, I_1(t))`` with
    ``eps = delta_1 / y0``; at ``phi2 -> pi_b`` the sign of ``eps`` and of the
    factor flip.  The powers of ``sin(phi2)`` cancel against the volume factor.
    """
    a, b = index.alpha if hasattr(index, "alpha") else tuple(index)
    x0 = np.asarray(x0, dtype=float)
    pb = pi_alpha(b)
    # x-motion does not depend on phi2, so any interior phi2 gives the same S_1 and I_1
    probe = GeodesicPath.from_spherical((a, b), x0, [phi1, 0.5 * pb])
    S1 = s_factor(probe, 0, t)
    I1 = float(probe.integrals(t)[1])
    s1 = gsincos(grushin_params(a), phi1)[0]
    sgn = 1.0 if side == 0 else -1.0
    eps = sgn * float(probe.delta()[0]) / x0[1]
    s2_factor = -sgn * float(upsilon_general(b, eps, I1))
    first = abs(x0[0] / s1) ** (a + 1) * S1 * abs(x0[1]) ** (b + 1)
    inv_volume = x0[0] ** (2 * a) * abs(x0[1]) ** b / (t**2 * a * b * abs(s1) ** (2 * a - 1))
    return first * s2_factor * inv_volume


def first_conjugate_time(path: GeodesicPath, *, steps_per_tau: int = 50,
                         horizon: float = 10.0) -> tuple[float, dict]:
    """First positive zero of ``D(t, phi)``; returns ``(t_con, info)``.

    No factor vanishes before ``tau``.  When some ``phi_j`` sits at a quarter
    period with ``tau = tau_j`` the answer is ``tau`` itself.  Otherwise the
    factors are scanned past ``tau`` with step ``tau / steps_per_tau`` up to
    ``horizon * tau``; ``inf`` is returned with the horizon when no sign
    change shows up.
    """
    from .synthesis import cut_report

    _require_spherical(path)
    rep = cut_report(path)
    tau = rep.tau
    if not math.isfinite(tau):
        return math.inf, {"reason": "straight line", "tau": tau}
    if rep.conjugate_at_tau:
        return tau, {"reason": "quarter period", "tau": tau}
    J = [j for j in path.index.J if path.is_trig(j)]
    dt = tau / steps_per_tau
    t_prev = tau
    prev = np.array([s_factor(path, j, t_prev) for j in J])
    t_end = horizon * tau
    while t_prev < t_end:
        t_next = min(t_prev + dt, t_end)
        cur = np.array([s_factor(path, j, t_next) for j in J])
        flips = [k for k in range(len(J)) if prev[k] * cur[k] <= 0]
        if flips:
            roots = []
            for k in flips:
                j = J[k]
                f = lambda s, j=j: s_factor(path, j, s)
                if cur[k] == 0:
                    roots.append(t_next)
                else:
                    roots.append(optimize.brentq(f, t_prev, t_next, xtol=1e-12 * tau, rtol=1e-14))
            return min(roots), {"reason": "sign change", "tau": tau}
        t_prev, prev = t_next, cur
    return math.inf, {"reason": "no sign change", "tau": tau, "horizon": t_end}


def tan_residual(alpha: int, phi: float, zeta):
    """``tan(zeta + phi) - tan(phi) - zeta`` in the ``sin_alpha`` family."""
    params = grushin_params(alpha)
    s1, c1 = gsincos(params, np.asarray(zeta, dtype=float) + phi)
    s0, c0 = gsincos(params, phi)
    with np.errstate(divide="ignore", invalid="ignore"):
        return s1 / c1 - s0 / c0 - np.asarray(zeta, dtype=float)


def sparse4_jacobian(path: GeodesicPath, t: float) -> np.ndarray:
    """Closed-form Jacobian of ``(t, phi) -> x(t; phi)`` for ``alpha = (a1, 0, a3, 0)``.

    Rows are ``x_0..x_4``, columns ``t, phi_0..phi_3``.  Entries are written
    with the factors ``S_0``, ``S_2`` pulled out, using ``K_j = |x0_j / sin(phi_j)|^{a_j+1}``
    and ``r_j = rho_{a_j}(sin(phi_j) / x0_j)``.
    """
    _require_spherical(path)
    if path.n != 4:
        raise DomainError("sparse4_jacobian needs alpha = (a1, 0, a3, 0) with a1, a3 > 0")
    a1, z1, a3, z3 = path.index.alpha
    if z1 or z3 or not (a1 and a3):
        raise DomainError("sparse4_jacobian needs alpha = (a1, 0, a3, 0) with a1, a3 > 0")
    x0 = path.x0
    phi = path.phi
    p1, p3 = grushin_params(a1), grushin_params(a3)
    s1 = gsincos(p1, float(phi[0]))[0]
    s3 = gsincos(p3, float(phi[2]))[0]
    sq1, cq1 = gsincos(p1, float(path.phase(0, t)))
    sq3, cq3 = gsincos(p3, float(path.phase(2, t)))
    s2, c2 = math.sin(phi[1]), math.cos(phi[1])
    s4, c4 = math.sin(phi[3]), math.cos(phi[3])
    S1, S3 = s_factor(path, 0, t), s_factor(path, 2, t)
    I = path.integrals(t)
    I2, I4 = float(I[1]), float(I[3])
    w1, w3 = s1 / x0[0], s3 / x0[2]
    K1, K3 = abs(1 / w1) ** (a1 + 1), abs(1 / w3) ** (a3 + 1)
    r1, r3 = abs(w1) ** (a1 - 1) * w1, abs(w3) ** (a3 - 1) * w3
    e1, e3 = abs(sq1) ** (2 * a1), abs(sq3) ** (2 * a3)
    M = np.zeros((5, 5))
    M[0, 0] = cq1
    M[0, 1] = S1 / w1
    M[1, 0] = c2 * w1 * K1 * e1
    M[1, 1] = -c2 * K1 * cq1 * S1
    M[1, 2] = -s2 * r1 * I2
    M[2, 0] = s2 * w1 * K1 * cq3 * e1
    M[2, 1] = -s2 * K1 * cq3 * cq1 * S1
    M[2, 2] = c2 * r1 * cq3 * I2
    M[2, 3] = S3 / w3
    for row, trig in ((3, c4), (4, s4)):
        M[row, 0] = trig * s2 * w1 * K1 * w3 * K3 * e1 * e3
        M[row, 1] = -trig * K1 * K3 * s2 * w3 * cq1 * e3 * S1
        M[row, 2] = trig * K3 * w3 * r1 * c2 * e3 * I2
        M[row, 3] = -trig * K3 * cq3 * S3
    M[3, 4] = -s4 * s2 * r1 * r3 * I4
    M[4, 4] = c4 * s2 * r1 * r3 * I4
    return M


def sparse4_terms(path: GeodesicPath, t: float) -> np.ndarray:
    """The ``2^4`` normalized terms of the Leibniz expansion for ``alpha = (a1, 0, a3, 0)``.

    Each term picks one of ``cos^2(Q), sin^{2a}(Q)`` for the two trig indices
    and one of ``cos^2, sin^2`` of ``phi_1`` and ``phi_3``; by the generalized
    Pythagorean identity they sum to 1.
    """
    a1, _, a3, _ = path.index.alpha
    sq1, cq1 = gsincos(grushin_params(a1), float(path.phase(0, t)))
    sq3, cq3 = gsincos(grushin_params(a3), float(path.phase(2, t)))
    f1 = (cq1**2, abs(sq1) ** (2 * a1))
    f2 = (math.cos(path.phi[1]) ** 2, math.sin(path.phi[1]) ** 2)
    f3 = (cq3**2, abs(sq3) ** (2 * a3))
    f4 = (math.cos(path.phi[3]) ** 2, math.sin(path.phi[3]) ** 2)
    return np.array([a * b * c * d for a in f1 for b in f2 for c in f3 for d in f4])


def sparse4_det(path: GeodesicPath, t: float) -> tuple[float, float]:
    """``(det of sparse4_jacobian, S_0 S_2 g I_1 I_3 * sum(sparse4_terms))``."""
    M = sparse4_jacobian(path, t)
    I = path.integrals(t)
    expanded = (s_factor(path, 0, t) * s_factor(path, 2, t) * g_prefactor(path)
                * float(I[1]) * float(I[3]) * float(np.sum(sparse4_terms(path, t))))
    return float(np.linalg.det(M)), expanded


def tan_roots(alpha: int, phi: float, *, samples: int = 20001, edge: float = 1e-6) -> list[float]:
    """Roots of :func:`tan_residual` in ``zeta`` over ``(-pi_a + edge, pi_a - edge)``.

    Sign changes on a grid are kept only where ``cos_a(zeta + phi)`` keeps its
    sign, so poles of the tangent are not mistaken for roots; each is refined
    with Brent's method.
    """
    pa = pi_alpha(alpha)
    zeta = np.linspace(-pa + edge, pa - edge, samples)
    f = tan_residual(alpha, phi, zeta)
    c = gsincos(grushin_params(alpha), zeta + phi)[1]
    roots = [float(z) for z in zeta[f == 0]]
    sgn = np.sign(f)
    for k in np.nonzero((sgn[:-1] * sgn[1:] < 0) & (np.sign(c[:-1]) == np.sign(c[1:])))[0]:
        g = lambda z: float(tan_residual(alpha, phi, z))
        roots.append(optimize.brentq(g, zeta[k], zeta[k + 1], xtol=1e-15))
    return sorted(roots)
