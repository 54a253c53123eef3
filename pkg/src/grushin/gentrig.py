"""Generalized trigonometric functions sin_{a,b}, cos_{a,b} and friends.

``sin_{a,b}`` is the inverse of

    F_{a,b}(x) = int_0^x (1 - t^a)^(-1/b) dt,   0 <= x <= 1,

extended to the real line by reflection about the quarter period, oddness and
``2*pi_{a,b}`` periodicity.  The Grushin spaces only ever use ``b = 2`` and
``a = 2*alpha`` for a positive integer ``alpha``; the helpers taking a single
exponent (``eta``, ``garcsin``, ``pi_alpha``) work in that specialization.

All functions accept scalars or numpy arrays and return the same kind.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy import special

__all__ = [
    "DomainError",
    "TrigParams",
    "grushin_params",
    "half_period",
    "pi_alpha",
    "forward",
    "gsin",
    "gcos",
    "gsincos",
    "gtan",
    "gcot",
    "eta",
    "rho",
    "garcsin",
    "gangle",
]

_EPS = np.finfo(float).eps
# Newton polish on the incomplete-beta variable; the betaincinv seed is
# already within a few ulp so this rarely takes more than one pass.
_NEWTON_ITERS = 6
_ARG_TOL = 1e-14


class DomainError(ValueError):
    """Argument outside the domain of a generalized trigonometric function."""


@dataclass(frozen=True)
class TrigParams:
    """Exponents ``(a, b)`` of ``F_{a,b}``.  Requires ``a >= 1`` and ``b > 1``."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not (self.a >= 1.0):
            raise DomainError(f"exponent a must be >= 1, got {self.a}")
        # b == 1 makes the half period infinite
        if not (self.b > 1.0):
            raise DomainError(f"exponent b must be > 1, got {self.b}")


def grushin_params(alpha: float) -> TrigParams:
    """``sin_alpha := sin_{2 alpha, 2}``."""
    if alpha < 1:
        raise DomainError(f"Grushin exponent must be >= 1, got {alpha}")
    return TrigParams(2.0 * alpha, 2.0)


@dataclass(frozen=True)
class _Consts:
    p: float  # 1/a
    q: float  # 1 - 1/b
    quarter: float  # F(1) = pi_{a,b} / 2
    pi_hi: float
    pi_lo: float
    # Cody-Waite split of 2*pi_hi: first part has 27 trailing zero bits
    two_pi_1: float
    two_pi_2: float


@lru_cache(maxsize=None)
def _consts(params: TrigParams) -> _Consts:
    a, b = params.a, params.b
    p, q = 1.0 / a, 1.0 - 1.0 / b
    pi_hi = 2.0 / a * math.exp(special.betaln(p, q))
    with mpmath.workdps(40):
        exact = 2 * mpmath.beta(mpmath.mpf(p), mpmath.mpf(q)) / mpmath.mpf(a)
        pi_hi_exact = float(exact)
        pi_lo = float(exact - mpmath.mpf(pi_hi_exact))
    # prefer the correctly rounded value from the high-precision evaluation
    if abs(pi_hi_exact - pi_hi) <= 8 * _EPS * pi_hi:
        pi_hi = pi_hi_exact
    two_pi = 2.0 * pi_hi
    m, e = math.frexp(two_pi)
    two_pi_1 = math.ldexp(math.floor(math.ldexp(m, 26)), e - 26)
    two_pi_2 = two_pi - two_pi_1
    return _Consts(p, q, pi_hi / 2.0, pi_hi, pi_lo, two_pi_1, two_pi_2)


def half_period(params: TrigParams) -> float:
    """``pi_{a,b} = 2 F_{a,b}(1) = (2/a) B(1/a, 1 - 1/b)``."""
    return _consts(params).pi_hi


def pi_alpha(alpha: float) -> float:
    """Half period of ``sin_alpha``."""
    return half_period(grushin_params(alpha))


def _wrap(value, like):
    if np.ndim(like) == 0 and np.ndim(value) == 0:
        return float(value)
    return value


def forward(params: TrigParams, x):
    """``F_{a,b}(x)`` for ``x`` in ``[0, 1]``."""
    xa = np.asarray(x, dtype=float)
    if np.any(~((xa >= 0.0) & (xa <= 1.0))):
        raise DomainError("forward() requires 0 <= x <= 1")
    c = _consts(params)
    with np.errstate(divide="ignore"):
        s = xa ** params.a
        # 1 - x^a without cancellation near x = 1
        cs = -np.expm1(params.a * np.log(xa))
    low = c.quarter * special.betainc(c.p, c.q, s)
    high = c.quarter - c.quarter * special.betainc(c.q, c.p, cs)
    out = np.where(s <= 0.5, low, high)
    return _wrap(out, x)


def _polish(target, seed, p, q, scale):
    """Solve ``scale * I_S(p, q) = target`` for S in [0, 1].

    Safeguarded Newton: a step leaving the current bracket is replaced by
    bisection.  ``scale * I`` has derivative ``scale * S^(p-1) (1-S)^(q-1) / B``.
    """
    beta_pq = special.beta(p, q)
    s = np.clip(seed, 0.0, 1.0)
    lo = np.zeros_like(s)
    hi = np.ones_like(s)
    active = (s > 0.0) & (s < 1.0)
    for _ in range(_NEWTON_ITERS):
        if not np.any(active):
            break
        g = scale * special.betainc(p, q, s) - target
        lo = np.where(active & (g < 0), s, lo)
        hi = np.where(active & (g > 0), s, hi)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            dg = scale * s ** (p - 1.0) * (1.0 - s) ** (q - 1.0) / beta_pq
            step = g / dg
        new = s - step
        bad = ~np.isfinite(new) | (new < lo) | (new > hi)
        new = np.where(bad, 0.5 * (lo + hi), new)
        done = np.abs(new - s) <= _ARG_TOL * np.maximum(np.abs(s), 1e-300)
        s = np.where(active, new, s)
        active = active & ~done & (g != 0)
    return s


def _quarter_sincos(params: TrigParams, u, d):
    """sin and cos on the first quarter period.

    ``u`` is the reduced argument in ``[0, pi/2]`` and ``d = pi/2 - u`` its
    complement, both carried separately so neither loses precision.
    """
    c = _consts(params)
    z = u / c.quarter
    zc = d / c.quarter
    z, zc, u, d = np.broadcast_arrays(z, zc, u, d)
    use_low = z <= zc
    high = ~use_low
    s_pow = np.empty(z.shape)
    c_pow = np.empty(z.shape)
    # |sin|^a from the left end, |cos|^b from the right end
    if np.any(use_low):
        lo = special.betaincinv(c.p, c.q, z[use_low])
        s_pow[use_low] = _polish(u[use_low], lo, c.p, c.q, c.quarter)
        c_pow[use_low] = 1.0 - s_pow[use_low]
    if np.any(high):
        hi = special.betaincinv(c.q, c.p, zc[high])
        c_pow[high] = _polish(d[high], hi, c.q, c.p, c.quarter)
        s_pow[high] = 1.0 - c_pow[high]
    sin_q = np.clip(s_pow, 0.0, 1.0) ** (1.0 / params.a)
    cos_q = np.clip(c_pow, 0.0, 1.0) ** (1.0 / params.b)
    return sin_q, cos_q


def _reduce(params: TrigParams, x):
    """Reduce modulo ``2 pi_{a,b}``; returns (sign_sin, u, d, sign_cos)."""
    c = _consts(params)
    x = np.asarray(x, dtype=float)
    two_pi = 2.0 * c.pi_hi
    k = np.rint(x / two_pi)
    r = ((x - k * c.two_pi_1) - k * c.two_pi_2) - k * (2.0 * c.pi_lo)
    sign_s = np.where(r < 0, -1.0, 1.0)
    v = np.abs(r)
    half_hi, half_lo = 0.5 * c.pi_hi, 0.5 * c.pi_lo
    first = v <= half_hi
    u = np.where(first, v, (c.pi_hi - v) + c.pi_lo)
    d = np.where(first, (half_hi - v) + half_lo, (v - half_hi) - half_lo)
    u = np.clip(u, 0.0, half_hi)
    d = np.clip(d, 0.0, half_hi)
    sign_c = np.where(first, 1.0, -1.0)
    # values within rounding of k*pi or of a quarter period become exact
    snap = 4.0 * _EPS * np.maximum(np.abs(x), 1.0)
    u = np.where((u <= snap) & (np.abs(x) >= half_hi), 0.0, u)
    d = np.where(d <= snap, 0.0, d)
    return sign_s, u, d, sign_c


def gsincos(params: TrigParams, x):
    """``(sin_{a,b}(x), cos_{a,b}(x))`` with a shared argument reduction."""
    sign_s, u, d, sign_c = _reduce(params, x)
    s, c = _quarter_sincos(params, u, d)
    s = sign_s * s
    c = sign_c * c
    s = np.where(u == 0.0, 0.0, s)
    c = np.where(d == 0.0, 0.0, c)
    return _wrap(s, x), _wrap(c, x)


def gsin(params: TrigParams, x):
    """Generalized sine, odd and ``2 pi_{a,b}``-periodic, range ``[-1, 1]``."""
    return gsincos(params, x)[0]


def gcos(params: TrigParams, x):
    """Derivative of :func:`gsin`; ``|gsin|^a + |gcos|^b = 1``."""
    return gsincos(params, x)[1]


def gtan(params: TrigParams, x):
    s, c = gsincos(params, x)
    with np.errstate(divide="ignore"):
        return np.divide(s, c)


def gcot(params: TrigParams, x):
    s, c = gsincos(params, x)
    with np.errstate(divide="ignore"):
        return np.divide(c, s)


def eta(beta: float, x):
    """``eta_beta(x) = x - sin_beta(x) cos_beta(x)``.

    Its derivative is ``(beta + 1) sin_beta(x)^(2 beta)``, so it is the
    primitive used to integrate ``sin_beta^(2 beta)`` in closed form.
    """
    s, c = gsincos(grushin_params(beta), x)
    return _wrap(np.asarray(x, dtype=float) - np.asarray(s) * np.asarray(c), x)


def rho(theta: float, x):
    """``rho_theta(x) = |x|^(theta - 1) x``."""
    if theta < 1:
        raise DomainError(f"rho requires theta >= 1, got {theta}")
    xa = np.asarray(x, dtype=float)
    return _wrap(np.abs(xa) ** (theta - 1.0) * xa, x)


def garcsin(beta: float, y):
    """Principal inverse of ``sin_beta`` on ``[0, pi_beta / 2]``."""
    return forward(grushin_params(beta), y)


def gangle(params: TrigParams, s, c, *, positive: bool = False):
    """Angle ``theta`` with ``gsin(theta) = s`` and ``gcos(theta) = c``.

    The two-argument inverse.  The result lies in ``(-pi, pi]``, or in
    ``[0, 2 pi)`` when ``positive`` is set.  Whichever of ``|s|^a`` and
    ``|c|^b`` is smaller drives the evaluation, which keeps full accuracy
    next to both zeros and quarter periods.
    """
    k = _consts(params)
    sa = np.asarray(s, dtype=float)
    ca = np.asarray(c, dtype=float)
    s_pow = np.abs(sa) ** params.a
    c_pow = np.abs(ca) ** params.b
    u_low = k.quarter * special.betainc(k.p, k.q, np.minimum(s_pow, 1.0))
    u_high = k.quarter - k.quarter * special.betainc(k.q, k.p, np.minimum(c_pow, 1.0))
    u = np.where(s_pow <= c_pow, u_low, u_high)
    theta = np.where(ca >= 0, u, k.pi_hi - u)
    theta = np.where(sa < 0, -theta, theta)
    if positive:
        theta = np.where(theta < 0, theta + 2.0 * k.pi_hi, theta)
    return _wrap(theta, s)
