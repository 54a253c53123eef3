"""Grushin spaces and closed-form geodesics.

The Grushin space with multi-index ``alpha = (a_1, ..., a_n)`` is R^{n+1} with
the orthonormal frame ``X_j = xi_j(x) d/dx_j`` where

    xi_j(x) = prod_{i < j} x_i^{a_i}.

Its Hamiltonian is ``H(x, p) = 1/2 sum_j xi_j(x)^2 p_j^2`` and every normal
geodesic is given in closed form by nested generalized sines.  Coordinates
are 0-based throughout: ``x[0]`` is the first coordinate and ``alpha[j]`` is
the exponent carried by ``x[j]``.

Two constructors build a :class:`GeodesicPath`:

* :meth:`GeodesicPath.from_spherical` takes generalized spherical angles
  ``phi`` at a Riemannian base point and uses the amplitudes and frequencies
  ``A_j = x0_j / sin(phi_j)`` and ``omega_j = sin(phi_j) / x0_j * prod delta_i``.
* :meth:`GeodesicPath.from_covector` takes a Cartesian covector and works at
  any base point, singular ones included.  It recovers amplitude, frequency
  and phase from the conserved quantities ``R_j``.

Both produce the same curve for the same initial data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize
from scipy.special import comb

from .gentrig import (
    DomainError,
    eta,
    grushin_params,
    gangle,
    gsincos,
    pi_alpha,
    rho,
)

__all__ = [
    "MultiIndex",
    "GeodesicPath",
    "hamiltonian",
    "conserved_R",
    "normalize_covector",
    "is_riemannian",
    "spherical_to_covector",
    "covector_to_spherical",
    "xi_integral",
    "eval_geodesic",
    "embed",
]

TRIG = "trig"
LINEAR = "linear"


@dataclass(frozen=True)
class MultiIndex:
    """Exponent tuple ``alpha`` of a Grushin space ``G^{n+1}_alpha``."""

    alpha: tuple[int, ...]

    def __post_init__(self) -> None:
        alpha = tuple(int(a) for a in self.alpha)
        if len(alpha) < 1:
            raise ValueError("multi-index needs at least one exponent")
        if any(a < 0 for a in alpha):
            raise ValueError(f"exponents must be nonnegative, got {alpha}")
        object.__setattr__(self, "alpha", alpha)

    @property
    def n(self) -> int:
        return len(self.alpha)

    @property
    def dim(self) -> int:
        return len(self.alpha) + 1

    @property
    def J(self) -> tuple[int, ...]:
        """Indices carrying a nonzero exponent."""
        return tuple(j for j, a in enumerate(self.alpha) if a != 0)

    @property
    def tilde(self) -> tuple[int, ...]:
        """``alpha`` with zeros replaced by 1; the exponents of the angle chart."""
        return tuple(a if a else 1 for a in self.alpha)

    def angle_ranges(self) -> list[tuple[float, float]]:
        """Chart rectangle: ``[0, pi]`` for all angles but the last, ``[0, 2 pi)``."""
        pis = [pi_alpha(b) for b in self.tilde]
        out = [(0.0, p) for p in pis[:-1]]
        out.append((0.0, 2.0 * pis[-1]))
        return out


def _as_index(index) -> MultiIndex:
    return index if isinstance(index, MultiIndex) else MultiIndex(tuple(index))


def _xi_squared(index: MultiIndex, x: np.ndarray) -> np.ndarray:
    """``xi_j(x)^2`` for all j, along the last axis."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    acc = np.ones(x.shape[:-1])
    for j, a in enumerate(index.alpha):
        if a:
            acc = acc * x[..., j] ** (2 * a)
        out[..., j + 1] = acc
    return out


def hamiltonian(index, x, p):
    """``H(x, p) = 1/2 sum_j xi_j(x)^2 p_j^2``.

    Accepts stacks of points along leading axes.
    """
    index = _as_index(index)
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    if x.shape[-1] != index.dim or p.shape[-1] != index.dim:
        raise ValueError(
            f"expected vectors of length {index.dim}, got {x.shape[-1]} and {p.shape[-1]}"
        )
    val = 0.5 * np.sum(_xi_squared(index, x) * p**2, axis=-1)
    return float(val) if np.ndim(val) == 0 else val


def conserved_R(index, x, p) -> np.ndarray:
    """Conserved quantities ``R_0, ..., R_{n+1}`` (0-based, ``R_{n+1} = 0``).

    ``R_n = |p_n|`` and ``R_j^2 = R_{j+1}^2 x_j^{2 a_j} + p_j^2``.  Along a
    geodesic each ``R_j`` is constant and ``R_0^2 = 2H``.
    """
    index = _as_index(index)
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    n = index.n
    R = np.zeros(x.shape[:-1] + (n + 2,))
    R[..., n] = np.abs(p[..., n])
    for j in range(n - 1, -1, -1):
        a = index.alpha[j]
        weight = x[..., j] ** (2 * a) if a else 1.0
        R[..., j] = np.sqrt(R[..., j + 1] ** 2 * weight + p[..., j] ** 2)
    return R


def normalize_covector(index, x0, p0) -> tuple[np.ndarray, float]:
    """Rescale ``p0`` onto ``H(x0, .) = 1/2``; returns the covector and the factor."""
    h = hamiltonian(index, x0, p0)
    if not h > 0:
        raise DomainError("covector has zero energy and cannot be normalized")
    scale = 1.0 / math.sqrt(2.0 * h)
    return np.asarray(p0, dtype=float) * scale, scale


def is_riemannian(index, x0) -> bool:
    index = _as_index(index)
    return all(x0[j] != 0 for j in index.J)


def _chart_factors(index: MultiIndex, x0, phi):
    """Per-angle ``(sin, cos, delta)`` of the generalized spherical chart."""
    sins, coss, deltas = [], [], []
    for j, (a, b) in enumerate(zip(index.alpha, index.tilde)):
        s, c = gsincos(grushin_params(b), float(phi[j]))
        base = float(x0[j]) if a else 1.0
        sins.append(s)
        coss.append(c)
        deltas.append(rho(b, s / base))
    return np.array(sins), np.array(coss), np.array(deltas)


def spherical_to_covector(index, x0, phi) -> np.ndarray:
    """Covector on ``H^{-1}_{x0}(1/2)`` with generalized spherical angles ``phi``.

    ``p_j = cos(phi_j) prod_{i<j} delta_i`` for ``j < n`` and
    ``p_n = prod_i delta_i``, where ``delta_i = rho_{a_i}(sin(phi_i) / x0_i)``
    (angles with ``a_i = 0`` use the classical sine and ``x0_i = 1``).
    """
    index = _as_index(index)
    if len(phi) != index.n or len(x0) != index.dim:
        raise ValueError("phi must have n entries and x0 n + 1")
    if not is_riemannian(index, x0):
        raise DomainError("spherical chart needs a Riemannian base point")
    _, coss, deltas = _chart_factors(index, x0, phi)
    p = np.empty(index.dim)
    prod = 1.0
    for j in range(index.n):
        p[j] = coss[j] * prod
        prod *= deltas[j]
    p[index.n] = prod
    return p


def covector_to_spherical(index, x0, p0, *, tol: float = 1e-9) -> np.ndarray:
    """Inverse of :func:`spherical_to_covector`.

    Peels the chart one angle at a time: with ``P_j = prod_{i<j} delta_i`` the
    cosine is ``p_j / P_j`` and ``|P_{j+1}| = R_{j+1}``, which fixes the sine.
    Angles after a vanishing ``P_j`` are not determined and are set to 0.
    """
    index = _as_index(index)
    x0 = np.asarray(x0, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    if not is_riemannian(index, x0):
        raise DomainError("spherical chart needs a Riemannian base point")
    h = hamiltonian(index, x0, p0)
    if abs(h - 0.5) > tol:
        raise DomainError(f"covector is not normalized: H = {h!r}")
    R = conserved_R(index, x0, p0)
    n = index.n
    phi = np.zeros(n)
    P = 1.0
    for j, (a, b) in enumerate(zip(index.alpha, index.tilde)):
        if P == 0.0:
            break
        params = grushin_params(b)
        base = x0[j] if a else 1.0
        c = np.clip(p0[j] / P, -1.0, 1.0)
        # |delta_j| = R_{j+1} / |P_j| and |delta_j| = |s / base|^b
        s = min((R[j + 1] / abs(P)) ** (1.0 / b) * abs(base), 1.0)
        if j == n - 1:
            # last angle spans a full period: sign of sine from p_n
            sign = np.sign(p0[n] / P) * np.sign(base)
            s = s * (sign if sign != 0 else 1.0)
        phi[j] = gangle(params, s, c, positive=True)
        P = P * rho(b, (s if j == n - 1 else abs(s)) / base)
    return phi


@dataclass(frozen=True, eq=False)
class GeodesicPath:
    """Arc of the normal geodesic flow from ``(x0, p0)``.

    Per coordinate ``j < n`` the path is either on the trig branch,
    ``x_j = A_j sin_{a_j}(omega_j I_j + phase_j)``, or the linear branch,
    ``x_j = x0_j + p0_j I_j``, where ``I_j(t) = int_0^t xi_j^2``.  The last
    coordinate is always linear.
    """

    index: MultiIndex
    x0: np.ndarray
    p0: np.ndarray
    R: np.ndarray
    branch: tuple[str, ...]
    A: np.ndarray
    omega: np.ndarray
    phase0: np.ndarray
    phi: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_covector(cls, index, x0, p0, *, meta: dict | None = None) -> "GeodesicPath":
        """Closed-form path for any base point and covector."""
        index = _as_index(index)
        x0 = np.array(x0, dtype=float)
        p0 = np.array(p0, dtype=float)
        if x0.shape != (index.dim,) or p0.shape != (index.dim,):
            raise ValueError(f"x0 and p0 must have length {index.dim}")
        if not (np.all(np.isfinite(x0)) and np.all(np.isfinite(p0))):
            raise ValueError("non-finite initial data")
        R = conserved_R(index, x0, p0)
        n = index.n
        A = np.full(n, np.nan)
        omega = np.full(n, np.nan)
        ph = np.full(n, np.nan)
        branch = []
        for j, a in enumerate(index.alpha):
            # R_j = 0 pins x_j = p_j = 0 for all time
            if a and R[j + 1] != 0.0 and R[j] != 0.0:
                amp = (R[j] / R[j + 1]) ** (1.0 / a)
                amp = -amp if x0[j] < 0 else amp
                A[j] = amp
                omega[j] = R[j] / amp
                s = x0[j] / amp
                c = p0[j] / R[j]
                ph[j] = gangle(grushin_params(a), s, c)
                branch.append(TRIG)
            else:
                branch.append(LINEAR)
        return cls(index, x0, p0, R, tuple(branch), A, omega, ph, None, dict(meta or {}))

    @classmethod
    def from_spherical(cls, index, x0, phi) -> "GeodesicPath":
        """Path with spherical angles ``phi`` at a Riemannian base point."""
        index = _as_index(index)
        x0 = np.array(x0, dtype=float)
        phi = np.array(phi, dtype=float)
        p0 = spherical_to_covector(index, x0, phi)
        sins, _, deltas = _chart_factors(index, x0, phi)
        R = conserved_R(index, x0, p0)
        n = index.n
        A = np.full(n, np.nan)
        omega = np.full(n, np.nan)
        ph = np.full(n, np.nan)
        branch = []
        prod = 1.0
        alive = True  # all sines so far nonzero, i.e. R_{j+1} != 0
        for j, a in enumerate(index.alpha):
            alive = alive and sins[j] != 0.0
            if a and alive:
                A[j] = x0[j] / sins[j]
                omega[j] = sins[j] / x0[j] * prod
                ph[j] = phi[j]
                branch.append(TRIG)
            else:
                branch.append(LINEAR)
            prod *= deltas[j]
        return cls(index, x0, p0, R, tuple(branch), A, omega, ph, phi, {})

    # -- evaluation -------------------------------------------------------

    @property
    def n(self) -> int:
        return self.index.n

    def is_trig(self, j: int) -> bool:
        return self.branch[j] == TRIG

    def delta(self) -> np.ndarray:
        """``delta_j`` of the spherical chart; requires a spherical path."""
        if self.phi is None:
            raise DomainError("delta is defined only for paths built from angles")
        return _chart_factors(self.index, self.x0, self.phi)[2]

    def integrals(self, t) -> np.ndarray:
        """``I_0(t), ..., I_n(t)`` with ``I_j = int_0^t xi_j^2``; shape ``(n+1,) + t.shape``."""
        t = np.asarray(t, dtype=float)
        n = self.n
        out = np.empty((n + 1,) + t.shape)
        I = t.copy()
        out[0] = I
        for j, a in enumerate(self.index.alpha):
            if a == 0:
                nxt = I
            elif self.branch[j] == TRIG:
                amp, om, ph = self.A[j], self.omega[j], self.phase0[j]
                scale = amp ** (2 * a) / (om * (a + 1))
                nxt = scale * _eta_increment(a, ph, om * I)
            else:
                nxt = _linear_power_integral(self.x0[j], self.p0[j], 2 * a, I)
            out[j + 1] = nxt
            I = nxt
        return out

    def state(self, t):
        """``(x(t), p(t))``; trailing axis is the coordinate."""
        t = np.asarray(t, dtype=float)
        I = self.integrals(t)
        x = np.empty(t.shape + (self.index.dim,))
        p = np.empty_like(x)
        for j in range(self.index.dim):
            if j < self.n and self.branch[j] == TRIG:
                a = self.index.alpha[j]
                s, c = gsincos(grushin_params(a), self.omega[j] * I[j] + self.phase0[j])
                x[..., j] = self.A[j] * s
                p[..., j] = self.A[j] * self.omega[j] * c
            else:
                x[..., j] = self.x0[j] + self.p0[j] * I[j]
                p[..., j] = self.p0[j]
        # A sin(phase) only reproduces x0 up to rounding
        start = t == 0
        x[start] = self.x0
        p[start] = self.p0
        return x, p

    def __call__(self, t):
        return self.state(t)[0]

    def phase(self, j: int, t):
        """``Q_j(t) = omega_j I_j(t) + phase_j`` on a trig coordinate."""
        if self.branch[j] != TRIG:
            raise DomainError(f"coordinate {j} is not on the trig branch")
        return self.omega[j] * self.integrals(t)[j] + self.phase0[j]

    def energy(self) -> float:
        return hamiltonian(self.index, self.x0, self.p0)

    # -- hitting times ----------------------------------------------------

    def integral_unbounded(self, j: int) -> bool:
        """Whether ``I_j(t) -> infinity``; false only when ``xi_j`` vanishes identically."""
        for i in range(j):
            if self.index.alpha[i] and self.branch[i] == LINEAR:
                if self.x0[i] == 0.0 and self.p0[i] == 0.0:
                    return False
        return True

    def hitting_time(self, j: int, level: float) -> float:
        """Smallest ``t >= 0`` with ``I_j(t) = level``; ``inf`` when never reached."""
        if level < 0:
            raise ValueError("level must be nonnegative")
        if level == 0:
            return 0.0
        if j == 0:
            return float(level)
        if not self.integral_unbounded(j):
            return math.inf

        def f(t):
            return float(self.integrals(t)[j]) - level

        hi = 1.0
        while f(hi) < 0:
            hi *= 2.0
            if hi > 1e300:
                return math.inf
        lo = 0.0 if hi == 1.0 else hi / 2.0
        return optimize.brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)
# below this phase advance eta(ph + u) - eta(ph) cancels badly near sine zeros
_GL_SPAN = 0.5


def _eta_increment(a: int, ph: float, u):
    """``eta_a(ph + u) - eta_a(ph)``, by quadrature of ``(a+1) sin^{2a}`` for short ``u``."""
    u = np.asarray(u, dtype=float)
    out = np.empty(u.shape)
    short = np.abs(u) < _GL_SPAN
    if np.any(~short):
        out[~short] = eta(a, u[~short] + ph) - eta(a, ph)
    if np.any(short):
        us = u[short][..., None]
        nodes = ph + 0.5 * us * (1.0 + _GL_NODES)
        s = gsincos(grushin_params(a), nodes)[0]
        out[short] = 0.5 * us[..., 0] * np.sum(_GL_WEIGHTS * (a + 1) * np.abs(s) ** (2 * a), axis=-1)
    return out


def _linear_power_integral(x0: float, p0: float, m: int, I):
    """``int_0^I (x0 + p0 s)^m ds`` by the binomial expansion."""
    I = np.asarray(I, dtype=float)
    out = np.zeros_like(I)
    for k in range(m + 1):
        coef = comb(m, k, exact=True) * x0 ** (m - k) * p0**k
        if coef:
            out = out + coef * I ** (k + 1) / (k + 1)
    return out


def xi_integral(path: GeodesicPath, j: int, t):
    """``I_j(t) = int_0^t xi_j(x(s))^2 ds`` for ``0 <= j <= n``."""
    if not 0 <= j <= path.n:
        raise IndexError(f"coordinate index {j} out of range 0..{path.n}")
    val = path.integrals(t)[j]
    return float(val) if np.ndim(val) == 0 else val


def eval_geodesic(path: GeodesicPath, t):
    """``(x(t), p(t))`` of the closed-form geodesic."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be nonnegative")
    return path.state(t)


def embed(path: GeodesicPath, extra: float, alpha_new: int = 1) -> GeodesicPath:
    """Lift a geodesic into the next Grushin space, holding the new coordinate fixed."""
    index = MultiIndex(path.index.alpha + (alpha_new,))
    x0 = np.append(path.x0, extra)
    p0 = np.append(path.p0, 0.0)
    return GeodesicPath.from_covector(index, x0, p0, meta=dict(path.meta, embedded=True))


def random_angles(index: MultiIndex, rng: np.random.Generator, margin: float = 0.05) -> np.ndarray:
    """Angles drawn uniformly from the open chart, ``margin`` away from sine zeros."""
    phi = []
    for lo, hi in index.angle_ranges()[:-1]:
        phi.append(rng.uniform(lo + margin * hi, hi * (1 - margin)))
    lo, hi = index.angle_ranges()[-1]
    half = hi / 2
    v = rng.uniform(margin * half, half * (1 - margin))
    phi.append(v if rng.random() < 0.5 else v + half)
    return np.array(phi)


def make_index(alpha: Sequence[int]) -> MultiIndex:
    return MultiIndex(tuple(alpha))
