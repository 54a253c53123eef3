"""Cut times and the optimal synthesis.

For general ``n`` the candidate cut time of a geodesic is

    tau = min_{j in J} tau_j,   tau_j = min{t > 0 : |omega_j| I_j(t) = pi_{a_j}},

an upper bound for the cut time and a lower bound for the first conjugate
time.  In ``G^3_{(a, b)}`` (``n = 2``) it is the cut time, and this module
also builds the cut locus: the curve ``E`` bounding the excluded disc in the
plane ``{x = -x0}``, the strips of ``{y = -y0}`` beyond
``|z - z0| = pi_b |y0|^{b+1} / (b + 1)``, and the singular-point variants.

In ``G^3`` coordinates are written ``(x, y, z)`` and covectors ``(u, v, w)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import _geometry
from .gentrig import DomainError, eta, garcsin, grushin_params, gsincos, pi_alpha, rho
from .geoflow import _eta_increment, GeodesicPath, MultiIndex, hamiltonian

__all__ = [
    "CutReport",
    "PointType",
    "LocusPolyline",
    "CutLocus",
    "SingularFiberCoord",
    "tau_j",
    "cut_report",
    "symmetric_partner",
    "omega_global_3d",
    "classify_point",
    "p_region",
    "fiber_covector",
    "fiber_radius",
    "fiber_radius_bisect",
    "trace_E",
    "trace_G",
    "g_bound",
    "lambda2_images",
    "cut_y_offset",
    "cut_locus_3d",
    "t_star",
    "t_star_star",
    "z_offset_formula",
    "K_fun",
    "singular_geodesic",
]

_QUARTER_TOL = 1e-12


# ---------------------------------------------------------------------------
# general n


@dataclass(frozen=True)
class CutReport:
    """Candidate cut times of one geodesic.

    ``tau`` is the cut time when ``n2_exact`` is set (``n = 2``); for larger
    ``n`` it is the conjectured cut time, an upper bound for the true one.
    """

    tau_per_index: dict[int, float]
    tau: float
    argmin: tuple[int, ...]
    conjugate_at_tau: bool
    n2_exact: bool

    @property
    def label(self) -> str:
        return "t_cut" if self.n2_exact else "candidate cut time (upper bound)"


def tau_j(path: GeodesicPath, j: int) -> float:
    """First time with ``|omega_j| I_j(t) = pi_{a_j}``; ``inf`` if never reached."""
    a = path.index.alpha[j]
    if a == 0:
        raise DomainError(f"index {j} is not in J")
    if not path.is_trig(j):
        return math.inf
    level = pi_alpha(a) / abs(path.omega[j])
    return path.hitting_time(j, level)


def _at_quarter(a: int, ph: float) -> bool:
    p = pi_alpha(a)
    r = math.fmod(ph, 2 * p)
    r = r + 2 * p if r < 0 else r
    return min(abs(r - 0.5 * p), abs(r - 1.5 * p)) <= _QUARTER_TOL * p


def cut_report(path: GeodesicPath) -> CutReport:
    """Collect ``tau_j`` over ``J``, their minimum and the conjugacy flag at ``tau``."""
    taus = {j: tau_j(path, j) for j in path.index.J}
    tau = min(taus.values()) if taus else math.inf
    if math.isfinite(tau):
        argmin = tuple(j for j, v in taus.items() if abs(v - tau) <= 1e-12 * tau)
    else:
        argmin = tuple(taus)
    conj = math.isfinite(tau) and any(
        _at_quarter(path.index.alpha[j], path.phase0[j]) for j in argmin
    )
    return CutReport(taus, tau, argmin, conj, path.n == 2)


def symmetric_partner(index, phi, j: int) -> np.ndarray:
    """Angles with ``phi_j`` reflected to ``pi_{a_j} - phi_j``."""
    index = index if isinstance(index, MultiIndex) else MultiIndex(tuple(index))
    out = np.array(phi, dtype=float)
    p = pi_alpha(index.tilde[j])
    out[j] = p - out[j]
    if j == index.n - 1:
        out[j] = math.fmod(out[j], 2 * p)
        if out[j] < 0:
            out[j] += 2 * p
    return out


# ---------------------------------------------------------------------------
# G^3 helpers


def _ab(alpha) -> tuple[int, int]:
    a, b = (alpha.alpha if isinstance(alpha, MultiIndex) else tuple(alpha))
    return int(a), int(b)


def _energy_check(index, q0, lam, tol=1e-9):
    h = hamiltonian(index, q0, lam)
    if abs(h - 0.5) > tol:
        raise DomainError(f"covector is not normalized: H = {h!r}")


def omega_global_3d(alpha, q0, lambda0) -> tuple[float, float]:
    """``(|omega_1|, |omega_2|)`` valid on all of ``H^{-1}(1/2)``, singular fibers included."""
    a, b = _ab(alpha)
    _energy_check((a, b), q0, lambda0)
    _, v0, w0 = (float(c) for c in lambda0)
    y0 = float(q0[1])
    s = y0 ** (2 * b) * w0**2 + v0**2
    return s ** (1.0 / (2 * a)), abs(w0) ** (1.0 / b) * s ** ((b - 1) / (2.0 * b))


@dataclass(frozen=True)
class PointType:
    classification: str  # "Type1Strict", "Type2Strict" or "Boundary"
    threshold: float

    @property
    def is_type1(self) -> bool:
        return self.classification in ("Type1Strict", "Boundary")

    @property
    def is_type2(self) -> bool:
        return self.classification in ("Type2Strict", "Boundary")


def type_threshold(alpha, x0: float) -> float:
    a, b = _ab(alpha)
    return pi_alpha(a) * abs(x0) ** (a + 1) / (pi_alpha(b) * (a + 1))


def classify_point(alpha, q0, rtol: float = 1e-12) -> PointType:
    """Type 1 when ``|y0|`` exceeds ``pi_a |x0|^{a+1} / (pi_b (a + 1))``, Type 2 below."""
    x0, y0 = float(q0[0]), float(q0[1])
    if x0 == 0 or y0 == 0:
        raise DomainError("point types are defined for Riemannian points")
    thr = type_threshold(alpha, x0)
    if abs(abs(y0) - thr) <= rtol * thr:
        return PointType("Boundary", thr)
    return PointType("Type1Strict" if abs(y0) > thr else "Type2Strict", thr)


def _ratio_c(a: int, b: int) -> float:
    return pi_alpha(b) / pi_alpha(a) * (a + 1)


def p_region(alpha, q0, v0: float, w0: float) -> bool:
    """Whether ``tau_2 <= tau_1``:  ``w0^2 >= c^{2b} (y0^{2b} w0^2 + v0^2)^{b + 1 + b/a}``.

    Here ``c = (pi_b / pi_a)(a + 1)``.
    """
    a, b = _ab(alpha)
    y0 = float(q0[1])
    s = y0 ** (2 * b) * w0**2 + v0**2
    return bool(w0**2 >= _ratio_c(a, b) ** (2 * b) * s ** (b + 1 + b / a))


def fiber_covector(alpha, q0, phi2: float) -> np.ndarray:
    """Covector on ``H^{-1}(1/2) cap {u0 = 0}``, i.e. spherical angle ``phi1 = pi_a / 2``."""
    from .geoflow import spherical_to_covector

    a, b = _ab(alpha)
    return spherical_to_covector((a, b), q0, [0.5 * pi_alpha(a), phi2])


def fiber_radius(alpha, q0) -> tuple[float, float] | None:
    """``(r, phi2*)`` for the ``u0 = 0`` fiber, or ``None`` if ``tau_1 <= tau_2`` on all of it.

    ``y0^{2b} w0^2 + v0^2 = x0^{-2a}`` is constant on the fiber, so the region
    condition reduces to ``|w0| >= r = c^b |x0|^{-(ab + a + b)}`` and
    ``phi2* = arcsin_b((r |x0|^a |y0|^b)^{1/b})``.
    """
    a, b = _ab(alpha)
    x0, y0 = float(q0[0]), float(q0[1])
    r = _ratio_c(a, b) ** b * abs(x0) ** (-(a * b + a + b))
    arg = (r * abs(x0) ** a * abs(y0) ** b) ** (1.0 / b)
    if arg > 1.0:
        return None
    return r, garcsin(b, arg)


def fiber_radius_bisect(alpha, q0, tol: float = 1e-12) -> tuple[float, float] | None:
    """``(r, phi2*)`` by bisection of :func:`p_region` over ``phi2 in [0, pi_b/2]``."""
    a, b = _ab(alpha)
    inside = lambda ph: p_region((a, b), q0, *fiber_covector((a, b), q0, ph)[1:])
    lo, hi = 0.0, 0.5 * pi_alpha(b)
    if not inside(hi):
        return None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if inside(mid) else (mid, hi)
    return abs(fiber_covector((a, b), q0, hi)[2]), hi


@dataclass
class LocusPolyline:
    """Ordered samples of a locus curve with its parameter values."""

    label: str
    params: np.ndarray
    points: np.ndarray  # (m, 3)
    closed: bool
    meta: dict = field(default_factory=dict)

    def planar(self, drop: int) -> np.ndarray:
        keep = [k for k in range(3) if k != drop]
        return self.points[:, keep]

    def self_intersections(self, drop: int = 0) -> list[tuple[int, int]]:
        return _geometry.self_intersections(self.planar(drop), self.closed)

    def is_simple(self, drop: int = 0) -> bool:
        return not self.self_intersections(drop)

    def closure_gap(self) -> float:
        return float(np.linalg.norm(self.points[-1] - self.points[0]))


def _tau1_endpoint(index, q0, lam) -> np.ndarray:
    path = GeodesicPath.from_covector(index, q0, lam)
    return path(tau_j(path, 0))


def trace_E(alpha, q0, samples: int = 400, *, variant: str = "restricted") -> LocusPolyline:
    """Curve ``E`` of ``tau_1``-endpoints of the ``u0 = 0`` fiber, in ``{x = -x0}``.

    For Type 1 points the whole fiber qualifies.  For Type 2 points the
    ``restricted`` variant keeps the two arcs where ``tau_1 <= tau_2``,
    traversed as ``[pi - phi*, pi + phi*]`` followed by ``[-phi*, phi*]``;
    their endpoint images coincide pairwise, which closes the curve.
    ``variant="full"`` sweeps the whole fiber regardless of type.
    """
    a, b = _ab(alpha)
    q0 = np.asarray(q0, dtype=float)
    kind = classify_point((a, b), q0)
    pb = pi_alpha(b)
    rad = fiber_radius((a, b), q0)
    if variant == "full" or rad is None or kind.classification == "Type1Strict":
        params = np.linspace(0.0, 2 * pb, samples, endpoint=False)
        segments = [params]
        restricted = False
    elif variant == "restricted":
        star = rad[1]
        half = max(samples // 2, 8)
        segments = [np.linspace(pb - star, pb + star, half),
                    np.linspace(-star, star, half)]
        params = np.concatenate(segments)
        restricted = True
    else:
        raise ValueError(f"unknown variant {variant!r}")
    pts = np.array([_tau1_endpoint((a, b), q0, fiber_covector((a, b), q0, ph)) for ph in params])
    meta = {"type": kind.classification, "variant": variant, "restricted": restricted}
    if rad is not None:
        meta.update(r=rad[0], phi2_star=rad[1])
    return LocusPolyline("E_curve", params, pts, True, meta)


def g_bound(alpha, x0: float) -> float:
    """``|w0|`` bound of the ``y0 = 0`` conjugate covectors: ``c^b / |x0|^{ab + a + b}``."""
    a, b = _ab(alpha)
    return _ratio_c(a, b) ** b / abs(x0) ** (a * b + a + b)


def trace_G(alpha, q0, samples: int = 400) -> LocusPolyline:
    """Closed curve ``G`` for a base point with ``x0 != 0`` and ``y0 = 0``.

    Covectors ``u0 = 0``, ``v0 = +-|x0|^{-a}``, ``|w0| <= g_bound``,
    exponentiated at ``tau_1``; the ``v0 > 0`` branch runs up in ``w0`` and the
    ``v0 < 0`` branch back down.
    """
    a, b = _ab(alpha)
    q0 = np.asarray(q0, dtype=float)
    if q0[0] == 0 or q0[1] != 0:
        raise DomainError("trace_G needs x0 != 0 and y0 = 0")
    bound = g_bound((a, b), q0[0])
    half = max(samples // 2, 8)
    ws = np.linspace(-bound, bound, half)
    v = abs(q0[0]) ** (-a)
    covs = [(0.0, v, w) for w in ws] + [(0.0, -v, w) for w in ws[::-1]]
    params = np.concatenate([ws, ws[::-1]])
    pts = np.array([_tau1_endpoint((a, b), q0, np.array(c)) for c in covs])
    return LocusPolyline("G_curve", params, pts, True, {"w0_bound": bound})


def cut_y_offset(alpha, y0: float) -> float:
    """``pi_b |y0|^{b+1} / (b + 1)``, the ``z`` offset of the cut-conjugate lines."""
    _, b = _ab(alpha)
    return pi_alpha(b) * abs(y0) ** (b + 1) / (b + 1)


def lambda2_images(alpha, q0, samples: int = 64) -> list[LocusPolyline]:
    """``tau_2``-endpoints of covectors with ``phi2 in {pi_b/2, 3 pi_b/2}`` and ``tau_2 <= tau_1``."""
    a, b = _ab(alpha)
    q0 = np.asarray(q0, dtype=float)
    pa, pb = pi_alpha(a), pi_alpha(b)
    phis1 = np.linspace(pa * 0.5 / samples, pa * (1 - 0.5 / samples), samples)
    out = []
    for side, phi2 in ((+1, 0.5 * pb), (-1, 1.5 * pb)):
        kept, pts = [], []
        for ph1 in phis1:
            path = GeodesicPath.from_spherical((a, b), q0, [ph1, phi2])
            rep = cut_report(path)
            if rep.tau_per_index[1] <= rep.tau_per_index[0]:
                kept.append(ph1)
                pts.append(path(rep.tau_per_index[1]))
        out.append(LocusPolyline("Lambda2", np.array(kept), np.array(pts).reshape(-1, 3), False,
                                 {"phi2": phi2, "side": side}))
    return out


@dataclass
class CutLocus:
    """Surface descriptors plus sampled boundary curves of ``Cut(q0)``."""

    case: str
    surfaces: list[dict]
    polylines: list[LocusPolyline]
    meta: dict = field(default_factory=dict)


def _line(label, x_range, y, z, samples, side) -> LocusPolyline:
    xs = np.linspace(*x_range, samples)
    pts = np.column_stack([xs, np.full_like(xs, y), np.full_like(xs, z)])
    return LocusPolyline(label, xs, pts, False, {"side": side})


def cut_locus_3d(alpha, q0, resolution: int = 400) -> CutLocus:
    """Cut locus of ``q0`` in ``G^3_{(a, b)}``: surface pieces plus their boundary curves."""
    a, b = _ab(alpha)
    q0 = np.asarray(q0, dtype=float)
    x0, y0, z0 = q0
    if x0 == 0 and y0 == 0:
        return CutLocus("singular_both_zero",
                        [{"kind": "plane", "axis": "x", "value": 0.0},
                         {"kind": "plane", "axis": "y", "value": 0.0}],
                        [], {"cut_conjugate": False})
    if x0 == 0:
        off = cut_y_offset((a, b), y0)
        span = (-4.0, 4.0)
        return CutLocus("singular_x0_zero",
                        [{"kind": "plane", "axis": "x", "value": 0.0},
                         {"kind": "strips", "axis": "y", "value": -y0,
                          "condition": "|z - z0| >= offset", "z0": z0, "offset": off}],
                        [_line("CutY", span, -y0, z0 + off, resolution // 4, +1),
                         _line("CutY", span, -y0, z0 - off, resolution // 4, -1)],
                        {"offset": off})
    if y0 == 0:
        G = trace_G((a, b), q0, resolution)
        return CutLocus("singular_y0_zero",
                        [{"kind": "plane_minus_interior", "axis": "x", "value": -x0,
                          "boundary": "G_curve"},
                         {"kind": "plane", "axis": "y", "value": 0.0}],
                        [G], {"w0_bound": G.meta["w0_bound"]})
    kind = classify_point((a, b), q0)
    E = trace_E((a, b), q0, resolution)
    off = cut_y_offset((a, b), y0)
    lams = lambda2_images((a, b), q0, max(resolution // 8, 16))
    return CutLocus("riemannian",
                    [{"kind": "plane_minus_interior", "axis": "x", "value": -x0,
                      "boundary": "E_curve"},
                     {"kind": "strips", "axis": "y", "value": -y0,
                      "condition": "|z - z0| >= offset", "z0": z0, "offset": off}],
                    [E, *lams],
                    {"type": kind.classification, "threshold": kind.threshold, "offset": off})


# ---------------------------------------------------------------------------
# first-hitting times used in the synthesis


def _phase_distance(period_half: float, phi: float, direction: float) -> float:
    """Phase travel until ``sin(Q) = -sin(phi)`` in the given direction."""
    p = period_half
    targets = np.array([-phi, p + phi])  # solutions mod 2p
    d = np.mod(direction * (targets - phi), 2 * p)
    d = d[d > 1e-15 * p] if np.any(d > 1e-15 * p) else d
    return float(np.min(d))


def t_star(alpha, q0, phi) -> float:
    """First time the geodesic reaches ``{x = -x0}``, valid when this precedes ``tau_1``.

    With ``omega_1 > 0`` (``x0 > 0``) this is ``2 (pi_a - phi1) / |omega_1|`` and
    needs ``phi1 >= pi_a / 2``; for ``x0 < 0`` the roles of ``phi1`` and
    ``pi_a - phi1`` swap.
    """
    a, b = _ab(alpha)
    pa = pi_alpha(a)
    path = GeodesicPath.from_spherical((a, b), q0, phi)
    phi1 = float(phi[0])
    om = path.omega[0]
    d = 2 * (pa - phi1) if om > 0 else 2 * phi1
    if not (0 <= d <= pa):
        raise DomainError("phi1 outside the range where {x = -x0} is reached before tau_1")
    return d / abs(om)


def t_star_star(alpha, q0, phi) -> float:
    """First time the geodesic reaches ``{y = -y0}``; needs ``pi_b/2 <= phi2 <= 3 pi_b/2``."""
    a, b = _ab(alpha)
    pb = pi_alpha(b)
    phi2 = float(phi[1])
    if not (0.5 * pb - 1e-12 <= phi2 <= 1.5 * pb + 1e-12):
        raise DomainError("phi2 must lie in [pi_b/2, 3 pi_b/2]")
    path = GeodesicPath.from_spherical((a, b), q0, phi)
    if not path.is_trig(1):
        raise DomainError("w0 = 0: y is not on the trig branch")
    om = path.omega[1]
    d = _phase_distance(pb, phi2, math.copysign(1.0, om))
    return path.hitting_time(1, d / abs(om))


def z_offset_formula(alpha, q0, phi) -> float:
    """``|z(t**) - z0|`` from the phases alone: ``|y0/sin(phi2)|^{b+1} |eta(Q*) - eta(phi2)| / (b+1)``."""
    a, b = _ab(alpha)
    pb = pi_alpha(b)
    phi2 = float(phi[1])
    path = GeodesicPath.from_spherical((a, b), q0, phi)
    om = path.omega[1]
    d = _phase_distance(pb, phi2, math.copysign(1.0, om))
    q_end = phi2 + math.copysign(d, om)
    s2 = gsincos(grushin_params(b), phi2)[0]
    y0 = float(q0[1])
    return abs(y0 / s2) ** (b + 1) * abs(_eta_increment(b, phi2, q_end - phi2)) / (b + 1)


def K_fun(alpha: int, phi1: float) -> float:
    """``K(phi1) = 2 (pi_a - eta_a(phi1)) / sin_a(phi1)^{a+1}`` on ``[pi_a/2, pi_a)``."""
    pa = pi_alpha(alpha)
    if not (0.5 * pa <= phi1 < pa):
        raise DomainError("K is defined for pi_a/2 <= phi1 < pi_a")
    s = gsincos(grushin_params(alpha), phi1)[0]
    return 2.0 * (pa - eta(alpha, phi1)) / s ** (alpha + 1)


# ---------------------------------------------------------------------------
# singular base points


@dataclass(frozen=True)
class SingularFiberCoord:
    """Coordinates on ``H^{-1}_{q0}(1/2)`` at a singular point of ``G^3``.

    * ``"x0_zero"`` (``x0 = 0, y0 != 0``): ``u0 = sign_u``,
      ``v0 = kappa cos_b(angle)``, ``w0 = kappa rho_b(sin_b(angle) / y0)``.
    * ``"y0_zero"`` (``y0 = 0, x0 != 0``): ``u0 = cos_a(angle)``,
      ``v0 = rho_a(sin_a(angle) / x0)`` and ``w0`` free.
    * ``"both_zero"``: ``u0 = sign_u`` with ``v0, w0`` free.
    """

    case: str
    angle: float = 0.0
    kappa: float = 0.0
    sign_u: float = 1.0
    v0: float = 0.0
    w0: float = 0.0

    def covector(self, alpha, q0) -> np.ndarray:
        a, b = _ab(alpha)
        if self.case == "x0_zero":
            s, c = gsincos(grushin_params(b), self.angle)
            return np.array([self.sign_u, self.kappa * c, self.kappa * rho(b, s / q0[1])])
        if self.case == "y0_zero":
            s, c = gsincos(grushin_params(a), self.angle)
            return np.array([c, rho(a, s / q0[0]), self.w0])
        if self.case == "both_zero":
            return np.array([self.sign_u, self.v0, self.w0])
        raise ValueError(f"unknown singular case {self.case!r}")


def singular_case(q0) -> str | None:
    x0, y0 = float(q0[0]), float(q0[1])
    if x0 == 0 and y0 == 0:
        return "both_zero"
    if x0 == 0:
        return "x0_zero"
    if y0 == 0:
        return "y0_zero"
    return None


def singular_geodesic(alpha, q0, fiber: SingularFiberCoord) -> GeodesicPath:
    """Closed-form geodesic from a singular point of ``G^3``.

    The fiber coordinates fix the covector and the general constructor
    recovers amplitudes and phases from the conserved quantities.  For
    ``x0 = 0`` this gives ``|omega_1| = kappa^{1/a}`` and ``|A_1| = kappa^{-1/a}``
    with the phase at 0 or ``pi_a`` according to ``sign(u0)``.
    """
    a, b = _ab(alpha)
    q0 = np.asarray(q0, dtype=float)
    case = singular_case(q0)
    if case is None:
        raise DomainError("q0 is a Riemannian point")
    if fiber.case != case:
        raise DomainError(f"fiber tagged {fiber.case!r} but q0 is in case {case!r}")
    if case in ("x0_zero", "both_zero") and abs(fiber.sign_u) != 1.0:
        raise DomainError("sign_u must be +1 or -1")
    lam = fiber.covector((a, b), q0)
    _energy_check((a, b), q0, lam)
    return GeodesicPath.from_covector((a, b), q0, lam, meta={"singular_case": case})


def riemannian_cases(points: Iterable) -> list[str]:
    return [singular_case(p) or "riemannian" for p in points]
