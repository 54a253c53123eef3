"""Acceptance suite shared by the test-suite and ``grushin verify``.

Each ``criterion_N`` runs one numbered check at its default sizes and returns a
:class:`CriterionResult` carrying the worst observed errors.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import gentrig, jacobian, oracle, synthesis
from .geoflow import GeodesicPath, MultiIndex, hamiltonian, random_angles, spherical_to_covector

__all__ = ["CriterionResult", "CRITERIA", "run", "run_all"]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    runtime: float = 0.0
    budget: float = math.inf

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.metrics.items())
        return f"[{status}] criterion {self.number} ({self.name}) {self.runtime:.1f}s: {shown}"

    def as_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "runtime": self.runtime, "budget": self.budget,
                "metrics": {k: _jsonable(v) for k, v in self.metrics.items()}}


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def _random_point(rng, dim, lo=0.3, hi=1.5):
    return rng.uniform(lo, hi, dim) * rng.choice([-1.0, 1.0], dim)


# ---------------------------------------------------------------------------


def criterion_1(seed: int = 0) -> dict:
    worst_pyth = worst_rt = 0.0
    for a in (2, 4, 6, 8, 16):
        params = gentrig.TrigParams(a, 2)
        half = gentrig.half_period(params)
        x = np.linspace(-2 * half, 2 * half, 10_000)
        s, c = gentrig.gsincos(params, x)
        worst_pyth = max(worst_pyth, float(np.max(np.abs(np.abs(s) ** a + np.abs(c) ** 2 - 1))))
        xq = np.linspace(0.0, 0.5 * half, 2001)
        back = gentrig.forward(params, np.clip(gentrig.gsin(params, xq), 0.0, 1.0))
        worst_rt = max(worst_rt, float(np.max(np.abs(back - xq))))
    pi_err = abs(gentrig.half_period(gentrig.TrigParams(2, 2)) - math.pi)
    ok = worst_pyth <= 1e-10 and pi_err <= 1e-12 and worst_rt <= 1e-12
    return {"passed": ok, "pythagorean": worst_pyth, "pi_22": pi_err, "round_trip": worst_rt}


def _random_index(rng, n):
    while True:
        alpha = tuple(int(v) for v in rng.integers(0, 4, n))
        if any(alpha):
            return MultiIndex(alpha)


def criterion_2(seed: int = 0, cases: int = 50) -> dict:
    rng = np.random.default_rng(seed)
    worst = drift = 0.0
    fixed = [MultiIndex((1, 0, 2, 0)), MultiIndex((2, 0, 1, 0)), MultiIndex((3, 0, 3, 0))]
    for k in range(cases):
        index = fixed[k] if k < len(fixed) else _random_index(rng, int(rng.integers(1, 5)))
        x0 = _random_point(rng, index.dim)
        path = GeodesicPath.from_spherical(index, x0, random_angles(index, rng))
        horizon = min(synthesis.cut_report(path).tau, 10.0)
        ts = np.linspace(0.0, horizon, 201)
        worst = max(worst, oracle.closed_form_residual(path, ts))
        x, p = path.state(ts)
        drift = max(drift, float(np.max(np.abs(hamiltonian(index, x, p) - 0.5))))
    return {"passed": worst <= 1e-6 and drift <= 1e-10, "sup_residual": worst, "energy_drift": drift}


def criterion_3(seed: int = 0, samples: int = 100) -> dict:
    rng = np.random.default_rng(seed)
    indices = [MultiIndex((1,)), MultiIndex((2,)), MultiIndex((3,)),
               MultiIndex((1, 1)), MultiIndex((2, 2)), MultiIndex((1, 3)), MultiIndex((2, 1)),
               MultiIndex((1, 0, 2, 0)), MultiIndex((2, 0, 1, 0))]
    worst = 0.0
    for k in range(samples):
        index = indices[k % len(indices)]
        x0 = _random_point(rng, index.dim)
        phi = random_angles(index, rng, margin=0.1)
        path = GeodesicPath.from_spherical(index, x0, phi)
        tau = synthesis.cut_report(path).tau
        t = rng.uniform(0.05, 0.95) * min(tau, 5.0)
        d = jacobian.det_spherical(path, t).determinant
        ref = jacobian.det_fd(index, x0, t, phi)
        worst = max(worst, abs(d - ref) / max(abs(ref), 1e-12))
    worst_app = 0.0
    for _ in range(20):
        index = MultiIndex((int(rng.integers(1, 4)), 0, int(rng.integers(1, 4)), 0))
        x0 = _random_point(rng, index.dim)
        path = GeodesicPath.from_spherical(index, x0, random_angles(index, rng, margin=0.1))
        t = rng.uniform(0.1, 2.0)
        direct, expanded = jacobian.sparse4_det(path, t)
        factored = jacobian.det_spherical(path, t).determinant
        scale = max(abs(factored), 1e-300)
        worst_app = max(worst_app, abs(expanded - factored) / scale, abs(direct - factored) / scale)
    return {"passed": worst <= 1e-5 and worst_app <= 1e-9,
            "fd_rel_err": worst, "expansion_rel_err": worst_app}


def criterion_4(seed: int = 0, cases: int = 200) -> dict:
    rng = np.random.default_rng(seed)
    early = 0
    for _ in range(cases):
        ab = tuple(int(v) for v in rng.integers(1, 4, 2))
        q0 = np.append(_random_point(rng, 2), rng.uniform(-1, 1))
        path = GeodesicPath.from_spherical(ab, q0, random_angles(MultiIndex(ab), rng))
        tau = synthesis.cut_report(path).tau
        ts = np.linspace(0.0, tau, 1002)[1:-1]
        for j in (0, 1):
            S = jacobian.s_factor(path, j, ts)
            if not (np.all(S > 0) or np.all(S < 0)):
                early += 1
    worst_eq = 0.0
    checked = 0
    for _ in range(40):
        ab = tuple(int(v) for v in rng.integers(1, 4, 2))
        q0 = np.append(_random_point(rng, 2), 0.0)
        pb = gentrig.pi_alpha(ab[1])
        path = GeodesicPath.from_spherical(ab, q0, [0.5 * gentrig.pi_alpha(ab[0]),
                                                     rng.uniform(0.05, 0.95) * 2 * pb])
        rep = synthesis.cut_report(path)
        if rep.tau_per_index[0] <= rep.tau_per_index[1]:
            checked += 1
            worst_eq = max(worst_eq, abs(jacobian.s_factor(path, 0, rep.tau_per_index[0])))
    ok = early == 0 and worst_eq <= 1e-10 and checked > 0
    return {"passed": ok, "early_zeros": early, "S1_at_tau1": worst_eq, "equality_cases": checked}


def criterion_5(seed: int = 0, cases: int = 100) -> dict:
    rng = np.random.default_rng(seed)
    worst = 0.0
    early = 0
    for _ in range(cases):
        index = _random_index(rng, int(rng.integers(1, 4)))
        x0 = _random_point(rng, index.dim)
        phi = random_angles(index, rng)
        path = GeodesicPath.from_spherical(index, x0, phi)
        rep = synthesis.cut_report(path)
        j = rep.argmin[0]
        partner = GeodesicPath.from_spherical(index, x0, synthesis.symmetric_partner(index, phi, j))
        worst = max(worst, float(np.max(np.abs(path(rep.tau) - partner(rep.tau)))))
        ts = np.linspace(0.0, rep.tau, 1002)[1:-1]
        gap = np.max(np.abs(path(ts) - partner(ts)), axis=-1)
        early += int(np.any(gap <= 1e-8))
    return {"passed": worst <= 1e-8 and early == 0, "meet_error": worst, "early_meetings": early}


BRUTE_CASES = (((2, 2), (1.0, 1.0, 0.0)), ((1, 1), (2.4, 1.0, 0.0)))


def brute_covectors(ab, q0, count: int, rng, tau_cap: float = 12.0, margin: float = 0.15):
    """Random unit covectors with both angles away from quarter periods and ``tau <= tau_cap``."""
    pa, pb = gentrig.pi_alpha(ab[0]), gentrig.pi_alpha(ab[1])
    out = []
    while len(out) < count:
        phi = np.array([rng.uniform(0.1, 0.9) * pa, rng.uniform(0.05, 0.95) * 2 * pb])
        far1 = abs(phi[0] - 0.5 * pa) > margin * pa
        far2 = abs(math.fmod(phi[1], pb) - 0.5 * pb) > margin * pb
        if not (far1 and far2):
            continue
        path = GeodesicPath.from_spherical(ab, q0, phi)
        tau = synthesis.cut_report(path).tau
        if tau <= tau_cap:
            out.append((phi, path.p0, tau))
    return out


def criterion_6(seed: int = 0, per_point: int = 20) -> dict:
    rng = np.random.default_rng(seed)
    misses = 0
    worst_width = 0.0
    found = 0
    for ab, q0 in BRUTE_CASES:
        for _, lam, tau in brute_covectors(ab, q0, per_point, rng):
            est = oracle.brute_cut_time(ab, q0, lam, 1.25 * tau)
            found += int(est.found)
            if not est.contains(tau, rtol=1e-9):
                misses += 1
            worst_width = max(worst_width, est.width / tau)
    ok = misses == 0 and worst_width <= 0.02
    return {"passed": ok, "misses": misses, "max_rel_width": worst_width, "witnesses": found}


def _sign_changes(flags) -> int:
    flags = np.asarray(flags, dtype=bool)
    return int(np.sum(flags != np.roll(flags, 1)))


def criterion_7(seed: int = 0) -> dict:
    t2 = synthesis.classify_point((1, 1), (2.4, 1.0, 0.0)).classification == "Type2Strict"
    t1 = synthesis.classify_point((2, 2), (1.0, 1.0, 0.0)).classification == "Type1Strict"
    q2 = (2.4, 1.0, 0.0)
    grid = np.linspace(0.0, 2 * math.pi, 4000, endpoint=False)
    flags = [synthesis.p_region((1, 1), q2, *synthesis.fiber_covector((1, 1), q2, ph)[1:])
             for ph in grid]
    changes = _sign_changes(flags)
    e1 = synthesis.trace_E((2, 2), (1.0, 1.0, 0.0), 400)
    e2 = synthesis.trace_E((1, 1), q2, 400)
    ef = synthesis.trace_E((1, 1), q2, 400, variant="full")
    simple = e1.is_simple() and e2.is_simple()
    closed = e1.closed and e2.closed and e2.closure_gap() <= 1e-9
    full_bad = not ef.is_simple()
    worst_off = 0.0
    for ab, q0 in (((1, 1), q2), ((2, 2), (1.0, 1.0, 0.0)), ((1, 2), (0.8, -1.3, 0.5))):
        off = synthesis.cut_y_offset(ab, q0[1])
        for poly in synthesis.lambda2_images(ab, q0, 32):
            if len(poly.points):
                dz = np.abs(np.abs(poly.points[:, 2] - q0[2]) - off)
                worst_off = max(worst_off, float(np.max(dz)))
    ok = t1 and t2 and changes == 4 and simple and closed and full_bad and worst_off <= 1e-10
    return {"passed": ok, "type1": t1, "type2": t2, "sign_changes": changes,
            "E_simple": simple, "E_closed": closed, "full_nonsimple": full_bad,
            "lambda2_offset_err": worst_off}


def criterion_8(seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    worst = 0.0
    SF = synthesis.SingularFiberCoord
    for _ in range(10):
        ab = tuple(int(v) for v in rng.integers(1, 4, 2))
        a, b = ab
        y0, x0, z0 = rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5), rng.uniform(-1, 1)
        pb, pa = gentrig.pi_alpha(b), gentrig.pi_alpha(a)
        # H = u^2/2 at x0 = 0, so u0 = +-1 and (v0, w0) are free
        cases = [
            ((0.0, y0, z0), SF("x0_zero", angle=rng.uniform(0, 2 * pb),
                               kappa=rng.uniform(0.3, 2), sign_u=float(rng.choice([-1, 1])))),
            ((x0, 0.0, z0), SF("y0_zero", angle=rng.uniform(0.1, 0.9) * pa,
                               w0=rng.uniform(-1, 1))),
            ((0.0, 0.0, z0), SF("both_zero", sign_u=float(rng.choice([-1, 1])),
                                v0=rng.uniform(-1, 1), w0=rng.uniform(-1, 1))),
        ]
        for q0, fib in cases:
            path = synthesis.singular_geodesic(ab, q0, fib)
            tau = synthesis.cut_report(path).tau
            ts = np.linspace(0.0, min(tau, 8.0) if math.isfinite(tau) else 8.0, 101)
            worst = max(worst, oracle.closed_form_residual(path, ts))
    # frequency continuity: Riemannian omegas approach the global formulas
    worst_om = 0.0
    for _ in range(10):
        ab = tuple(int(v) for v in rng.integers(1, 4, 2))
        lam_s = np.array([float(rng.choice([-1, 1])), rng.uniform(-1, 1), rng.uniform(-1, 1)])
        for q_sing in ((0.0, rng.uniform(0.5, 1.5), 0.0), (rng.uniform(0.5, 1.5), 0.0, 0.0)):
            q_sing = np.array(q_sing)
            lam = lam_s.copy()
            if q_sing[1] == 0.0:
                lam = lam / math.sqrt(2 * hamiltonian(ab, q_sing, lam))
            target = synthesis.omega_global_3d(ab, q_sing, lam)
            eps = 1e-8
            q = q_sing + np.array([eps if q_sing[0] == 0 else 0, eps if q_sing[1] == 0 else 0, 0])
            lq = lam / math.sqrt(2 * hamiltonian(ab, q, lam))
            path = GeodesicPath.from_covector(ab, q, lq)
            om = (abs(path.omega[0]), abs(path.omega[1]) if path.is_trig(1) else 0.0)
            worst_om = max(worst_om, abs(om[0] - target[0]), abs(om[1] - target[1]))
    kinds = {synthesis.cut_locus_3d((1, 1), q).case for q in
             ((0.0, 0.0, 0.0), (0.0, 1.0, 0.0), (1.0, 0.0, 0.0))}
    descriptors = kinds == {"singular_both_zero", "singular_x0_zero", "singular_y0_zero"}
    ok = worst <= 1e-6 and worst_om <= 1e-6 and descriptors
    return {"passed": ok, "rk_residual": worst, "omega_limit_err": worst_om,
            "singular_descriptors": descriptors}


def criterion_9(seed: int = 0, pairs: int = 50) -> dict:
    rng = np.random.default_rng(seed)
    spurious = 0
    worst_root = 0.0
    for _ in range(pairs):
        a = int(rng.integers(1, 6))
        pa = gentrig.pi_alpha(a)
        phi = rng.uniform(0.02, 0.98) * pa
        if abs(phi - 0.5 * pa) < 1e-3 * pa:
            phi += 0.01 * pa
        roots = jacobian.tan_roots(a, phi)
        for r in roots:
            if abs(r) > 1e-8:
                spurious += 1
            worst_root = max(worst_root, abs(r))
        if not roots:
            spurious += 1
    return {"passed": spurious == 0, "spurious_roots": spurious, "max_root": worst_root}


CRITERIA: dict[int, tuple[str, Callable[..., dict], float]] = {
    1: ("generalized trig suite", criterion_1, 10.0),
    2: ("closed form vs ODE", criterion_2, 60.0),
    3: ("determinant factorization", criterion_3, 60.0),
    4: ("conjugate-time structure", criterion_4, 30.0),
    5: ("symmetric-pair cut witness", criterion_5, 30.0),
    6: ("3D cut-time brute force", criterion_6, 600.0),
    7: ("classification and loci", criterion_7, 60.0),
    8: ("singular fibers", criterion_8, 60.0),
    9: ("tan equation roots", criterion_9, 10.0),
}


def run(number: int, seed: int = 0) -> CriterionResult:
    name, fn, budget = CRITERIA[number]
    start = time.perf_counter()
    out = dict(fn(seed=seed))
    elapsed = time.perf_counter() - start
    passed = bool(out.pop("passed")) and elapsed <= budget
    return CriterionResult(number, name, passed, out, elapsed, budget)


def run_all(numbers=None, seed: int = 0) -> list[CriterionResult]:
    return [run(k, seed) for k in (numbers or sorted(CRITERIA))]
