"""Independent numerical ground truth for the closed forms.

Nothing here uses the generalized trigonometric functions: geodesics come from
integrating Hamilton's equations in gradient form,

    x_j' = dH/dp_j = xi_j^2 p_j,
    p_i' = -dH/dx_i = -sum_{j > i} p_j^2 a_i x_i^{2 a_i - 1} prod_{k < j, k != i} x_k^{2 a_k},

and cut times come from brute-force searches for equal-time intersections
of geodesics from the same base point, together with the first conjugate
time read off the variational equations.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .geoflow import GeodesicPath, MultiIndex, _as_index, hamiltonian, is_riemannian

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "hamilton_rhs",
    "integrate_hamilton",
    "rk4",
    "closed_form_residual",
    "CutEstimate",
    "brute_cut_time",
    "fiber_chart",
    "fiber_chart_inverse",
    "conjugate_time_numeric",
]


@dataclass(frozen=True)
class IntegratorConfig:
    """``method`` is ``"dop853"`` (adaptive, scipy) or ``"rk4"`` (fixed step)."""

    method: str = "dop853"
    rtol: float = 1e-12
    atol: float = 1e-13
    step: float = 1e-3
    max_time: float = 1e4

    def __post_init__(self) -> None:
        if self.method not in ("dop853", "rk4"):
            raise ValueError(f"unknown integrator {self.method!r}")


def _rhs_3d(a: int, b: int, y: np.ndarray) -> np.ndarray:
    """:func:`hamilton_rhs` written out for ``n = 2``; cuts per-call overhead."""
    x1, x2, u, v, w = y[0], y[1], y[3], y[4], y[5]
    px = x1 ** (2 * a) if a else 1.0
    py = x2 ** (2 * b) if b else 1.0
    out = np.empty_like(y)
    out[0] = u
    out[1] = px * v
    out[2] = px * py * w
    w2 = w * w
    out[3] = -a * x1 ** (2 * a - 1) * (v * v + py * w2) if a else 0.0
    out[4] = -b * x2 ** (2 * b - 1) * px * w2 if b else 0.0
    out[5] = 0.0
    return out


def hamilton_rhs(index: MultiIndex, y: np.ndarray) -> np.ndarray:
    """Right-hand side for the state ``y = (x, p)``; extra trailing axes vectorize."""
    if index.n == 2:
        return _rhs_3d(*index.alpha, y)
    return _rhs_general(index, y)


def _rhs_general(index: MultiIndex, y: np.ndarray) -> np.ndarray:
    dim = index.dim
    x, p = y[:dim], y[dim:]
    alpha = index.alpha
    # powers x_k^{2 a_k} and prefix products
    pw = [x[k] ** (2 * a) if a else np.ones_like(x[k]) for k, a in enumerate(alpha)]
    xi2 = [np.ones_like(x[0])]
    for k in range(len(alpha)):
        xi2.append(xi2[-1] * pw[k])
    dx = np.stack([xi2[j] * p[j] for j in range(dim)])
    dp = np.zeros_like(p)
    for i, a in enumerate(alpha):
        if not a:
            continue
        dxi = a * x[i] ** (2 * a - 1)
        acc = np.zeros_like(x[0])
        for j in range(i + 1, dim):
            prod = np.ones_like(x[0])
            for k in range(j):
                if k != i:
                    prod = prod * pw[k]
            acc = acc + p[j] ** 2 * prod
        dp[i] = -dxi * acc
    return np.concatenate([dx, dp])


@dataclass
class Trajectory:
    """Sampled solution with cubic Hermite dense output."""

    index: MultiIndex
    t: np.ndarray
    y: np.ndarray  # shape (2*dim, len(t))
    nfev: int = 0
    _spline: CubicHermiteSpline | None = field(default=None, repr=False)

    @property
    def x(self) -> np.ndarray:
        return self.y[: self.index.dim].T

    @property
    def p(self) -> np.ndarray:
        return self.y[self.index.dim :].T

    def energy_drift(self) -> float:
        h = hamiltonian(self.index, self.x, self.p)
        return float(np.max(np.abs(h - h[0])))

    def __call__(self, t):
        if self._spline is None:
            dydt = hamilton_rhs(self.index, self.y)
            self._spline = CubicHermiteSpline(self.t, self.y, dydt, axis=1)
        return self._spline(t).T


def rk4(index, x0, p0, t_end: float, steps: int) -> Trajectory:
    """Classical fixed-step Runge-Kutta on ``[0, t_end]``."""
    index = _as_index(index)
    y = np.concatenate([np.asarray(x0, float), np.asarray(p0, float)])
    h = t_end / steps
    ys = np.empty((y.size, steps + 1))
    ys[:, 0] = y
    f = lambda v: hamilton_rhs(index, v)
    for k in range(steps):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys[:, k + 1] = y
    return Trajectory(index, np.linspace(0.0, t_end, steps + 1), ys, nfev=4 * steps)


def integrate_hamilton(index, x0, p0, t_end: float, config: IntegratorConfig | None = None,
                       t_eval=None) -> Trajectory:
    """Integrate Hamilton's equations from ``(x0, p0)`` on ``[0, t_end]``.

    Raises
    ------
    RuntimeError
        If the adaptive integrator fails (step-size underflow).
    """
    index = _as_index(index)
    config = config or IntegratorConfig()
    if not 0 <= t_end <= config.max_time:
        raise ValueError(f"t_end must lie in [0, {config.max_time}]")
    if config.method == "rk4":
        steps = max(1, int(math.ceil(t_end / config.step)))
        return rk4(index, x0, p0, t_end, steps)
    y0 = np.concatenate([np.asarray(x0, float), np.asarray(p0, float)])
    if t_end == 0:
        return Trajectory(index, np.zeros(1), y0[:, None])
    sol = solve_ivp(
        lambda _t, y: hamilton_rhs(index, y),
        (0.0, t_end),
        y0,
        method="DOP853",
        rtol=config.rtol,
        atol=config.atol,
        t_eval=t_eval,
    )
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")
    return Trajectory(index, sol.t, sol.y, nfev=sol.nfev)


def closed_form_residual(path: GeodesicPath, t_grid, config: IntegratorConfig | None = None) -> float:
    """Sup-norm gap between the closed form and the integrator on ``t_grid``."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0 or np.max(t_grid) == 0:
        return 0.0
    ts = np.unique(np.concatenate([[0.0], t_grid]))
    traj = integrate_hamilton(path.index, path.x0, path.p0, float(ts[-1]), config, t_eval=ts)
    x, p = path.state(ts)
    ref = np.concatenate([x, p], axis=1)
    return float(np.max(np.abs(ref - traj.y.T)))


# ---------------------------------------------------------------------------
# brute-force cut times


@dataclass
class CutEstimate:
    """Bracket ``[t_low, t_high]`` for the cut time.

    ``t_high`` is either the time at which an explicit ``witness`` covector's
    geodesic meets the reference one, or the numerical first conjugate time
    (``meta["t_con"]``), whichever is smaller.  ``t_low`` is grid evidence: no
    sampled cell of covectors comes near the reference geodesic earlier.
    """

    t_low: float
    t_high: float
    witness: np.ndarray | None
    meta: dict = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return math.isfinite(self.t_high)

    def contains(self, t: float, rtol: float = 0.0) -> bool:
        return self.t_low * (1 - rtol) <= t <= self.t_high * (1 + rtol)

    @property
    def width(self) -> float:
        return self.t_high - self.t_low


def fiber_chart(index, x0, theta) -> np.ndarray:
    """Covectors with ``H = 1/2`` from classical spherical angles.

    ``xi_j p_j`` are the Cartesian coordinates of a point on the unit sphere,
    ``theta[..., 0..n-2]`` in ``[0, pi]`` and ``theta[..., n-1]`` in
    ``[0, 2 pi)``.  Only defined at Riemannian points.
    """
    index = _as_index(index)
    x0 = np.asarray(x0, dtype=float)
    theta = np.asarray(theta)
    theta = theta if np.iscomplexobj(theta) else theta.astype(float)
    xi = np.cumprod(np.concatenate([[1.0], x0[:-1] ** (2 * np.array(index.alpha))])) ** 0.5
    out = np.empty(theta.shape[:-1] + (index.dim,), dtype=theta.dtype)
    radius = np.ones(theta.shape[:-1], dtype=theta.dtype)
    for j in range(index.n):
        out[..., j] = radius * np.cos(theta[..., j]) / xi[j]
        radius = radius * np.sin(theta[..., j])
    out[..., index.n] = radius / xi[index.n]
    return out


def fiber_chart_inverse(index, x0, p0) -> np.ndarray:
    index = _as_index(index)
    x0 = np.asarray(x0, dtype=float)
    xi = np.cumprod(np.concatenate([[1.0], x0[:-1] ** (2 * np.array(index.alpha))])) ** 0.5
    e = xi * np.asarray(p0, dtype=float)
    e = e / np.linalg.norm(e)
    theta = np.empty(index.n)
    for j in range(index.n - 1):
        theta[j] = math.atan2(np.linalg.norm(e[j + 1:]), e[j])
    theta[-1] = math.atan2(e[-1], e[-2]) % (2 * math.pi)
    return theta


def _batch_rk4_step(index, y, h):
    f = lambda v: hamilton_rhs(index, v)
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _cross3(a, b):
    return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]


def _dot3(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


class _CellScanner:
    """Integrates corner fans of angular boxes and records capture times.

    A cell captures at time ``t`` when the reference point ``x(t)`` projects
    into the image patch of the cell and lies within ``factor`` cell
    diameters of it.  Cells whose
    angular box is within ``exclusion`` (relative) of the reference angles
    are ignored, so that the reference geodesic does not witness itself.
    """

    def __init__(self, index, q0, lambda0, dt, exclusion, factor):
        self.index = index
        self.q0 = q0
        self.lambda0 = lambda0
        self.theta_ref = fiber_chart_inverse(index, q0, lambda0)
        self.dt = dt
        self.exclusion = exclusion
        self.factor = factor
        self.spans = (math.pi, 2 * math.pi)

    def _near(self, lo1, hi1, lo2, hi2):
        r1, r2 = self.theta_ref
        d1 = np.maximum(0.0, np.maximum(lo1 - r1, r1 - hi1))
        c2 = 0.5 * (lo2 + hi2)
        half = 0.5 * (hi2 - lo2)
        d2 = np.abs(np.mod(c2 - r2 + math.pi, 2 * math.pi) - math.pi) - half
        d2 = np.maximum(d2, 0.0)
        return (d1 < self.exclusion * self.spans[0]) & (d2 < self.exclusion * self.spans[1])

    def _inside(self, pts, ref, h_prev, crossing_only=False):
        """Reference point near or passing through the image patch.

        The patch is tested as two parallelograms, spanned at the first corner
        and at the opposite one, so cells touching a chart pole (where one
        side collapses to a point) are still covered.  The point must project
        into a patch (with a half-cell margin) and either lie within
        ``factor`` diameters along the normal or have crossed the patch since
        the previous step.  Returns the hit mask and the signed normal offsets
        of both anchors.
        """
        anchors = (
            (pts[:, :-1, :-1], pts[:, 1:, :-1], pts[:, :-1, 1:]),
            (pts[:, 1:, 1:], pts[:, :-1, 1:], pts[:, 1:, :-1]),
        )
        hit = None
        offsets = []
        m = 0.5
        for k, (p00, q1, q2) in enumerate(anchors):
            e1 = [q1[..., c] - p00[..., c] for c in range(3)]
            e2 = [q2[..., c] - p00[..., c] for c in range(3)]
            r = [ref[c] - p00[..., c] for c in range(3)]
            nrm = _cross3(e1, e2)
            nn = nrm[0] ** 2 + nrm[1] ** 2 + nrm[2] ** 2
            # Cramer's rule for r = s e1 + u e2 + h nrm, with det = |nrm|^2
            ok = nn > 1e-300
            with np.errstate(all="ignore"):
                inv = np.where(ok, 1.0 / nn, 0.0)
                s = _dot3(_cross3(r, e2), nrm) * inv
                u = _dot3(_cross3(e1, r), nrm) * inv
                h = _dot3(r, nrm) * inv
                d_plus = [e1[c] + e2[c] for c in range(3)]
                d_minus = [e1[c] - e2[c] for c in range(3)]
                diam = np.sqrt(np.maximum(_dot3(d_plus, d_plus), _dot3(d_minus, d_minus)))
                normal_dist = np.abs(h) * np.sqrt(nn)
            inside = ok & (s >= -m) & (s <= 1 + m) & (u >= -m) & (u <= 1 + m)
            crossed = np.sign(h) * np.sign(h_prev[k]) < 0
            if crossing_only:
                cur = inside & crossed
            else:
                cur = inside & ((normal_dist <= self.factor * diam) | crossed)
            hit = cur if hit is None else hit | cur
            offsets.append(h)
        return hit, np.stack(offsets)

    def scan(self, boxes: np.ndarray, m1: int, m2: int, t_end: float,
             crossing_only: bool = False):
        """Subdivide each box ``(lo1, hi1, lo2, hi2)`` into ``m1 x m2`` cells.

        Returns child boxes ``(k * m1 * m2, 4)`` and their capture times.  With
        ``crossing_only`` a cell captures only when the reference point passes
        through its patch, and the capture time is the step before the crossing.
        """
        boxes = np.atleast_2d(boxes)
        k = len(boxes)
        u1 = np.linspace(0.0, 1.0, m1 + 1)
        u2 = np.linspace(0.0, 1.0, m2 + 1)
        g1 = boxes[:, 0:1] + (boxes[:, 1:2] - boxes[:, 0:1]) * u1  # (k, m1+1)
        g2 = boxes[:, 2:3] + (boxes[:, 3:4] - boxes[:, 2:3]) * u2
        T1 = np.broadcast_to(g1[:, :, None], (k, m1 + 1, m2 + 1))
        T2 = np.broadcast_to(g2[:, None, :], (k, m1 + 1, m2 + 1))
        theta = np.stack([T1, T2], axis=-1).reshape(-1, 2)
        p = fiber_chart(self.index, self.q0, theta).T
        dim = self.index.dim
        x = np.repeat(self.q0[:, None], p.shape[1], axis=1)
        y = np.concatenate([np.concatenate([x, p], axis=0),
                            np.concatenate([self.q0, self.lambda0])[:, None]], axis=1)
        lo1, hi1 = g1[:, :-1, None], g1[:, 1:, None]
        lo2, hi2 = g2[:, None, :-1], g2[:, None, 1:]
        shape = (k, m1, m2)
        child = np.stack([np.broadcast_to(lo1, shape), np.broadcast_to(hi1, shape),
                          np.broadcast_to(lo2, shape), np.broadcast_to(hi2, shape)], axis=-1)
        near = self._near(*(child[..., c] for c in range(4)))
        capture = np.full(shape, np.inf)
        h_prev = np.zeros((2,) + shape)
        nsteps = max(1, int(math.ceil(t_end / self.dt)))
        h = t_end / nsteps
        for step in range(1, nsteps + 1):
            y = _batch_rk4_step(self.index, y, h)
            pts = y[:dim, :-1].T.reshape(k, m1 + 1, m2 + 1, dim)
            ref = y[:dim, -1]
            hit, h_prev = self._inside(pts, ref, h_prev, crossing_only)
            hit &= ~near & np.isinf(capture)
            capture[hit] = (step - 1 if crossing_only else step) * h
        return child.reshape(-1, 4), capture.reshape(-1)


_CSTEP = 1e-30


def _variational_rhs(index: MultiIndex, y: np.ndarray, n_tan: int) -> np.ndarray:
    """Hamilton's equations plus ``n_tan`` tangent vectors, ``J v`` by complex step."""
    d2 = 2 * index.dim
    base = y[:d2]
    out = [hamilton_rhs(index, base)]
    for k in range(n_tan):
        v = y[d2 * (k + 1):d2 * (k + 2)]
        out.append(hamilton_rhs(index, base + 1j * _CSTEP * v).imag / _CSTEP)
    return np.concatenate(out)


def conjugate_time_numeric(index, q0, lambda0, t_max: float, *, rtol: float = 1e-12,
                           samples: int = 400) -> float:
    """First zero of ``det[x', dx/dtheta]`` along the numerically integrated geodesic.

    ``theta`` are the classical fiber angles of :func:`fiber_chart`, so the
    determinant is the Jacobian of ``(t, theta) -> exp_q0(t p(theta))`` up to
    the nonvanishing chart factor.  Tangent vectors solve the variational
    equations.  The first sign change on a grid of ``samples`` steps is
    refined with Brent's method on the dense output; ``inf`` if there is none
    in ``(0, t_max]``.  A zero of even multiplicity is not detected.
    """
    index = _as_index(index)
    q0 = np.asarray(q0, dtype=float)
    lambda0 = np.asarray(lambda0, dtype=float)
    theta = fiber_chart_inverse(index, q0, lambda0)
    n = index.n
    dim = index.dim
    tangents = []
    for k in range(n):
        dth = np.zeros(n, dtype=complex)
        dth[k] = 1j * _CSTEP
        dp = fiber_chart(index, q0, theta + dth).imag / _CSTEP
        tangents.append(np.concatenate([np.zeros(dim), dp]))
    y0 = np.concatenate([q0, lambda0, *tangents])
    sol = solve_ivp(lambda _t, y: _variational_rhs(index, y, n), (0.0, t_max), y0,
                    method="DOP853", rtol=rtol, atol=1e-14, dense_output=True)
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")
    d2 = 2 * dim

    def det(t):
        y = sol.sol(t)
        xdot = hamilton_rhs(index, y[:d2])[:dim]
        cols = [xdot] + [y[d2 * (k + 1):d2 * (k + 1) + dim] for k in range(n)]
        return float(np.linalg.det(np.column_stack(cols)))

    ts = np.linspace(0.0, t_max, samples + 1)[1:]
    vals = np.array([det(t) for t in ts])
    ref = np.sign(vals[0])
    flips = np.nonzero(np.sign(vals) != ref)[0]
    if ref == 0 or flips.size == 0:
        return math.inf
    k = int(flips[0])
    if vals[k] == 0:
        return float(ts[k])
    lo = ts[k - 1] if k > 0 else 0.5 * ts[0]
    return float(optimize.brentq(det, lo, ts[k], xtol=1e-13, rtol=1e-15))


def brute_cut_time(index, q0, lambda0, t_max: float, *, grid: tuple[int, int] = (24, 48),
                   refine: int = 4, depth: int = 3, dt: float | None = None,
                   exclusion: float = 0.05, factor: float = 1.5, tol: float = 1e-9,
                   batch: int = 24, max_expansions: int = 2000) -> CutEstimate:
    """Bracket the cut time of ``lambda0`` by searching for meeting geodesics.

    A geodesic stops minimizing once another unit-speed geodesic from ``q0``
    reaches the same point at the same time.  The search is branch and bound
    over boxes of the classical-angle chart of the unit cotangent fiber:

    1. a coarse ``grid`` of cells is integrated with one batched RK4 run
       together with the reference geodesic and each cell gets a capture time;
    2. the earliest-capturing boxes are split ``refine x refine`` until
       ``depth`` levels deep;
    3. each leaf is polished by least squares on ``(t, theta)`` against the
       adaptive integrator.  A converged witness bounds the cut time above;
    4. the search stops once every unresolved box captures after the best
       witness.  Leaves capture only on an actual crossing, timed at the step
       before it.  ``t_low`` is the capture time of a leaf cell centred on
       the witness, or the earliest converged-leaf capture if that cell
       does not capture.

    A geodesic also stops minimizing at its first conjugate point, where
    nearby geodesics only meet it in the limit.  That time comes from
    :func:`conjugate_time_numeric`, caps the search horizon, and clips both
    ends of the bracket.

    Only ``n = 2`` at Riemannian base points is supported.
    """

    index = _as_index(index)
    q0 = np.asarray(q0, dtype=float)
    lambda0 = np.asarray(lambda0, dtype=float)
    if index.n != 2:
        raise NotImplementedError("brute-force search is implemented for n = 2")
    if not is_riemannian(index, q0):
        raise ValueError("brute-force search needs a Riemannian base point")
    if abs(hamiltonian(index, q0, lambda0) - 0.5) > 1e-9:
        raise ValueError("lambda0 must satisfy H = 1/2")
    t_con = conjugate_time_numeric(index, q0, lambda0, t_max)
    t_max = min(t_max, t_con)
    dt = dt or min(0.05, t_max / 200.0)
    scanner = _CellScanner(index, q0, lambda0, dt, exclusion, factor)
    boxes, caps = scanner.scan(np.array([0.0, math.pi, 0.0, 2 * math.pi]), *grid, t_max)
    heap = [(float(c), 0, n, tuple(b)) for n, (c, b) in enumerate(zip(caps, boxes)) if np.isfinite(c)]
    heapq.heapify(heap)
    counter = len(heap)
    window = 0.02 * t_max
    t_high, t_low, witness = math.inf, math.inf, None
    expansions = polished = rejected = 0
    while heap and heap[0][0] < t_high and expansions < max_expansions:
        if heap[0][1] == depth:
            cap, _, _, box = heapq.heappop(heap)
            polished += 1
            theta = np.array([0.5 * (box[0] + box[1]), 0.5 * (box[2] + box[3])])
            res = _polish_witness(index, q0, lambda0, t_max, cap, theta, tol)
            if res is None:
                rejected += 1
            else:
                t_low = min(t_low, cap)
                if res[0] < t_high:
                    t_high, witness = res
            continue
        top = heap[0][0]
        leaf = heap[0][1] + 1 == depth
        group = []
        while (heap and len(group) < batch and heap[0][0] <= top + window
               and heap[0][1] < depth and (heap[0][1] + 1 == depth) == leaf):
            group.append(heapq.heappop(heap))
        expansions += len(group)
        kids, kcaps = scanner.scan(np.array([g[3] for g in group]), refine, refine,
                                   min(t_max, t_high), crossing_only=leaf)
        per = refine * refine
        for g_idx, g in enumerate(group):
            for c, bx in zip(kcaps[g_idx * per:(g_idx + 1) * per], kids[g_idx * per:(g_idx + 1) * per]):
                if np.isfinite(c):
                    counter += 1
                    heapq.heappush(heap, (float(c), g[1] + 1, counter, tuple(bx)))
    meta = {"grid": list(grid), "dt": dt, "depth": depth, "expansions": expansions,
            "polished": polished, "rejected": rejected, "t_con": t_con}
    if witness is None:
        low = min(heap[0][0], t_con) if heap else t_max
        return CutEstimate(low, t_con, None, meta)
    meta["witness_theta"] = witness.tolist()
    # a converged leaf may have captured on something else and wandered to the
    # witness, so the lower end is the capture time of a leaf cell centred on it
    half = 0.5 * np.array([math.pi / grid[0], 2 * math.pi / grid[1]]) / refine**depth
    cell = np.array([witness[0] - half[0], witness[0] + half[0],
                     witness[1] - half[1], witness[1] + half[1]])
    _, own = scanner.scan(cell, 1, 1, min(t_max, t_high + 2 * dt), crossing_only=True)
    if np.isfinite(own[0]):
        t_low = float(own[0])
    t_low = min(t_low, t_high, t_con)
    return CutEstimate(t_low, min(t_high, t_con), fiber_chart(index, q0, witness), meta)


def _pair_endpoints(index, q0, p_a, p_b, t, rtol: float = 1e-12):
    """Positions at time ``t`` of two geodesics integrated as one stacked system."""
    d2 = 2 * index.dim
    y0 = np.concatenate([q0, p_a, q0, p_b])
    rhs = lambda _t, y: hamilton_rhs(index, y.reshape(2, d2).T).T.ravel()
    sol = solve_ivp(rhs, (0.0, t), y0, method="DOP853", rtol=rtol, atol=0.1 * rtol)
    if not sol.success:
        raise RuntimeError(sol.message)
    y = sol.y[:, -1].reshape(2, d2)
    return y[0, : index.dim], y[1, : index.dim]


# coarse screen before the full-precision polish: (integrator rtol, max_nfev, accept)
_SCREEN = (1e-8, 24, 1e-5)


def _polish_witness(index, q0, lambda0, t_max, t_guess, theta_guess, tol):
    def resid(z, rtol):
        t, a, b = z
        if t <= 0 or t > t_max:
            return np.full(index.dim, 1e3)
        xa, xb = _pair_endpoints(index, q0, fiber_chart(index, q0, [a, b]), lambda0, t, rtol)
        return xa - xb

    rtol, nfev, accept = _SCREEN
    z0 = np.array([t_guess, *theta_guess])
    try:
        # near misses (close approach without a meeting) are dropped cheaply here
        sol = optimize.least_squares(resid, z0, args=(rtol,), xtol=1e-10, ftol=1e-12,
                                     gtol=1e-12, max_nfev=nfev)
        if not np.all(np.isfinite(sol.fun)) or np.max(np.abs(sol.fun)) > accept:
            return None
        sol = optimize.least_squares(resid, sol.x, args=(1e-12,), xtol=1e-15, ftol=1e-15,
                                     gtol=1e-15, max_nfev=40)
    except (ValueError, RuntimeError):
        return None
    t, a, b = sol.x
    if t < 0.5 * t_guess or t > t_max:
        return None
    scale = 1.0 + np.linalg.norm(_pair_endpoints(index, q0, lambda0, lambda0, t)[0])
    if not np.all(np.isfinite(sol.fun)) or np.max(np.abs(sol.fun)) > tol * scale:
        return None
    p_w = fiber_chart(index, q0, [a, b])
    if np.linalg.norm(p_w - lambda0) < 1e-6 * (1 + np.linalg.norm(lambda0)):
        return None
    return float(t), np.array([a, b])
