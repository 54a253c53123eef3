"""Command-line interface: ``grushin <subcommand> [options]``.

Every subcommand writes one table (CSV or JSON) to ``--out`` or stdout.  Exit
codes: 0 success, 1 invalid input, 2 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__, gentrig, jacobian, synthesis
from .geoflow import (GeodesicPath, MultiIndex, conserved_R, covector_to_spherical,
                      hamiltonian, is_riemannian)

SCHEMA_VERSION = 1
log = logging.getLogger("grushin")


class InputError(ValueError):
    pass


@dataclass
class RunConfig:
    alpha: list[int] | None = None
    base: list[float] | None = None
    covector: list[float] | None = None
    phi: list[float] | None = None
    t: float | None = None
    t_max: float | None = None
    samples: int = 200
    format: str = "csv"
    out: str | None = None
    seed: int = 0
    a: float | None = None
    b: float | None = None
    variant: str = "restricted"
    criteria: list[int] | None = None


@dataclass
class Table:
    columns: list[str]
    rows: list[list]
    meta: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return float(format(v, ".17g"))
    return v


def _csv_cell(v):
    v = _num(v)
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def render(table: Table, fmt: str) -> str:
    if fmt == "json":
        doc = {"schema_version": SCHEMA_VERSION, "meta": _jsonify(table.meta),
               "columns": table.columns, "rows": [[_num(v) for v in r] for r in table.rows]}
        doc.update(_jsonify(table.extra))
        return json.dumps(doc, indent=1, sort_keys=False) + "\n"
    meta = {"schema_version": SCHEMA_VERSION, **table.meta}
    buf = io.StringIO()
    for key, value in meta.items():
        buf.write(f"# {key}: {json.dumps(_jsonify(value))}\n")
    for key, value in table.extra.items():
        buf.write(f"# {key}: {json.dumps(_jsonify(value))}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonify(v) for v in obj]
    return _num(obj)


# ---------------------------------------------------------------------------
# input handling


def _index(cfg: RunConfig) -> MultiIndex:
    alpha = cfg.alpha if cfg.alpha is not None else [1, 1]
    try:
        return MultiIndex(tuple(int(a) for a in alpha))
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad --alpha: {exc}") from exc


def _base(cfg: RunConfig, index: MultiIndex) -> np.ndarray:
    if cfg.base is None:
        return np.ones(index.dim)
    base = np.asarray(cfg.base, dtype=float)
    if base.shape != (index.dim,):
        raise InputError(f"--base needs {index.dim} coordinates, got {base.size}")
    return base


def _path(cfg: RunConfig, index: MultiIndex, base: np.ndarray) -> GeodesicPath:
    if cfg.phi is not None and cfg.covector is not None:
        raise InputError("give either --covector or --phi, not both")
    if cfg.phi is not None:
        phi = np.asarray(cfg.phi, dtype=float)
        if phi.shape != (index.n,):
            raise InputError(f"--phi needs {index.n} angles")
        if not is_riemannian(index, base):
            raise InputError("spherical angles need a Riemannian base point")
        return GeodesicPath.from_spherical(index, base, phi)
    if cfg.covector is None:
        raise InputError("a covector is required (--covector or --phi)")
    p0 = np.asarray(cfg.covector, dtype=float)
    if p0.shape != (index.dim,):
        raise InputError(f"--covector needs {index.dim} components")
    h = hamiltonian(index, base, p0)
    if not h > 0:
        raise InputError("covector has zero energy at this base point")
    scale = 1.0 / math.sqrt(2.0 * h)
    if abs(scale - 1.0) > 1e-9:
        log.warning("covector rescaled by %.17g to H = 1/2", scale)
    p0 = p0 * scale
    if is_riemannian(index, base):
        return GeodesicPath.from_spherical(index, base, covector_to_spherical(index, base, p0))
    return GeodesicPath.from_covector(index, base, p0)


def _meta(cfg: RunConfig, **extra) -> dict:
    keep = {k: v for k, v in asdict(cfg).items() if k not in ("out", "format") and v is not None}
    return {"version": __version__, "config": keep, **extra}


# ---------------------------------------------------------------------------
# subcommands


def cmd_trig(cfg: RunConfig) -> Table:
    """Samples of the generalized sine and cosine over two periods, with eta when b = 2."""
    if cfg.a is not None or cfg.b is not None:
        params = gentrig.TrigParams(cfg.a or 2.0, cfg.b or 2.0)
        beta = params.a / 2 if params.b == 2 else None
    else:
        alpha = cfg.alpha if cfg.alpha is not None else [8]
        if len(alpha) != 1 or alpha[0] < 1:
            raise InputError("trig takes a single positive --alpha or --a/--b")
        beta = int(alpha[0])
        params = gentrig.grushin_params(beta)
    half = gentrig.half_period(params)
    x = np.linspace(-2 * half, 2 * half, max(cfg.samples, 2))
    s, c = gentrig.gsincos(params, x)
    resid = np.abs(np.abs(s) ** params.a + np.abs(c) ** params.b - 1.0)
    cols = ["x", "sin", "cos", "pythagorean_residual", "period"]
    rows = [[xi, si, ci, ri, 2 * half] for xi, si, ci, ri in zip(x, s, c, resid)]
    if beta is not None:
        e = gentrig.eta(beta, x)
        cols.append("eta")
        for row, ei in zip(rows, e):
            row.append(ei)
    return Table(cols, rows, _meta(cfg, a=params.a, b=params.b, half_period=half, period=2 * half))


def _state_columns(n: int) -> list[str]:
    d = n + 1
    return ([f"x{j}" for j in range(d)] + [f"p{j}" for j in range(d)] + ["H"]
            + [f"R{j}" for j in range(d + 1)])


def cmd_geodesic(cfg: RunConfig) -> Table:
    """Time samples of ``(x, p, H, R)`` with a marker on the candidate cut time."""
    index = _index(cfg)
    base = _base(cfg, index)
    path = _path(cfg, index, base)
    rep = synthesis.cut_report(path)
    t_max = cfg.t_max if cfg.t_max is not None else (rep.tau if math.isfinite(rep.tau) else 10.0)
    if t_max < 0:
        raise InputError("--t-max must be nonnegative")
    ts = np.linspace(0.0, t_max, max(cfg.samples, 2))
    if math.isfinite(rep.tau) and rep.tau <= t_max:
        ts = np.unique(np.append(ts, rep.tau))
    x, p = path.state(ts)
    H = hamiltonian(index, x, p)
    rows = []
    for k, t in enumerate(ts):
        R = conserved_R(index, x[k], p[k])
        rows.append([t, *x[k], *p[k], H[k], *R, int(t == rep.tau)])
    meta = _meta(cfg, tau=rep.tau, argmin=list(rep.argmin), tau_label=rep.label,
                 p0=path.p0.tolist())
    return Table(["t", *_state_columns(index.n), "tau_marker"], rows, meta)


def cmd_sphere(cfg: RunConfig) -> Table:
    """Wavefront ``exp(t p0(phi))`` over a grid of angles at a fixed time."""
    index = _index(cfg)
    base = _base(cfg, index)
    if cfg.t is None or cfg.t < 0:
        raise InputError("sphere needs --t >= 0")
    if not is_riemannian(index, base):
        raise InputError("sphere needs a Riemannian base point")
    ranges = index.angle_ranges()
    m = max(cfg.samples, 2)
    if index.n <= 2:
        axes = [np.linspace(lo, hi, m, endpoint=(k < index.n - 1))
                for k, (lo, hi) in enumerate(ranges)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, index.n)
    else:
        rng = np.random.default_rng(cfg.seed)
        grid = np.column_stack([rng.uniform(lo, hi, m) for lo, hi in ranges])
    rows = []
    for phi in grid:
        path = GeodesicPath.from_spherical(index, base, phi)
        tau = synthesis.cut_report(path).tau
        rows.append([*phi, *path(cfg.t), tau, int(cfg.t <= tau)])
    cols = [f"phi{j}" for j in range(index.n)] + [f"x{j}" for j in range(index.dim)]
    return Table(cols + ["tau", "minimizing"], rows, _meta(cfg))


def cmd_conjugate(cfg: RunConfig) -> Table:
    """Per-index cut-time candidates and the first conjugate time of one geodesic."""
    index = _index(cfg)
    base = _base(cfg, index)
    path = _path(cfg, index, base)
    rep = synthesis.cut_report(path)
    if path.phi is not None:
        t_con, info = jacobian.first_conjugate_time(path)
    else:
        t_con, info = (rep.tau if rep.conjugate_at_tau else math.nan), {"reason": "singular base"}
    rows = [[j, rep.tau_per_index[j]] for j in sorted(rep.tau_per_index)]
    meta = _meta(cfg, tau=rep.tau, tau_label=rep.label, argmin=list(rep.argmin),
                 conjugate_at_tau=rep.conjugate_at_tau, t_con=t_con,
                 t_con_info=info, p0=path.p0.tolist())
    return Table(["j", "tau_j"], rows, meta)


def cmd_cutlocus(cfg: RunConfig) -> Table:
    """Boundary polylines and surface descriptors of the 3D cut locus."""
    index = _index(cfg)
    if index.n != 2:
        raise InputError("cut-locus is defined for alpha = (a, b)")
    base = _base(cfg, index)
    locus = synthesis.cut_locus_3d(index.alpha, base, cfg.samples)
    polylines = list(locus.polylines)
    if locus.case == "riemannian" and cfg.variant == "full":
        polylines.append(synthesis.trace_E(index.alpha, base, cfg.samples, variant="full"))
    rows = []
    summary = []
    for k, poly in enumerate(polylines):
        drop = 0 if poly.label in ("E_curve", "G_curve") else None
        simple = poly.is_simple(drop) if drop is not None else None
        summary.append({"id": k, "label": poly.label, "closed": poly.closed,
                        "simple": simple, "points": len(poly.points), "meta": poly.meta})
        for par, pt in zip(poly.params, poly.points):
            rows.append([k, poly.label, par, *pt])
    extra = {"surfaces": locus.surfaces, "polylines": summary}
    return Table(["polyline", "label", "param", "x", "y", "z"], rows,
                 _meta(cfg, case=locus.case, **locus.meta), extra)


def cmd_classify(cfg: RunConfig) -> Table:
    index = _index(cfg)
    if index.n != 2:
        raise InputError("classify is defined for alpha = (a, b)")
    base = _base(cfg, index)
    case = synthesis.singular_case(base)
    if case is not None:
        return Table(["classification", "threshold", "r", "phi2_star"],
                     [[f"singular:{case}", math.nan, math.nan, math.nan]], _meta(cfg))
    kind = synthesis.classify_point(index.alpha, base)
    rad = synthesis.fiber_radius(index.alpha, base)
    r, star = rad if rad is not None else (math.nan, math.nan)
    return Table(["classification", "threshold", "r", "phi2_star"],
                 [[kind.classification, kind.threshold, r, star]], _meta(cfg))


def cmd_verify(cfg: RunConfig) -> tuple[Table, bool]:
    from . import verify

    numbers = cfg.criteria or sorted(verify.CRITERIA)
    bad = [k for k in numbers if k not in verify.CRITERIA]
    if bad:
        raise InputError(f"unknown criteria {bad}")
    results = verify.run_all(numbers, seed=cfg.seed)
    rows = [[r.number, r.name, int(r.passed), r.runtime, r.budget,
             json.dumps(r.as_dict()["metrics"], sort_keys=True)] for r in results]
    for r in results:
        log.info(r.line())
    table = Table(["criterion", "name", "passed", "runtime", "budget", "metrics"], rows,
                  _meta(cfg))
    return table, all(r.passed for r in results)


COMMANDS = {
    "trig": cmd_trig,
    "geodesic": cmd_geodesic,
    "sphere": cmd_sphere,
    "conjugate": cmd_conjugate,
    "cut-locus": cmd_cutlocus,
    "classify": cmd_classify,
}


# ---------------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grushin", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    common.add_argument("--alpha", type=_ints, help="multi-index, e.g. '1,2'")
    common.add_argument("--base", type=_floats, help="base point coordinates")
    group = common.add_mutually_exclusive_group()
    group.add_argument("--covector", type=_floats, help="Cartesian covector (normalized to H = 1/2)")
    group.add_argument("--phi", type=_floats, help="spherical angles")
    common.add_argument("--t", type=float, help="evaluation time")
    common.add_argument("--t-max", dest="t_max", type=float, help="final time")
    common.add_argument("--samples", type=int, help="sample count")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("trig", parents=[common], help="generalized trig tables")
    p.add_argument("--a", type=float, help="integrand exponent (overrides --alpha)")
    p.add_argument("--b", type=float, help="integrand root")
    sub.add_parser("geodesic", parents=[common], help="sample one geodesic")
    sub.add_parser("sphere", parents=[common], help="wavefront at fixed time")
    sub.add_parser("conjugate", parents=[common], help="cut and conjugate times")
    p = sub.add_parser("cut-locus", parents=[common], help="3D cut locus")
    p.add_argument("--variant", choices=("restricted", "full"),
                   help="also emit the full-range E curve with 'full'")
    sub.add_parser("classify", parents=[common], help="point type in G^3")
    p = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    p.add_argument("--criteria", type=_ints, help="subset, e.g. '1,2,9'")
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config: {exc}") from exc
        names = {f.name for f in fields(RunConfig)}
        unknown = set(data) - names
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        cfg = RunConfig(**{**asdict(cfg), **data})
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            setattr(cfg, f.name, value)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    ok = True
    try:
        cfg = _config(args)
        if args.command == "verify":
            table, ok = cmd_verify(cfg)
        else:
            table = COMMANDS[args.command](cfg)
    except (InputError, gentrig.DomainError, ValueError, NotImplementedError) as exc:
        print(f"grushin: error: {exc}", file=sys.stderr)
        return 1
    text = render(table, cfg.format)
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
