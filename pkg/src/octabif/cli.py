"""Command-line front end.

Subcommands: singular, fibre, bifurcation, sweep, classify-invariant,
verify.  Exit codes: 0 success, 1 usage, 2 numerical failure, 3 domain
error.  CSV is UTF-8 with a header row; floats print in shortest
round-trip form; identical configuration and seed give byte-identical
output.  OCTABIF_THREADS caps scan parallelism.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import bifurcation, energies, fibres, geometry, singular
from .geometry import DomainError
from .numerics import DegenerateFamily, NoConvergence

__all__ = ["RunConfig", "main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_DOMAIN = 3

_KNOWN_MUTATIONS = ("gamma2-sign",)


@dataclass
class RunConfig:
    """Parsed invocation: one command plus its numeric and output settings."""

    command: str
    t: tuple[float, float, float, float] | None = None
    family: bifurcation.FamilyPath | None = None
    j: float | None = None
    j_min: float = 0.0
    j_max: float = 3.0
    h: float | str | None = None
    grid: int = 800
    steps: int = 600
    seed: int = 42
    samples: int = 1000
    mutate: str | None = None
    fmt: str = "json"
    output: str = "-"
    out_prefix: str = "fibre"
    out_dir: str = "sweep_out"
    svg: bool = False
    exact: bool = True
    detect: str = "rank0-type"
    tau_min: float = 0.0
    tau_max: float = 1.0
    snapshots: int = 3
    extra: dict = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parse_t(text: str) -> tuple[float, float, float, float]:
    parts = text.split(",")
    if len(parts) != 4:
        raise ValueError("--t needs 4 comma-separated reals")
    return tuple(float(p) for p in parts)


def _emit(text: str, dest: str) -> None:
    if dest == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(dest).write_text(text, encoding="utf-8")


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


# ---------------------------------------------------------------------------
# singular / classify-invariant
# ---------------------------------------------------------------------------

def _record_dict(rec: singular.SingularPointRecord) -> dict:
    return {
        "u": rec.u,
        "v": rec.v,
        "type": rec.wtype.value,
        "branch": rec.branch,
        "h": rec.h,
        "degeneracy_margin": rec.degeneracy_margin,
    }


def cmd_singular(cfg: RunConfig) -> int:
    if cfg.t[0] == 0.0:
        raise DegenerateFamily("t1 = 0: rank-one criterion degenerate")
    recs = singular.find_rank_one(cfg.t, cfg.j, exact=cfg.exact)
    if cfg.fmt == "csv":
        rows = [(r.u, r.v, r.wtype.value, r.branch, r.h, r.degeneracy_margin)
                for r in recs]
        _emit(_csv_text(("u", "v", "type", "branch", "h", "degeneracy_margin"),
                        rows), cfg.output)
    else:
        _emit(_json_text({
            "t": list(cfg.t),
            "j": cfg.j,
            "points": [_record_dict(r) for r in recs],
        }), cfg.output)
    return EXIT_OK


def cmd_classify_invariant(cfg: RunConfig) -> int:
    points = []
    for rec in singular.invariant_points(cfg.t):
        wt = singular.classify_rank_zero(cfg.t, rec.chart)
        points.append({"chart": rec.chart, "j": rec.j, "h": rec.h,
                       "type": wt.value})
    if cfg.fmt == "csv":
        rows = [(p["chart"], p["j"], p["h"], p["type"]) for p in points]
        _emit(_csv_text(("chart", "j", "h", "type"), rows), cfg.output)
    else:
        _emit(_json_text({"t": list(cfg.t), "points": points}), cfg.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# fibre
# ---------------------------------------------------------------------------

def _svg_glyph(x: float, y: float, kind: str) -> str:
    if kind == "hyperbolic":
        a = 0.06
        return (f'<path d="M {x - a:.4f} {y - a:.4f} L {x + a:.4f} {y + a:.4f} '
                f'M {x - a:.4f} {y + a:.4f} L {x + a:.4f} {y - a:.4f}" '
                'stroke="#c22" stroke-width="0.025" fill="none"/>')
    return f'<circle cx="{x:.4f}" cy="{y:.4f}" r="0.05" fill="#226"/>'


def _fibre_svg(fib: fibres.ReducedFibre, marks: list[tuple[float, float, str]]) -> str:
    x0, x1, y0, y1 = fib.bbox
    pad = 0.05 * max(x1 - x0, y1 - y0, 1e-9)
    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="{x0 - pad:.4f} {-(y1 + pad):.4f} '
        f'{x1 - x0 + 2 * pad:.4f} {y1 - y0 + 2 * pad:.4f}" '
        'width="640" height="640">',
        f'<rect x="{x0 - pad:.4f}" y="{-(y1 + pad):.4f}" '
        f'width="{x1 - x0 + 2 * pad:.4f}" height="{y1 - y0 + 2 * pad:.4f}" '
        'fill="#fff"/>',
        f'<line x1="{x0:.4f}" y1="0" x2="{x1:.4f}" y2="0" '
        'stroke="#ccc" stroke-width="0.01"/>',
        f'<line x1="0" y1="{-y1:.4f}" x2="0" y2="{-y0:.4f}" '
        'stroke="#ccc" stroke-width="0.01"/>',
    ]
    for pts, closed in zip(fib.polylines, fib.closed):
        coords = " ".join(f"{p[0]:.4f},{-p[1]:.4f}" for p in pts)
        tag = "polygon" if closed else "polyline"
        parts.append(f'<{tag} points="{coords}" fill="none" '
                     'stroke="#138" stroke-width="0.02"/>')
    for x, y, kind in marks:
        parts.append(_svg_glyph(x, -y, kind))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_fibre(cfg: RunConfig) -> int:
    t, j = cfg.t, cfg.j
    h = cfg.h
    recs = singular.find_rank_one(t, j, exact=cfg.exact) if t[0] != 0.0 else []
    if h == "auto":
        hyp = [r for r in recs
               if r.wtype is singular.WilliamsonType.HyperbolicRegular]
        if not hyp:
            print("warning: no hyperbolic point on this level; empty fibre",
                  file=sys.stderr)
            _emit(_csv_text(("component_id", "polyline_id", "u", "v"), []),
                  cfg.out_prefix + "_contour.csv")
            _emit(_json_text({"t": list(t), "j": j, "h": None,
                              "components": [], "vertices": 0, "edges": 0,
                              "faces": 0, "k": 0}), cfg.out_prefix + "_summary.json")
            return EXIT_OK
        h = min(hyp, key=lambda r: r.u).h
    h = float(h)

    fib = fibres.reduced_level_set(t, j, h, cfg.grid)
    rows = []
    for pid, (pts, cid) in enumerate(zip(fib.polylines, fib.component_of)):
        for p in pts:
            rows.append((cid, pid, float(p[0]), float(p[1])))
    _emit(_csv_text(("component_id", "polyline_id", "u", "v"), rows),
          cfg.out_prefix + "_contour.csv")

    graph = fibres.fibre_graph(t, j, h, cfg.grid)
    per_comp = [{"component": cid,
                 "saddles": graph.saddles_per_component.get(cid, 0),
                 "k": graph.saddles_per_component.get(cid, 0) + 1}
                for cid in sorted(set(fib.component_of)
                                  | set(graph.saddles_per_component))]
    summary = {
        "t": list(t), "j": j, "h": h,
        "vertices": len(graph.vertices),
        "edges": graph.edges,
        "faces": graph.faces,
        "n_components": graph.n_components,
        "k": graph.k,
        "components": per_comp,
        "open_unresolved": fib.open_unresolved,
    }
    _emit(_json_text(summary), cfg.out_prefix + "_summary.json")
    if cfg.output == "-":
        _emit(_json_text(summary), "-")

    if cfg.svg or cfg.fmt == "svg":
        tol = 1e-6 * (1.0 + abs(h))
        marks = []
        for r in recs:
            if abs(r.h - h) > max(tol, 2.0 * (fib.bbox[1] - fib.bbox[0]) / cfg.grid):
                continue
            kind = ("hyperbolic"
                    if r.wtype is singular.WilliamsonType.HyperbolicRegular
                    else "elliptic")
            marks.append((r.u, r.v, kind))
        _emit(_fibre_svg(fib, marks), cfg.out_prefix + ".svg")
    return EXIT_OK


# ---------------------------------------------------------------------------
# bifurcation / sweep
# ---------------------------------------------------------------------------

def _diagram_rows(points: list[bifurcation.DiagramPoint]):
    for p in points:
        yield (p.j, p.h, p.kind.value, p.wtype or "")


def cmd_bifurcation(cfg: RunConfig) -> int:
    points = bifurcation.scan_diagram(cfg.t, cfg.j_min, cfg.j_max, cfg.steps)
    text = _csv_text(("j", "h", "kind", "source"), list(_diagram_rows(points)))
    _emit(text, cfg.output)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    fam = cfg.family
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        stars = bifurcation.trace_transition(fam, cfg.detect, j=cfg.j)
    except bifurcation.NoTransition:
        stars = []
    if cfg.snapshots > 0:
        taus = [float(x) for x in
                np.linspace(fam.tau_min, fam.tau_max, cfg.snapshots)]
        for tau in taus:
            pts = bifurcation.scan_diagram(fam.at(tau), cfg.j_min, cfg.j_max,
                                           cfg.steps)
            text = _csv_text(("j", "h", "kind", "source"),
                             list(_diagram_rows(pts)))
            (out_dir / f"tau_{repr(tau)}.csv").write_text(text, encoding="utf-8")
    report = {
        "family": fam.text,
        "observable": cfg.detect,
        "tau_range": [fam.tau_min, fam.tau_max],
        "transitions": stars,
    }
    (out_dir / "transitions.json").write_text(_json_text(report),
                                              encoding="utf-8")
    _emit(_json_text(report), cfg.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _draw_chart_point(rng) -> tuple[int, complex, complex]:
    nu = int(rng.integers(1, 3))
    z = complex(rng.uniform(0.1, 1.2), rng.uniform(-1.2, 1.2))
    w = complex(rng.uniform(0.1, 1.2), rng.uniform(-1.2, 1.2))
    return nu, z, w


def _check_residual(rng, n: int) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(n):
        nu, z, w = _draw_chart_point(rng)
        try:
            amb = geometry.chart_embed(nu, z, w)
        except DomainError:
            continue
        worst = max(worst, max(geometry.manifold_residual(amb)))
    return worst < 1e-10, f"max residual {worst:.3e}"


def _check_bracket(rng, n: int) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(n):
        nu, z, w = _draw_chart_point(rng)
        tt = tuple(rng.uniform(-2.0, 2.0, size=4))
        try:
            worst = max(worst, abs(energies.poisson_bracket(tt, nu, z, w)))
        except DomainError:
            continue
    return worst < 1e-10, f"max |{{J,H}}| {worst:.3e}"


def _check_polar(rng, n: int) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(n):
        j = float(rng.uniform(0.05, 2.95))
        lo, hi = geometry.s_domain(j)
        s = float(rng.uniform(lo + 1e-6, hi - 1e-6)) if hi - lo > 2e-6 else lo
        th1 = float(rng.uniform(-math.pi, math.pi))
        th2 = float(rng.uniform(-math.pi, math.pi))
        z, w = geometry.polar_to_chart(j, th1, s, th2)
        jb, t1b, sb, t2b = geometry.chart_to_polar(z, w)
        worst = max(worst, abs(jb - j), abs(sb - s),
                    abs(math.remainder(t1b - th1, 2 * math.pi)),
                    abs(math.remainder(t2b - th2, 2 * math.pi)))
    return worst < 1e-10, f"max round-trip error {worst:.3e}"


def _check_period(rng, n: int) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(n):
        z = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        w = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        z2, w2 = energies.flow_J(2.0 * math.pi, z, w)
        worst = max(worst, abs(z2 - z), abs(w2 - w))
    return worst < 1e-12, f"max period defect {worst:.3e}"


def _check_jets(rng, n: int) -> tuple[bool, str]:
    worst = 0.0
    step = 1e-4
    for _ in range(min(n, 200)):
        tt = tuple(rng.uniform(-1.5, 1.5, size=4))
        j = float(rng.uniform(0.3, 2.7))
        lo, hi = geometry.s_domain(j)
        s = float(rng.uniform(lo + 0.1 * (hi - lo), lo + 0.7 * (hi - lo)))
        th = float(rng.uniform(-math.pi, math.pi))
        u, v = math.sqrt(s) * math.cos(th), math.sqrt(s) * math.sin(th)
        try:
            jet = energies.jet2_reduced(tt, j, u, v)
        except DomainError:
            continue

        def f(uu, vv):
            return energies.reduced_value(tt, j, uu, vv)

        gu = (f(u + step, v) - f(u - step, v)) / (2 * step)
        gv = (f(u, v + step) - f(u, v - step)) / (2 * step)
        huu = (f(u + step, v) - 2 * jet.f + f(u - step, v)) / step ** 2
        hvv = (f(u, v + step) - 2 * jet.f + f(u, v - step)) / step ** 2
        huv = (f(u + step, v + step) - f(u + step, v - step)
               - f(u - step, v + step) + f(u - step, v - step)) / (4 * step ** 2)
        # difference truncation scales with the local derivative size
        norm = 1.0 + float(np.max(np.abs(jet.g))) + float(np.max(np.abs(jet.h)))
        worst = max(worst, max(
            abs(gu - jet.g[0]), abs(gv - jet.g[1]),
            abs(huu - jet.h[0, 0]), abs(hvv - jet.h[1, 1]),
            abs(huv - jet.h[0, 1])) / norm)
    return worst < 1e-6, f"max scaled jet vs difference {worst:.3e}"


def _check_nonneg_det(rng, n: int) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(min(n, 200)):
        tt = tuple(rng.uniform(-3.0, 3.0, size=4))
        c1, c2 = rng.uniform(-2.0, 2.0, size=2)
        dets = singular.nonneg_det_check(tt, float(c1), float(c2))
        worst = min(worst, min(dets))
    return worst >= -1e-9, f"min pencil det {worst:.3e}"


def _check_audit(rng, n: int) -> tuple[bool, str]:
    biggest = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for _ in range(max(2, min(8, n // 125))):
            tt = tuple(rng.uniform(-2.0, 2.0, size=4))
            if abs(tt[0]) < 1e-3:
                tt = (0.5, *tt[1:])
            biggest = max(biggest, fibres.max_hyperbolic_audit(tt, exact=False))
    return biggest <= 12, f"max simultaneous hyperbolic {biggest}"


def _check_euler(rng, n: int) -> tuple[bool, str]:
    probes = [
        ((0.25, 1 / 3, 1 / 3, 1.0), 2.0, 1.4296536256),
        ((0.5, 0.5, 1 / 3, 1.0), 2.0, 1.3891784),
    ]
    for tt, j, h in probes:
        g = fibres.fibre_graph(tt, j, h, 400)
        if g.faces - g.edges + len(g.vertices) != g.n_components + 1:
            return False, f"Euler defect at j={j}"
        if g.edges != 2 * len(g.vertices):
            return False, f"degree defect at j={j}"
    return True, f"{len(probes)} bouquet graphs audited"


def _check_gamma_cap(rng, n: int) -> tuple[bool, str]:
    try:
        worst = energies.gamma_cap_selftest()
    except ArithmeticError as exc:
        return False, str(exc)
    return True, f"max even-part mismatch {worst:.3e}"


_CHECKS = (
    ("manifold-residual", _check_residual),
    ("poisson-bracket", _check_bracket),
    ("polar-round-trip", _check_polar),
    ("flow-period", _check_period),
    ("jet-vs-difference", _check_jets),
    ("nonneg-det", _check_nonneg_det),
    ("gamma-cap-selftest", _check_gamma_cap),
    ("max-hyperbolic-bound", _check_audit),
    ("euler-audit", _check_euler),
)


def cmd_verify(cfg: RunConfig) -> int:
    if cfg.mutate:
        energies.MUTATIONS.add(cfg.mutate)
    try:
        results = []
        ok_all = True
        rng = np.random.default_rng(cfg.seed)
        for name, fn in _CHECKS:
            try:
                ok, detail = fn(rng, cfg.samples)
                ok = bool(ok)
            except Exception as exc:
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            ok_all &= ok
            results.append({"name": name, "passed": ok, "detail": detail})
        _emit(_json_text({
            "seed": cfg.seed,
            "samples": cfg.samples,
            "mutate": cfg.mutate,
            "passed": ok_all,
            "checks": results,
        }), cfg.output)
        return EXIT_OK if ok_all else EXIT_NUMERIC
    finally:
        if cfg.mutate:
            energies.MUTATIONS.discard(cfg.mutate)


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def _build_parser() -> _Parser:
    p = _Parser(prog="octabif", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, t=True, j=False):
        if t:
            sp.add_argument("--t", required=True, help="4 comma-separated reals")
        if j:
            sp.add_argument("--j", type=float, required=True)
        sp.add_argument("--format", dest="fmt", default="json",
                        choices=("json", "csv", "svg"))
        sp.add_argument("--output", default="-")

    sp = sub.add_parser("singular", help="rank-one points on one J level")
    common(sp, j=True)
    sp.add_argument("--float-roots", action="store_true",
                    help="use the float root path instead of exact")

    sp = sub.add_parser("fibre", help="reduced level set and its graph")
    common(sp, j=True)
    sp.add_argument("--h", required=True,
                    help='level value, or "auto" for the lowest-u hyperbolic point')
    sp.add_argument("--grid", type=int, default=800)
    sp.add_argument("--out-prefix", default="fibre")
    sp.add_argument("--svg", action="store_true")

    sp = sub.add_parser("bifurcation", help="diagram scan over a J window")
    common(sp)
    sp.add_argument("--j-min", type=float, default=0.0)
    sp.add_argument("--j-max", type=float, default=3.0)
    sp.add_argument("--steps", type=int, default=600)

    sp = sub.add_parser("sweep", help="follow a one-parameter family")
    sp.add_argument("--family", required=True,
                    help='slot template, e.g. "tau/2,tau/2,tau/3,tau"')
    sp.add_argument("--tau-min", type=float, default=0.0)
    sp.add_argument("--tau-max", type=float, default=1.0)
    sp.add_argument("--detect", default="rank0-type",
                    choices=("rank0-type", "hyperbolic-presence"))
    sp.add_argument("--j", type=float, default=None,
                    help="probe level for hyperbolic-presence")
    sp.add_argument("--j-min", type=float, default=0.5)
    sp.add_argument("--j-max", type=float, default=2.5)
    sp.add_argument("--steps", type=int, default=150)
    sp.add_argument("--snapshots", type=int, default=3)
    sp.add_argument("--out-dir", default="sweep_out")
    sp.add_argument("--output", default="-")

    sp = sub.add_parser("classify-invariant",
                        help="Williamson type of the four torus-fixed points")
    common(sp)

    sp = sub.add_parser("verify", help="property suite")
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--mutate", default=None)
    sp.add_argument("--output", default="-")

    return p


def _config_from(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=ns.command)
    for name in ("j", "j_min", "j_max", "grid", "steps", "seed", "samples",
                 "mutate", "fmt", "output", "out_prefix", "out_dir", "svg",
                 "detect", "tau_min", "tau_max", "snapshots"):
        if hasattr(ns, name):
            setattr(cfg, name, getattr(ns, name))
    if getattr(ns, "t", None) is not None:
        cfg.t = _parse_t(ns.t)
    if getattr(ns, "family", None) is not None:
        cfg.family = bifurcation.FamilyPath.parse(ns.family, cfg.tau_min,
                                                  cfg.tau_max)
    if hasattr(ns, "h"):
        cfg.h = ns.h if ns.h == "auto" else float(ns.h)
    if getattr(ns, "float_roots", False):
        cfg.exact = False
    return cfg


_COMMANDS = {
    "singular": cmd_singular,
    "fibre": cmd_fibre,
    "bifurcation": cmd_bifurcation,
    "sweep": cmd_sweep,
    "classify-invariant": cmd_classify_invariant,
    "verify": cmd_verify,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config_from(ns)
        if cfg.command == "verify":
            if cfg.samples <= 0:
                print("error: --samples must be positive", file=sys.stderr)
                return EXIT_USAGE
            if cfg.mutate and cfg.mutate not in _KNOWN_MUTATIONS:
                print(f"error: unknown mutation {cfg.mutate!r}", file=sys.stderr)
                return EXIT_USAGE
        return _COMMANDS[cfg.command](cfg)
    except (DegenerateFamily, NoConvergence, ArithmeticError,
            fibres.GraphInconsistent, fibres.OpenComponent) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main(sys.argv[1:]))
