"""Sweeps of the momentum image.

Collects the singular-value curves over a J-window (the bifurcation
diagram), follows one-parameter families to the parameter values where the
diagram changes shape, exports flap and swallowtail snapshot data, and
counts fibre components at a momentum value.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .energies import jet2_reduced, reduced_coeffs
from .fibres import count_components
from .geometry import DomainError, reduced_chart_embed, s_domain
from .numerics import DegenerateFamily
from .singular import (
    SingularPointRecord,
    WilliamsonType,
    classify_rank_zero,
    degenerate_rank_one_locus,
    find_rank_one,
    invariant_points,
)

__all__ = [
    "DiagramKind",
    "DiagramPoint",
    "FamilyPath",
    "FlapSnapshot",
    "NoTransition",
    "scan_diagram",
    "trace_transition",
    "count_fibre_components",
    "export_flap_swallowtail_data",
]


class NoTransition(RuntimeError):
    """The observable never changes across the sampled parameter range."""


class DiagramKind(Enum):
    """What a diagram point is a value of."""

    EllipticRegularValue = "elliptic-regular"
    HyperbolicRegularValue = "hyperbolic-regular"
    RankZeroValue = "rank-zero"
    ParabolicCandidate = "parabolic-candidate"


@dataclass(frozen=True)
class DiagramPoint:
    """One singular value (j, h) of the momentum image.

    ``wtype`` carries the Williamson type string for rank-zero values and
    the classification of the sourcing record otherwise;
    ``source`` points back at the record that produced the value, when one
    exists (the j-wall corner values have none).
    """

    j: float
    h: float
    kind: DiagramKind
    wtype: str | None = None
    source: SingularPointRecord | None = None


def _parse_slot(text: str) -> tuple[float, float]:
    """(offset, slope) of one affine template slot such as 'tau/3' or '0.5'."""
    q = text.replace(" ", "").lower()
    sign = 1.0
    if q.startswith("-"):
        sign, q = -1.0, q[1:]
    if "tau" not in q:
        return sign * float(q), 0.0
    if q == "tau":
        return 0.0, sign
    if q.startswith("tau/"):
        return 0.0, sign / float(q[4:])
    if q.startswith("tau*"):
        return 0.0, sign * float(q[4:])
    if q.endswith("*tau"):
        return 0.0, sign * float(q[:-4])
    raise ValueError(f"cannot parse family slot {text!r}")


@dataclass(frozen=True)
class FamilyPath:
    """Affine one-parameter family tau -> t(tau).

    Each of the four slots is offset + slope * tau; the template string form
    accepts 'tau', 'tau/D', 'C*tau', 'tau*C', and plain constants per slot,
    comma separated.
    """

    offsets: tuple[float, float, float, float]
    slopes: tuple[float, float, float, float]
    tau_min: float = 0.0
    tau_max: float = 1.0
    text: str = ""

    @classmethod
    def parse(cls, text: str, tau_min: float = 0.0, tau_max: float = 1.0) -> "FamilyPath":
        parts = text.split(",")
        if len(parts) != 4:
            raise ValueError("a family template needs exactly 4 slots")
        offs, slps = zip(*(_parse_slot(p) for p in parts))
        return cls(offs, slps, float(tau_min), float(tau_max), text)

    @property
    def constant(self) -> bool:
        return all(s == 0.0 for s in self.slopes)

    def at(self, tau: float) -> tuple[float, float, float, float]:
        return tuple(o + s * tau for o, s in zip(self.offsets, self.slopes))


def _max_workers() -> int:
    env = os.environ.get("OCTABIF_THREADS", "")
    if env.strip():
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def scan_diagram(t: Sequence[float], j_min: float, j_max: float,
                 steps: int = 600) -> list[DiagramPoint]:
    """Singular values of (J, H_t) over a J-window, sorted by (j, h).

    Rank-one records on the j-grid become elliptic- and hyperbolic-regular
    values; the grid refines fourfold locally wherever the record count
    jumps between neighbours.  Every jump in the hyperbolic count is then
    bisected and the degenerate-locus candidates there are emitted, so
    hyperbolic segments terminate at parabolic candidates.  Torus-fixed
    values inside the window are appended with their rank-zero type, and a
    scan touching the j = 0 or j = 3 wall appends that wall's two corner
    values typed only as boundary data.
    """
    t = tuple(float(v) for v in t)
    if t[0] == 0.0:
        raise DegenerateFamily("t1 = 0: rank-one criterion degenerate")
    if not (0.0 <= j_min < j_max <= 3.0):
        raise ValueError("need 0 <= j_min < j_max <= 3")
    if steps < 1:
        raise ValueError("steps must be positive")

    cache: dict[float, list[SingularPointRecord]] = {}

    def recs_at(j: float) -> list[SingularPointRecord]:
        key = float(j)
        if key not in cache:
            if key <= 0.0 or key >= 3.0:
                cache[key] = []
            else:
                cache[key] = find_rank_one(t, key, exact=False)
        return cache[key]

    base = [float(j) for j in np.linspace(j_min, j_max, steps + 1)]
    with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        for j, recs in zip(base, pool.map(recs_at, base)):
            cache[j] = recs

    js: list[float] = []
    for a, b in zip(base, base[1:]):
        js.append(a)
        if len(recs_at(a)) != len(recs_at(b)):
            quarter = (b - a) / 4.0
            js.extend(a + quarter * k for k in (1, 2, 3))
    js.append(base[-1])

    out: list[DiagramPoint] = []
    for j in js:
        lo_s, hi_s = s_domain(j) if 0.0 < j < 3.0 else (0.0, 0.0)
        for rec in recs_at(j):
            if rec.wtype is WilliamsonType.HyperbolicRegular:
                kind = DiagramKind.HyperbolicRegularValue
            elif rec.wtype is WilliamsonType.EllipticRegular:
                kind = DiagramKind.EllipticRegularValue
            else:
                s = rec.u * rec.u + rec.v * rec.v
                if min(s - lo_s, hi_s - s) <= 1e-4 * (1.0 + abs(s)):
                    # boundary-layer descendant of a pole critical orbit: a
                    # perturbed extremum, elliptic; its Hessian determinant
                    # cancels to noise this close to the rim
                    kind = DiagramKind.EllipticRegularValue
                else:
                    # classification went marginal but the reduced Hessian
                    # determinant still has a clean sign; let it settle the kind
                    kind = DiagramKind.ParabolicCandidate
                    try:
                        det = float(np.linalg.det(jet2_reduced(t, j, rec.u, rec.v).h))
                    except DomainError:
                        det = 0.0
                    if det > 1e-6:
                        kind = DiagramKind.EllipticRegularValue
                    elif det < -1e-6:
                        kind = DiagramKind.HyperbolicRegularValue
            out.append(DiagramPoint(j, rec.h, kind, rec.wtype.value, rec))

    def n_hyp(j: float) -> int:
        return sum(1 for r in recs_at(j)
                   if r.wtype is WilliamsonType.HyperbolicRegular)

    for a, b in zip(js, js[1:]):
        if n_hyp(a) == n_hyp(b):
            continue
        lo_j, hi_j, lo_n = a, b, n_hyp(a)
        while hi_j - lo_j > 1e-7:
            mid = 0.5 * (lo_j + hi_j)
            if n_hyp(mid) == lo_n:
                lo_j = mid
            else:
                hi_j = mid
        j_star = 0.5 * (lo_j + hi_j)
        cands = degenerate_rank_one_locus(t, j_star)
        for cand in cands:
            out.append(DiagramPoint(j_star, cand.h,
                                    DiagramKind.ParabolicCandidate,
                                    cand.wtype.value, cand))
        j_edge = lo_j if n_hyp(lo_j) > n_hyp(hi_j) else hi_j
        for rec in recs_at(j_edge):
            if rec.wtype is WilliamsonType.HyperbolicRegular:
                out.append(DiagramPoint(j_edge, rec.h,
                                        DiagramKind.HyperbolicRegularValue,
                                        rec.wtype.value, rec))
        # rim-adjacent folds escape the degeneracy polynomial (its scale
        # collapses there); certify the candidate from the colliding pair
        pair = None
        edge_recs = recs_at(j_edge)
        for r1 in edge_recs:
            if r1.wtype is not WilliamsonType.HyperbolicRegular:
                continue
            for r2 in edge_recs:
                if r2.wtype is WilliamsonType.HyperbolicRegular:
                    continue
                gap = abs(r1.u - r2.u)
                if pair is None or gap < pair[0]:
                    pair = (gap, r1, r2)
        if pair is not None and pair[0] < 0.05 and min(
                pair[1].degeneracy_margin, pair[2].degeneracy_margin) < 1e-2:
            um = 0.5 * (pair[1].u + pair[2].u)
            if not any(abs(abs(c.u) - abs(um)) < 0.05 for c in cands):
                cand = SingularPointRecord(
                    rank=1,
                    j=j_star,
                    h=0.5 * (pair[1].h + pair[2].h),
                    chart=1,
                    u=um,
                    v=0.0,
                    ambient=reduced_chart_embed(j_edge, complex(um, 0.0)),
                    wtype=WilliamsonType.Degenerate,
                    branch=pair[1].branch,
                    degeneracy_margin=min(pair[1].degeneracy_margin,
                                          pair[2].degeneracy_margin),
                )
                out.append(DiagramPoint(j_star, cand.h,
                                        DiagramKind.ParabolicCandidate,
                                        cand.wtype.value, cand))

    for rec in invariant_points(t):
        if j_min - 1e-12 <= rec.j <= j_max + 1e-12:
            wt = classify_rank_zero(t, rec.chart)
            out.append(DiagramPoint(rec.j, rec.h, DiagramKind.RankZeroValue,
                                    wt.value, rec))

    for j_wall in (0.0, 3.0):
        if not (abs(j_min - j_wall) < 1e-12 or abs(j_max - j_wall) < 1e-12):
            continue
        lo_s, hi_s = s_domain(j_wall)
        G, _ = reduced_coeffs(t, j_wall)
        for s_pole in (lo_s, hi_s):
            h = float(np.polynomial.polynomial.polyval(s_pole, G))
            out.append(DiagramPoint(j_wall, h, DiagramKind.RankZeroValue,
                                    "unclassified-boundary", None))

    out.sort(key=lambda p: (p.j, p.h, p.kind.value))
    return out


def _observable(name: str, j: float | None):
    if name == "rank0-type":
        def obs(t: tuple) -> str:
            return classify_rank_zero(t, 2).value
        return obs
    if name == "hyperbolic-presence":
        j_probe = 1.0 if j is None else float(j)

        def obs(t: tuple) -> str:
            if t[0] == 0.0:
                return "absent"
            recs = find_rank_one(t, j_probe, exact=False)
            return ("present" if any(
                r.wtype is WilliamsonType.HyperbolicRegular for r in recs
            ) else "absent")
        return obs
    raise ValueError(f"unknown observable {name!r}")


def trace_transition(family: FamilyPath, observable: str = "rank0-type", *,
                     j: float | None = None, samples: int = 240,
                     tol: float = 1e-8) -> list[float]:
    """Parameter values where the observable changes, bisected to ``tol``.

    Observables: ``rank0-type`` watches the Williamson type of the chart-2
    origin; ``hyperbolic-presence`` watches whether any hyperbolic-regular
    value exists on the J = j level.  A constant family cannot transition
    and returns the empty list; a moving family whose samples never change
    raises NoTransition.
    """
    if family.constant:
        return []
    taus = np.linspace(family.tau_min, family.tau_max, samples + 1)
    obs = _observable(observable, j)
    vals = [obs(family.at(tau)) for tau in taus]
    stars: list[float] = []
    for (ta, va), (tb, vb) in zip(zip(taus, vals), zip(taus[1:], vals[1:])):
        if va == vb:
            continue
        lo, hi = float(ta), float(tb)
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if obs(family.at(mid)) == va:
                lo = mid
            else:
                hi = mid
        stars.append(0.5 * (lo + hi))
    if not stars:
        raise NoTransition(
            f"{observable} is constant over [{family.tau_min}, {family.tau_max}]"
        )
    return stars


def count_fibre_components(t: Sequence[float], j: float, h: float,
                           grid: int = 800) -> tuple[int, bool]:
    """Connected components of the fibre over (j, h), with an open flag.

    The reduced level set is extracted, stitched, and glued through poles
    and saddles; the flag reports curve ends that stayed unresolved (the
    count is then a lower bound at this grid resolution).
    """
    if not (0.0 < j < 3.0):
        raise DomainError("need 0 < j < 3")
    return count_components(t, j, h, grid)


@dataclass(frozen=True)
class FlapSnapshot:
    """Diagram of one family member with its self-overlap markers.

    ``overlap_markers`` lists (j, h) where two distinct elliptic-regular
    records share a value to the marker tolerance, the signature of a
    boundary curve crossing itself; ``has_hyperbolic`` reports whether the
    diagram carries a hyperbolic segment (a flap or swallowtail interior).
    """

    tau: float
    t: tuple[float, float, float, float]
    points: list[DiagramPoint] = field(default_factory=list)
    overlap_markers: list[tuple[float, float]] = field(default_factory=list)
    has_hyperbolic: bool = False


def export_flap_swallowtail_data(family: FamilyPath, taus: Sequence[float], *,
                                 j_min: float = 0.5, j_max: float = 2.5,
                                 steps: int = 150,
                                 marker_tol: float = 1e-3) -> list[FlapSnapshot]:
    """Diagram snapshots along a family, for plotting flap evolution.

    Per tau: the scanned diagram, a flag for hyperbolic content, and the
    elliptic self-overlap markers.  Markers compare elliptic-regular values
    from different critical radii at the same j; two branches of the
    boundary curve passing through one (j, h) witness an overlap.
    """
    snaps: list[FlapSnapshot] = []
    for tau in taus:
        t = family.at(float(tau))
        points = scan_diagram(t, j_min, j_max, steps)
        by_j: dict[float, list[DiagramPoint]] = {}
        has_hyp = False
        for p in points:
            if p.kind is DiagramKind.HyperbolicRegularValue:
                has_hyp = True
            if p.kind is DiagramKind.EllipticRegularValue:
                by_j.setdefault(p.j, []).append(p)
        markers: list[tuple[float, float]] = []
        for j, pts in sorted(by_j.items()):
            for i, a in enumerate(pts):
                for b in pts[i + 1:]:
                    if a.source is b.source:
                        continue
                    same_h = abs(a.h - b.h) <= marker_tol * (1.0 + abs(a.h))
                    distinct = (
                        a.source is None or b.source is None
                        or abs(a.source.u - b.source.u) > 1e-6
                    )
                    if same_h and distinct:
                        markers.append((j, 0.5 * (a.h + b.h)))
        snaps.append(FlapSnapshot(float(tau), t, points, markers, has_hyp))
    return snaps
