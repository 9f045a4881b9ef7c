"""Topology of the fibres over a point of the image of (J, H_t).

A regular or hyperbolic-regular fibre is a product of S^1 with the reduced
level set, so everything reduces to plane topology on the reduced surface:
extract the level curve with marching squares, stitch components with a
union-find over grid-edge keys (no floating-point snapping), glue curve ends
that reach a rim into that rim's pole, and audit the result by the Euler
count on the sphere.  A fibre carrying k - 1 saddles on one connected level
is a k-stacked torus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from .energies import reduced_coeffs
from .geometry import DomainError, s_domain
from .numerics import grid_segments, stitch_segments
from .singular import SingularPointRecord, WilliamsonType, find_rank_one

__all__ = [
    "GraphInconsistent",
    "OpenComponent",
    "ReducedFibre",
    "BouquetGraph",
    "reduced_level_set",
    "fibre_graph",
    "stacked_torus_count",
    "count_components",
    "max_hyperbolic_audit",
]


class GraphInconsistent(RuntimeError):
    """Vertex, face and component counts violate the Euler relation."""


class OpenComponent(RuntimeError):
    """A level-set component has ends that reach no rim (unresolved)."""


@dataclass
class ReducedFibre:
    """Level set of the reduced Hamiltonian on one J-level.

    Polylines are grouped into connected components; lines ending on a rim
    are closed up through that rim's pole.  ``poles`` reports, per rim, its
    potential value and the component it joined (None if the level misses
    it).
    """

    j: float
    h: float
    grid: int
    bbox: tuple[float, float, float, float]
    polylines: list[np.ndarray] = field(default_factory=list)
    closed: list[bool] = field(default_factory=list)
    component_of: list[int] = field(default_factory=list)
    n_components: int = 0
    open_unresolved: bool = False
    poles: list[dict] = field(default_factory=list)


@dataclass
class BouquetGraph:
    """The level curve as a graph: saddles are the vertices, each of degree
    four, so a closed saddle-carrying curve has twice as many edges as
    vertices.  ``S`` is reserved and stays empty."""

    vertices: list[SingularPointRecord]
    edges: int
    faces: int
    n_components: int
    saddles_per_component: dict[int, int]
    components_with_saddles: int
    S: tuple = ()

    @property
    def k(self) -> int:
        """Stacking number of the heaviest component."""
        if not self.saddles_per_component:
            return 1
        return max(self.saddles_per_component.values()) + 1


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        p = self.parent.setdefault(x, x)
        while p != self.parent[p]:
            self.parent[p] = self.parent[self.parent[p]]
            p = self.parent[p]
        self.parent[x] = p
        return p

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


def _level_data(t: Sequence[float], j: float, h: float, grid: int):
    """Sampled field F = H^red - h with NaN outside the reduced surface."""
    lo, hi = s_domain(j)
    G, P = reduced_coeffs(t, j)
    t1 = float(t[0])
    R = math.sqrt(hi) * 1.03 + 1e-9
    xs = np.linspace(-R, R, grid)
    ys = np.linspace(-R, R, grid)
    X, Y = np.meshgrid(xs, ys)
    S = X * X + Y * Y
    valid = (S >= lo - 1e-15) & (S <= hi)
    pv = np.polynomial.polynomial.polyval(S, P)
    F = (
        np.polynomial.polynomial.polyval(S, G)
        + t1 / 50.0 * X * np.sqrt(np.clip(pv, 0.0, None))
        - h
    )
    F = np.where(valid, F, np.nan)

    def sampler(x, y):
        s = x * x + y * y
        if s < lo - 1e-15 or s > hi:
            return math.nan
        p = float(np.polynomial.polynomial.polyval(s, P))
        return (
            float(np.polynomial.polynomial.polyval(s, G))
            + t1 / 50.0 * x * math.sqrt(max(p, 0.0))
            - h
        )

    return xs, ys, F, valid, (lo, hi, G, P, sampler)


def _rim_info(t: Sequence[float], j: float, h: float, aux):
    lo, hi, G, P, _ = aux
    rims = [("outer", hi)]
    if lo > 0.0:
        rims.append(("inner", lo))
    out = []
    for name, s_rim in rims:
        h_rim = float(np.polynomial.polynomial.polyval(s_rim, G))
        out.append({
            "rim": name,
            "s": s_rim,
            "h": h_rim,
            # the rim collapses to one point, where the level passes iff the
            # values agree exactly: this is a value test, not a grid test
            "on_level": abs(h_rim - h) <= 1e-9 * (1.0 + abs(h)),
            "component": None,
        })
    return out


def _border_cells(valid: np.ndarray) -> np.ndarray:
    """Cells whose corners are valid but that touch an invalid node."""
    inv = ~valid
    near = np.zeros_like(valid)
    near[:-1, :] |= inv[1:, :]
    near[1:, :] |= inv[:-1, :]
    near[:, :-1] |= inv[:, 1:]
    near[:, 1:] |= inv[:, :-1]
    near &= valid
    return near[:-1, :-1] | near[:-1, 1:] | near[1:, :-1] | near[1:, 1:]


def _band_strands(t, h: float, aux, cell: float, rims,
                  n_th: int = 4096, n_r: int = 48, width: float = 3.2):
    """Sub-cell refinement of the level strand nearest each off-level rim.

    The square-root term flattens toward a rim, so the curve can ride inside
    one node spacing for long arcs where marching squares sees only flicker.
    Re-trace it on a fine polar grid: per angle, the depth of the crossing
    closest to the rim (d1) and of the next one out (d2).  Angles where d1
    exists and moves by less than a cell chain into cyclic runs, each run
    one continuous curve piece whatever the grid made of it.
    """
    lo, hi, G, P, _ = aux
    t1 = float(t[0])
    theta = np.linspace(-math.pi, math.pi, n_th, endpoint=False)
    cos_t = np.cos(theta)
    r_in = math.sqrt(lo) if lo > 0.0 else 0.0
    out = {}
    for rm in rims:
        if rm["on_level"]:
            continue
        r_rim = math.sqrt(rm["s"])
        side = 1.0 if rm["rim"] == "inner" else -1.0
        d_max = min(width * cell, 0.45 * (math.sqrt(hi) - r_in))
        depth = np.linspace(1e-9, d_max, n_r)
        r = r_rim + side * depth
        s = r * r
        gam = np.polynomial.polynomial.polyval(s, G)
        rad = np.sqrt(np.clip(np.polynomial.polynomial.polyval(s, P), 0.0, None))
        Fb = gam[None, :] + t1 / 50.0 * (r[None, :] * cos_t[:, None]) * rad[None, :] - h
        neg = Fb < 0.0
        cross = neg[:, 1:] != neg[:, :-1]
        rows = np.arange(n_th)
        has1 = cross.any(axis=1)
        first = np.argmax(cross, axis=1)
        cross2 = cross.copy()
        cross2[rows, first] = False
        has2 = cross2.any(axis=1)
        second = np.argmax(cross2, axis=1)

        def interp(k, have):
            f0, f1 = Fb[rows, k], Fb[rows, k + 1]
            den = np.where(f1 != f0, f0 - f1, 1.0)
            w = np.clip(np.where(f1 != f0, f0 / den, 0.5), 0.0, 1.0)
            return np.where(have, depth[k] + (depth[k + 1] - depth[k]) * w, np.nan)

        d1 = interp(first, has1)
        d2 = interp(second, has2)
        brk = ~has1 | ~np.roll(has1, -1) | (
            np.abs(np.roll(d1, -1) - d1) > 1.0 * cell
        )
        run = np.full(n_th, -1, dtype=int)
        if not brk.any():
            run[:] = 0
            n_runs = 1
        else:
            start = (int(np.argmax(brk)) + 1) % n_th
            rid = -1
            fresh = True
            for i in range(n_th):
                k = (start + i) % n_th
                if not has1[k]:
                    fresh = True
                    continue
                if fresh:
                    rid += 1
                    fresh = False
                run[k] = rid
                if brk[k]:
                    fresh = True
            n_runs = rid + 1
        out[rm["rim"]] = {
            "r_rim": r_rim, "side": side, "d_max": d_max,
            "dth": 2.0 * math.pi / n_th, "n_th": n_th,
            "d1": d1, "d2": d2, "run": run, "n_runs": n_runs,
        }
    return out


def _strand_run_at(st, th_pt: float, depth_pt: float, tol: float) -> int:
    """Run id of the strand a band point sits on, or -1."""
    idx = int(round((th_pt + math.pi) / st["dth"])) % st["n_th"]
    rid = int(st["run"][idx])
    if rid < 0 or not math.isfinite(st["d1"][idx]):
        return -1
    if abs(depth_pt - st["d1"][idx]) > tol:
        return -1
    return rid


def _admitted_saddles(t, j, h, sampler, diag):
    """Hyperbolic-regular points whose critical value matches the level to
    grid resolution (the curve then passes within a couple of cells), plus
    the full rank-one record list."""
    eps_h = 1e-9 * (1.0 + abs(h))
    out = []
    recs = find_rank_one(t, j)
    for rec in recs:
        if rec.wtype is not WilliamsonType.HyperbolicRegular:
            continue
        f0 = sampler(rec.u, 0.0)
        local = abs(sampler(rec.u + diag, 0.0) - f0) + abs(sampler(rec.u, diag) - f0)
        if abs(rec.h - h) <= max(eps_h, 2.0 * local):
            out.append(rec)
    return out, recs


@dataclass
class _CoreResult:
    xs: np.ndarray
    ys: np.ndarray
    F: np.ndarray
    valid: np.ndarray
    aux: tuple
    segs: list
    uf: _UnionFind
    comp_roots: dict
    rims: list[dict]
    unresolved: list
    verts: list[SingularPointRecord]
    saddle_comp: dict[int, int]
    pole_ends: int
    saddle_reach: list[tuple[float, float, float]]
    strands: dict


def _components_core(t: Sequence[float], j: float, h: float, grid: int) -> _CoreResult:
    """Shared engine: segments, union-find classes, saddle and pole gluing."""
    xs, ys, F, valid, aux = _level_data(t, j, h, grid)
    lo, hi, G, P, sampler = aux
    segs = grid_segments(F, xs, ys, 0.0, center=sampler)
    uf = _UnionFind()
    key_count: dict = {}
    for ka, kb, _, _, _ in segs:
        uf.union(ka, kb)
        key_count[ka] = key_count.get(ka, 0) + 1
        key_count[kb] = key_count.get(kb, 0) + 1
    diag = math.hypot(xs[1] - xs[0], ys[1] - ys[0])

    # a saddle on the level joins all four of its branches, whatever the
    # perturbed pairing inside its cell resolved to.  At a level a hair off
    # the critical value the branches thread between grid nodes and the
    # extracted curve only reappears where they separate beyond the node
    # spacing, so the gluing reach adapts to the nearest extracted point,
    # capped by half the distance to the nearest other critical point
    verts, all_recs = _admitted_saddles(t, j, h, sampler, diag)
    all_u = [r.u for r in all_recs]
    saddle_ends: set = set()
    saddle_reach: list[tuple[float, float, float]] = []
    for n, rec in enumerate(verts):
        d_min = math.inf
        for ka, kb, pa, pb, _cell in segs:
            for p in (pa, pb):
                d_min = min(d_min, math.hypot(p[0] - rec.u, p[1] - rec.v))
        if not segs:
            continue
        d_crit = min(
            (abs(u - rec.u) for u in all_u if abs(u - rec.u) > 1e-9),
            default=math.inf,
        )
        reach = 1.25 * d_min + 2.0 * diag
        if reach > 0.5 * d_crit:
            if d_min > 0.5 * d_crit:
                raise GraphInconsistent(
                    f"saddle at u = {rec.u:.6f}: extracted curve is farther "
                    "than half the critical spacing, refine the grid"
                )
            reach = max(0.5 * d_crit, d_min + 2.0 * diag)
        saddle_reach.append((rec.u, rec.v, reach))
        for ka, kb, pa, pb, _cell in segs:
            for key, p in ((ka, pa), (kb, pb)):
                if math.hypot(p[0] - rec.u, p[1] - rec.v) <= reach:
                    uf.union(key, ("saddle", n))
                    if key_count.get(key) == 1:
                        saddle_ends.add(key)

    border = _border_cells(valid)
    rims = _rim_info(t, j, h, aux)
    half = 0.5 * (math.sqrt(hi) + (math.sqrt(lo) if lo > 0 else 0.0))
    cell = xs[1] - xs[0]

    def rim_of(r: float):
        name = "outer" if (lo <= 0.0 or r > half) else "inner"
        return next((rm for rm in rims if rm["rim"] == name), None)

    # ends within a few cells of a rim, and all extracted points there, by rim
    strands = _band_strands(t, h, aux, cell, rims)
    band_pts: dict[str, list] = {rm["rim"]: [] for rm in rims}
    band_ends: dict[str, list] = {rm["rim"]: [] for rm in rims}
    for ka, kb, pa, pb, (ix, iy) in segs:
        for key, p in ((ka, pa), (kb, pb)):
            r = math.hypot(p[0], p[1])
            rm = rim_of(r)
            if rm is None:
                continue
            depth = abs(r - math.sqrt(rm["s"]))
            if depth > 3.7 * cell:
                continue
            band_pts[rm["rim"]].append((math.atan2(p[1], p[0]), depth, key))
            if key_count.get(key) == 1 and depth <= 3.0 * cell:
                band_ends[rm["rim"]].append(key)

    pole_resolved: set = set()
    band_resolved: set = set()
    for rm in rims:
        name = rm["rim"]
        if rm["on_level"]:
            # the level passes through the pole: glue everything reaching
            # the rim into it
            pole = f"pole_{name}"
            for ka, kb, pa, pb, (ix, iy) in segs:
                if not border[iy, ix]:
                    continue
                r_cell = math.hypot(
                    max(abs(xs[ix]), abs(xs[ix + 1])),
                    max(abs(ys[iy]), abs(ys[iy + 1])),
                )
                if rim_of(r_cell) is not rm:
                    continue
                uf.union(ka, pole)
                uf.union(kb, pole)
                pole_resolved.add(ka)
                pole_resolved.add(kb)
            for key in band_ends[name]:
                uf.union(key, pole)
                pole_resolved.add(key)
        else:
            # the level misses the pole but may ride sub-cell along the rim:
            # glue every extracted point sitting on a refined strand run to
            # that run, which bridges the stretches the grid cannot see
            st = strands.get(name)
            if st is None:
                continue
            for th_pt, depth, key in band_pts[name]:
                rid = _strand_run_at(st, th_pt, depth, 1.5 * cell)
                if rid >= 0:
                    uf.union(key, ("strand", name, rid))
                    if key_count.get(key) == 1:
                        band_resolved.add(key)

    unresolved = [
        k for k, c in key_count.items()
        if c == 1 and k not in pole_resolved and k not in saddle_ends
        and k not in band_resolved
    ]
    pole_ends = sum(
        1 for k, c in key_count.items() if c == 1 and k in pole_resolved
    )

    comp_roots: dict = {}
    for ka, kb, _, _, _ in segs:
        comp_roots.setdefault(uf.find(ka), len(comp_roots))
    for rim in rims:
        pole = "pole_outer" if rim["rim"] == "outer" else "pole_inner"
        if pole in uf.parent:
            root = uf.find(pole)
            if root in comp_roots:
                rim["component"] = comp_roots[root]
    saddle_comp: dict[int, int] = {}
    for n in range(len(verts)):
        node = ("saddle", n)
        if node in uf.parent:
            root = uf.find(node)
            if root in comp_roots:
                saddle_comp[n] = comp_roots[root]
    return _CoreResult(xs, ys, F, valid, aux, segs, uf, comp_roots, rims,
                       unresolved, verts, saddle_comp, pole_ends, saddle_reach,
                       strands)


def count_components(t: Sequence[float], j: float, h: float, grid: int = 800) -> tuple[int, bool]:
    """Number of connected components of the reduced level set, and whether
    unresolved open curve ends remain after saddle and pole gluing."""
    core = _components_core(t, j, h, grid)
    return len(core.comp_roots), bool(core.unresolved)


def reduced_level_set(t: Sequence[float], j: float, h: float, grid: int = 800) -> ReducedFibre:
    """Extract the reduced level curve with component labels and pole data."""
    if grid < 16:
        raise ValueError("grid must be at least 16")
    core = _components_core(t, j, h, grid)
    by_comp: dict[int, list] = {}
    for seg in core.segs:
        cid = core.comp_roots[core.uf.find(seg[0])]
        by_comp.setdefault(cid, []).append(seg)
    fib = ReducedFibre(
        j=float(j), h=float(h), grid=grid,
        bbox=(float(core.xs[0]), float(core.xs[-1]),
              float(core.ys[0]), float(core.ys[-1])),
        n_components=len(core.comp_roots),
        open_unresolved=bool(core.unresolved),
        poles=core.rims,
    )
    for cid in sorted(by_comp):
        for pts, closed in stitch_segments(by_comp[cid]):
            fib.polylines.append(pts)
            fib.closed.append(closed)
            fib.component_of.append(cid)
    return fib


def _faces_on_sphere(xs, ys, F: np.ndarray, valid: np.ndarray, rims, aux,
                     h: float, saddle_reach=(), strands=None) -> int:
    """Connected components of the complement, counted on the closed reduced
    surface: plane regions merged through each pole carrying their sign.

    A disk around each on-level saddle is cut out first: at the critical
    level the vertex separates its quadrant regions, which a level drawn a
    rounding error off would bridge through the sub-cell waist."""
    X, Y = np.meshgrid(xs, ys)
    valid_cut = valid
    if saddle_reach:
        valid_cut = valid.copy()
        for su, sv, reach in saddle_reach:
            valid_cut &= (X - su) ** 2 + (Y - sv) ** 2 > reach ** 2
    pos = valid_cut & (F > 0.0)
    lab_p, n_p = ndimage.label(pos)
    lab_n, n_n = ndimage.label(valid_cut & ~pos)
    uf = _UnionFind()
    for i in range(1, n_p + 1):
        uf.find(("p", i))
    for i in range(1, n_n + 1):
        uf.find(("n", i))
    # rim adjacency from the uncut mask so the saddle disks play no role
    inv = ~valid
    near = np.zeros_like(valid)
    near[:-1, :] |= inv[1:, :]
    near[1:, :] |= inv[:-1, :]
    near[:, :-1] |= inv[:, 1:]
    near[:, 1:] |= inv[:, :-1]
    near &= valid_cut
    lo, hi, *_ = aux
    half_r = 0.5 * (math.sqrt(hi) + (math.sqrt(lo) if lo > 0 else 0.0))
    for iy, ix in np.argwhere(near):
        r = math.hypot(float(xs[ix]), float(ys[iy]))
        name = "outer" if (lo <= 0.0 or r > half_r) else "inner"
        rim = next((rm for rm in rims if rm["rim"] == name), None)
        # a pole the curve reaches is a point of the curve: regions meeting
        # only there stay separate faces
        if rim is None or rim["on_level"]:
            continue
        rim_sign = rim["h"] - h > 0.0
        if bool(pos[iy, ix]) == rim_sign:
            lab = ("p", int(lab_p[iy, ix])) if rim_sign else ("n", int(lab_n[iy, ix]))
            if lab[1] > 0:
                uf.union(("rim", name), lab)
    # a face wedged between a riding strand and its rim thins below the node
    # spacing and labels as scattered patches: rejoin every patch beyond one
    # run's strand.  The sign gate is exact: regions alternate sign across
    # the strand, so a band node carrying the non-rim sign lies past it
    for name, st in (strands or {}).items():
        rim = next((rm for rm in rims if rm["rim"] == name), None)
        if rim is None or rim["on_level"]:
            continue
        pocket_pos = not (rim["h"] - h > 0.0)
        dep = st["side"] * (np.hypot(X, Y) - st["r_rim"])
        band = valid_cut & (dep > 0.0) & (dep < st["d_max"]) & (pos == pocket_pos)
        for iy, ix in np.argwhere(band):
            idx = int(round((math.atan2(float(Y[iy, ix]), float(X[iy, ix]))
                             + math.pi) / st["dth"])) % st["n_th"]
            rid = int(st["run"][idx])
            if rid < 0:
                continue
            lab = ("p", int(lab_p[iy, ix])) if pocket_pos else ("n", int(lab_n[iy, ix]))
            if lab[1] > 0:
                uf.union(("pocket", name, rid), lab)
    roots = set()
    for i in range(1, n_p + 1):
        roots.add(uf.find(("p", i)))
    for i in range(1, n_n + 1):
        roots.add(uf.find(("n", i)))
    return len(roots)


def fibre_graph(t: Sequence[float], j: float, h: float, grid: int = 800) -> BouquetGraph:
    """Level curve as a saddle bouquet, audited by the Euler relation.

    Vertices are the hyperbolic-regular points whose critical value matches
    ``h`` within grid resolution; each contributes degree four, so the edge
    count is twice the vertex count.  faces - edges + vertices must equal
    components + 1 on the sphere, else GraphInconsistent.
    """
    core = _components_core(t, j, h, grid)
    if core.unresolved:
        raise OpenComponent(
            f"unresolved open level-curve ends at (j, h) = ({j}, {h})"
        )
    saddles_per: dict[int, int] = {}
    for n, rec in enumerate(core.verts):
        if n not in core.saddle_comp:
            raise GraphInconsistent(
                f"saddle at u = {rec.u:.6f} attached to no extracted "
                "level-curve segment"
            )
        cid = core.saddle_comp[n]
        saddles_per[cid] = saddles_per.get(cid, 0) + 1

    # saddles carry degree four and an on-curve pole degree equal to its
    # glued chain ends, so twice the edges is 4 V + pole ends
    if core.pole_ends % 2:
        raise GraphInconsistent("odd number of pole-glued chain ends")
    p_on = sum(1 for rim in core.rims if rim["component"] is not None)
    n_comp = len(core.comp_roots)
    v = len(core.verts)
    e_audit = 2 * v + core.pole_ends // 2
    f = _faces_on_sphere(core.xs, core.ys, core.F, core.valid, core.rims,
                         core.aux, h, core.saddle_reach, core.strands)
    if f - e_audit + (v + p_on) != n_comp + 1:
        raise GraphInconsistent(
            f"Euler audit failed: faces {f} - edges {e_audit} + "
            f"vertices {v + p_on} != components {n_comp} + 1"
        )
    return BouquetGraph(
        vertices=core.verts,
        edges=2 * v,
        faces=f,
        n_components=n_comp,
        saddles_per_component=saddles_per,
        components_with_saddles=len(saddles_per),
    )


def stacked_torus_count(t: Sequence[float], j: float, h: float, grid: int = 800) -> int:
    """k such that the heaviest component of the (j, h) fibre is a k-stacked
    torus: saddles on the component plus one.  OpenComponent if curve ends
    remain unresolved after pole gluing."""
    return fibre_graph(t, j, h, grid).k


def max_hyperbolic_audit(t: Sequence[float], j_values: Sequence[float] | None = None,
                         exact: bool = True) -> int:
    """Largest number of hyperbolic-regular points sharing one critical value
    on one J-level, over a sweep of levels.

    Near-coincident critical values are merged at 1e-4 relative tolerance,
    which absorbs symmetric configurations reported to few printed digits.
    The exact root path is the default: parameter lines tuned to a double
    root leave no sign change for a float scan to bracket.
    """
    if j_values is None:
        j_values = [0.125 * k for k in range(1, 24)]
    worst = 0
    for j in j_values:
        hs = sorted(
            rec.h for rec in find_rank_one(t, j, exact=exact)
            if rec.wtype is WilliamsonType.HyperbolicRegular
        )
        run = 0
        i = 0
        while i < len(hs):
            k = i
            while k + 1 < len(hs) and hs[k + 1] - hs[i] <= 1e-4 * (1.0 + abs(hs[i])):
                k += 1
            run = max(run, k - i + 1)
            i = k + 1
        worst = max(worst, run)
    return worst
