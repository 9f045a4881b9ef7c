"""Numerical kernels: second-order jets, polynomial construction over exact
rationals, guaranteed real-root isolation, 4x4 eigenvalue helpers, and a
marching-squares contour extractor.

Everything here is deterministic.  Polynomials that feed the singular-point
solvers are assembled over ``fractions.Fraction`` so that repeated roots
(which do occur at symmetric parameter values) survive exactly and can be
split off by square-free factorization instead of being smeared by rounding.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "NoConvergence",
    "DegenerateFamily",
    "Jet2",
    "CNum",
    "Poly",
    "rank_one_poly",
    "real_roots",
    "eigen4",
    "marching_squares",
    "grid_segments",
    "stitch_segments",
]


class NoConvergence(RuntimeError):
    """A root refinement failed to reach the requested tolerance."""


class DegenerateFamily(UserWarning):
    """The odd part of the reduced Hamiltonian vanishes identically (t1 = 0),
    so the rank-one criterion loses the branch information."""


# ---------------------------------------------------------------------------
# second-order jets
# ---------------------------------------------------------------------------

class Jet2:
    """Truncated second-order Taylor jet in ``n`` real variables.

    Carries value, gradient and Hessian through arithmetic, so evaluating an
    expression on seeded variables yields exact derivatives (no finite
    differences).  Supports +, -, *, /, integer powers and sqrt.
    """

    __slots__ = ("f", "g", "h")

    def __init__(self, f: float, g: np.ndarray, h: np.ndarray):
        self.f = f
        self.g = g
        self.h = h

    @classmethod
    def variable(cls, x: float, i: int, n: int) -> "Jet2":
        g = np.zeros(n)
        g[i] = 1.0
        return cls(float(x), g, np.zeros((n, n)))

    @classmethod
    def const(cls, c: float, n: int) -> "Jet2":
        return cls(float(c), np.zeros(n), np.zeros((n, n)))

    def _coerce(self, other) -> "Jet2":
        if isinstance(other, Jet2):
            return other
        return Jet2.const(float(other), len(self.g))

    def __add__(self, other):
        o = self._coerce(other)
        return Jet2(self.f + o.f, self.g + o.g, self.h + o.h)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.f, -self.g, -self.h)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        cross = np.outer(self.g, o.g)
        return Jet2(
            self.f * o.f,
            self.f * o.g + o.f * self.g,
            self.f * o.h + o.f * self.h + cross + cross.T,
        )

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet2":
        inv = 1.0 / self.f
        gg = np.outer(self.g, self.g)
        return Jet2(inv, -self.g * inv * inv, -self.h * inv * inv + 2.0 * gg * inv**3)

    def __truediv__(self, other):
        o = self._coerce(other)
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only nonnegative integer powers")
        out = Jet2.const(1.0, len(self.g))
        base = self
        e = k
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def sqrt(self) -> "Jet2":
        if self.f <= 0.0:
            raise ValueError("sqrt of a nonpositive jet value")
        r = math.sqrt(self.f)
        gg = np.outer(self.g, self.g)
        return Jet2(r, self.g / (2.0 * r), self.h / (2.0 * r) - gg / (4.0 * self.f * r))

    def __repr__(self):
        return f"Jet2({self.f!r}, grad={self.g!r})"


def jet_sqrt(x):
    """sqrt that dispatches on jets, floats and anything with a .sqrt()."""
    if isinstance(x, Jet2):
        return x.sqrt()
    if hasattr(x, "sqrt"):
        return x.sqrt()
    return math.sqrt(x)


class CNum:
    """Complex number over an arbitrary real scalar type (float or Jet2).

    Only the operations the energy evaluations need: ring arithmetic,
    conjugation and the squared modulus.
    """

    __slots__ = ("re", "im")

    def __init__(self, re, im):
        self.re = re
        self.im = im

    def conj(self) -> "CNum":
        return CNum(self.re, -self.im)

    def abs2(self):
        return self.re * self.re + self.im * self.im

    def __add__(self, other):
        if isinstance(other, CNum):
            return CNum(self.re + other.re, self.im + other.im)
        return CNum(self.re + other, self.im)

    __radd__ = __add__

    def __neg__(self):
        return CNum(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-other if isinstance(other, CNum) else CNum(-other, 0.0))

    def __mul__(self, other):
        if isinstance(other, CNum):
            return CNum(
                self.re * other.re - self.im * other.im,
                self.re * other.im + self.im * other.re,
            )
        return CNum(self.re * other, self.im * other)

    __rmul__ = __mul__

    def __repr__(self):
        return f"CNum({self.re!r}, {self.im!r})"


# ---------------------------------------------------------------------------
# dense univariate polynomials, ascending coefficients
# ---------------------------------------------------------------------------

def _ptrim(c: list) -> list:
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return c


def _padd(p: Sequence, q: Sequence) -> list:
    n = max(len(p), len(q))
    out = [0] * n
    for i, a in enumerate(p):
        out[i] = out[i] + a
    for i, b in enumerate(q):
        out[i] = out[i] + b
    return _ptrim(out)


def _pmul(p: Sequence, q: Sequence) -> list:
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return _ptrim(out)


def _pscale(p: Sequence, c) -> list:
    return _ptrim([a * c for a in p])


def _pderiv(p: Sequence) -> list:
    if len(p) <= 1:
        return [0 * p[0]] if p else [0]
    return _ptrim([i * a for i, a in enumerate(p)][1:])


def _peval(p: Sequence, x):
    acc = 0 * x
    for a in reversed(p):
        acc = acc * x + a
    return acc


def _pdivmod_exact(p: Sequence[Fraction], q: Sequence[Fraction]):
    """Quotient and remainder over the rationals."""
    rem = list(p)
    dq = len(q) - 1
    lead = q[-1]
    quo = [Fraction(0)] * max(len(p) - dq, 1)
    for i in range(len(rem) - 1, dq - 1, -1):
        c = rem[i] / lead
        if c != 0:
            quo[i - dq] = c
            for j, b in enumerate(q):
                rem[i - dq + j] -= c * b
    return _ptrim(quo), _ptrim(rem)


def _pgcd_exact(p: Sequence[Fraction], q: Sequence[Fraction]) -> list:
    a, b = list(p), list(q)
    while len(b) > 1 or b[0] != 0:
        _, r = _pdivmod_exact(a, b)
        a, b = b, r
    if len(a) == 1 and a[0] == 0:
        return [Fraction(1)]
    return _pscale(a, 1 / a[-1])


def yun_squarefree(p: Sequence[Fraction]) -> list[tuple[list, int]]:
    """Square-free factorization over Q (Yun's algorithm).

    Returns [(factor, multiplicity), ...] with each factor monic and
    square-free; the product of factor**multiplicity recovers p up to a
    constant.  Needed because symmetric parameter values produce genuinely
    repeated roots that a plain sign scan cannot see.
    """
    p = [Fraction(c) for c in p]
    if len(p) <= 1:
        return []
    dp = _pderiv(p)
    g = _pgcd_exact(p, dp)
    out = []
    w, _ = _pdivmod_exact(p, g)
    y, _ = _pdivmod_exact(dp, g)
    i = 1
    while len(w) > 1:
        z = _padd(y, _pscale(_pderiv(w), -1))
        f = _pgcd_exact(w, z)
        if len(f) > 1:
            out.append((f, i))
        w, _ = _pdivmod_exact(w, f)
        y, _ = _pdivmod_exact(z, f)
        i += 1
    return out


@dataclass
class Poly:
    """Univariate real polynomial, ascending coefficients, trailing zeros
    trimmed.  When built from exact input, the Fraction coefficients are kept
    alongside the float view so root isolation can work exactly."""

    coeffs: tuple[float, ...]
    exact: tuple[Fraction, ...] | None = None
    degenerate: bool = False

    def __post_init__(self):
        c = list(self.coeffs)
        while len(c) > 1 and c[-1] == 0.0:
            c.pop()
        self.coeffs = tuple(float(x) for x in c)
        if self.exact is not None:
            e = list(self.exact)
            while len(e) > 1 and e[-1] == 0:
                e.pop()
            self.exact = tuple(e)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            return np.polynomial.polynomial.polyval(x, np.asarray(self.coeffs))
        return _peval(self.coeffs, x)

    def deriv(self) -> "Poly":
        return Poly(
            tuple(_pderiv(list(self.coeffs))),
            None if self.exact is None else tuple(_pderiv(list(self.exact))),
        )


# ---------------------------------------------------------------------------
# the rank-one polynomial of the reduced family
# ---------------------------------------------------------------------------

def _lin(c0, c1) -> list:
    """c0 + c1*s as a coefficient list."""
    return [c0, c1]


def _reduced_blocks(t: Sequence, a):
    """Coefficient lists (in s) of P and of d(Gamma)/ds on the J = a/2 slice.

    Works over Fraction or float depending on the scalar type of ``a`` and
    ``t``; both routes share this single assembly.
    """
    one = a / a if a != 0 else (a + 1)  # 1 in the scalar type
    t1, t2, t3, t4 = t
    n3 = _lin(2 * one - a, one)        # |z3|^2
    n4 = _lin(6 * one - 2 * a, one)    # |z4|^2
    n6 = _lin(8 * one, -one)           # |z6|^2
    n7 = _lin(4 * one + a, -one)       # |z7|^2
    n8 = _lin(2 * one + 2 * a, -one)   # |z8|^2
    P = _pmul(_pmul(n6, n8), _pmul(n4, _pmul(n7, n3)))
    c5 = (6 * one - a) * (6 * one - a)
    gamma = _padd(
        _padd(
            _pscale(n3, (one - 2 * t1) / 2),
            _pscale(_pmul(n4, n4), t2 * c5 / 50),
        ),
        _padd(
            _pscale(_pmul(_pmul(n4, n4), _pmul(n7, n7)), t3 / 50),
            _pscale(_pmul(n7, n7), t4 * c5 / 100),
        ),
    )
    return P, _pderiv(gamma), gamma


def rank_one_poly(t: Sequence[float], r1: float, exact: bool = True) -> Poly:
    """Polynomial in s = r2**2 whose in-domain roots locate the rank-one
    critical circles on the J = r1**2/2 level.

    Both branch conditions are squared into a single polynomial; callers must
    re-test each root against the individual branches, since squaring admits
    sign-spurious roots.  With ``exact`` (default) coefficients are carried as
    Fractions of the binary values of ``t`` and ``r1``, so repeated roots come
    out with their true multiplicity.
    """
    if exact:
        a = Fraction(r1) * Fraction(r1)
        tt = [Fraction(x) for x in t]
    else:
        a = float(r1) * float(r1)
        tt = [float(x) for x in t]
    t1 = tt[0]
    P, dgamma, _ = _reduced_blocks(tt, a)
    sP = _pmul([0 * a, a / a if a != 0 else a + 1], P)  # s*P
    dsP = _pderiv(sP)
    even_part = _pscale(_pmul(_pmul([0 * a + 0, 1], P), _pmul(dgamma, dgamma)), -16)
    odd_part = _pscale(_pmul(dsP, dsP), t1 * t1 / 625)
    coeffs = _padd(odd_part, even_part)
    degenerate = t1 == 0
    if degenerate:
        warnings.warn(
            "t1 = 0: the odd part vanishes and the criterion degenerates to "
            "the even factor alone",
            DegenerateFamily,
            stacklevel=2,
        )
    if exact:
        return Poly(
            tuple(float(c) for c in coeffs),
            exact=tuple(Fraction(c) for c in coeffs),
            degenerate=degenerate,
        )
    return Poly(tuple(float(c) for c in coeffs), degenerate=degenerate)


# ---------------------------------------------------------------------------
# real-root isolation
# ---------------------------------------------------------------------------

def _bisect_refine(f: Callable[[float], float], lo: float, hi: float,
                   flo: float, max_iter: int = 200) -> float:
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            return mid
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0.0) == (flo > 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < 1e-13 * (1.0 + abs(mid)):
            return 0.5 * (lo + hi)
    raise NoConvergence(f"bisection stalled on [{lo}, {hi}]")


def _newton_polish(p: Sequence[float], dp: Sequence[float], x: float,
                   lo: float, hi: float) -> float:
    for _ in range(8):
        fx = _peval(p, x)
        dfx = _peval(dp, x)
        if dfx == 0.0:
            break
        step = fx / dfx
        xn = x - step
        if not (lo <= xn <= hi):
            break
        x = xn
        if abs(step) < 1e-15 * (1.0 + abs(x)):
            break
    return x


def _scan_brackets(f: Callable[[float], float], lo: float, hi: float,
                   n: int) -> list[tuple[float, float, float]]:
    xs = np.linspace(lo, hi, n + 1)
    vals = np.array([f(float(x)) for x in xs])
    out = []
    for i in range(n):
        va, vb = vals[i], vals[i + 1]
        if va == 0.0:
            out.append((float(xs[i]), float(xs[i]), 0.0))
        elif (va > 0.0) != (vb > 0.0):
            out.append((float(xs[i]), float(xs[i + 1]), float(va)))
    if vals[-1] == 0.0:
        out.append((float(xs[-1]), float(xs[-1]), 0.0))
    return out


def _roots_squarefree_float(coeffs: Sequence[float], lo: float, hi: float,
                            scan_points: int) -> list[float]:
    dco = _pderiv(list(coeffs))
    f = lambda x: _peval(coeffs, x)
    roots = []
    for a, b, fa in _scan_brackets(f, lo, hi, scan_points):
        if a == b:
            roots.append(a)
            continue
        x = _bisect_refine(f, a, b, fa)
        roots.append(_newton_polish(coeffs, dco, x, a, b))
    # collapse duplicates from an exact grid hit followed by a bracket
    roots.sort()
    out: list[float] = []
    for r in roots:
        if not out or abs(r - out[-1]) > 1e-12 * (1.0 + abs(r)):
            out.append(r)
    return out


def _cluster(roots: list[float], tol: float) -> list[tuple[float, int]]:
    if not roots:
        return []
    roots = sorted(roots)
    out = []
    cur = [roots[0]]
    for r in roots[1:]:
        if r - cur[-1] <= tol * (1.0 + abs(r)):
            cur.append(r)
        else:
            out.append((sum(cur) / len(cur), len(cur)))
            cur = [r]
    out.append((sum(cur) / len(cur), len(cur)))
    return out


def real_roots(p: Poly, lo: float, hi: float, *, with_multiplicity: bool = False,
               scan_points: int = 4096, verify: bool = False):
    """All real roots of ``p`` in [lo, hi], sorted ascending.

    With exact coefficients the polynomial is first split square-free over Q,
    so every root is found by a sign change of its own factor and carries an
    exact multiplicity.  Without exact data, a dense sign scan plus bisection
    is used and near-coincident roots are clustered (1e-7 relative) into a
    multiplicity hint.

    ``verify`` cross-checks the result against the companion-matrix spectrum
    and raises NoConvergence on disagreement.
    """
    if p.exact is not None:
        found: list[tuple[float, int]] = []
        for fac, mult in yun_squarefree(p.exact):
            ffac = [float(c) for c in fac]
            # exact endpoint hits first, then deflate the interval ends
            for r in _roots_squarefree_float(ffac, lo, hi, scan_points):
                found.append((r, mult))
        found.sort()
        pairs = found
    else:
        raw = _roots_squarefree_float(list(p.coeffs), lo, hi, scan_points)
        pairs = _cluster(raw, 1e-7)
    if verify and p.degree >= 1:
        # coarse containment check: every isolated root must sit near the
        # companion spectrum (double roots may split into a complex pair)
        comp = np.roots(list(p.coeffs)[::-1])
        for r, _m in pairs:
            gap = min(abs(complex(r) - z) for z in comp)
            if gap > 5e-4 * (1.0 + abs(r)):
                raise NoConvergence(
                    f"companion cross-check: isolated root {r} is {gap:.3g} "
                    "away from the companion spectrum"
                )
    if with_multiplicity:
        return pairs
    return [r for r, _ in pairs]


# ---------------------------------------------------------------------------
# 4x4 spectra
# ---------------------------------------------------------------------------

def eigen4(m: np.ndarray) -> list[complex]:
    """Eigenvalues of a real 4x4 matrix, sorted by (real, imag)."""
    m = np.asarray(m, dtype=float)
    if m.shape != (4, 4):
        raise ValueError("expected a 4x4 matrix")
    vals = np.linalg.eigvals(m)
    return sorted((complex(v) for v in vals), key=lambda z: (z.real, z.imag))


# ---------------------------------------------------------------------------
# marching squares
# ---------------------------------------------------------------------------

EdgeKey = tuple[str, int, int]


def grid_segments(vals: np.ndarray, xs: np.ndarray, ys: np.ndarray, level: float,
                  center: Callable[[float, float], float] | None = None):
    """Extract level-set segments cell by cell.

    ``vals[iy, ix]`` samples the field at (xs[ix], ys[iy]); NaN marks points
    outside the domain and suppresses the incident cells.  Returns a list of
    ``(key_a, key_b, point_a, point_b, (ix, iy))`` with stable edge keys so
    callers can stitch or union-find without floating-point comparisons.
    Ambiguous (saddle) cells are resolved by a center sample when ``center``
    is given, else by the mean of the corners.
    """
    s = vals - level
    ny, nx = s.shape
    segs = []

    def interp(x0, y0, v0, x1, y1, v1):
        tt = v0 / (v0 - v1)
        return (x0 + tt * (x1 - x0), y0 + tt * (y1 - y0))

    pos = s > 0.0
    ok = ~np.isnan(s)
    # preselect cells with all corners valid and at least one sign change
    cell_ok = ok[:-1, :-1] & ok[:-1, 1:] & ok[1:, :-1] & ok[1:, 1:]
    change = (
        (pos[:-1, :-1] != pos[:-1, 1:])
        | (pos[1:, :-1] != pos[1:, 1:])
        | (pos[:-1, :-1] != pos[1:, :-1])
        | (pos[:-1, 1:] != pos[1:, 1:])
    )
    for iy, ix in ((int(a), int(b)) for a, b in np.argwhere(cell_ok & change)):
        p00 = pos[iy, ix]
        p10 = pos[iy, ix + 1]
        p11 = pos[iy + 1, ix + 1]
        p01 = pos[iy + 1, ix]
        crossings = []
        if p00 != p10:
            crossings.append((
                ("h", ix, iy),
                interp(xs[ix], ys[iy], s[iy, ix], xs[ix + 1], ys[iy], s[iy, ix + 1]),
            ))
        if p10 != p11:
            crossings.append((
                ("v", ix + 1, iy),
                interp(xs[ix + 1], ys[iy], s[iy, ix + 1], xs[ix + 1], ys[iy + 1], s[iy + 1, ix + 1]),
            ))
        if p01 != p11:
            crossings.append((
                ("h", ix, iy + 1),
                interp(xs[ix], ys[iy + 1], s[iy + 1, ix], xs[ix + 1], ys[iy + 1], s[iy + 1, ix + 1]),
            ))
        if p00 != p01:
            crossings.append((
                ("v", ix, iy),
                interp(xs[ix], ys[iy], s[iy, ix], xs[ix], ys[iy + 1], s[iy + 1, ix]),
            ))
        if len(crossings) == 2:
            (ka, pa), (kb, pb) = crossings
            segs.append((ka, kb, pa, pb, (ix, iy)))
        elif len(crossings) == 4:
            # saddle cell: pair the four crossings by the center sign
            if center is not None:
                xc = 0.5 * (xs[ix] + xs[ix + 1])
                yc = 0.5 * (ys[iy] + ys[iy + 1])
                cv = center(float(xc), float(yc)) - level
            else:
                cv = 0.25 * (s[iy, ix] + s[iy, ix + 1] + s[iy + 1, ix] + s[iy + 1, ix + 1])
            bot, rig, top, lef = crossings
            if (cv > 0.0) == p00:
                pairs = ((bot, rig), (top, lef))
            else:
                pairs = ((bot, lef), (top, rig))
            for (ka, pa), (kb, pb) in pairs:
                segs.append((ka, kb, pa, pb, (ix, iy)))
    return segs


def stitch_segments(segs) -> list[tuple[np.ndarray, bool]]:
    """Join cell segments into polylines.

    Returns (points, closed) per polyline; open lines end where an edge has
    no partner (domain boundary or masked cells).
    """
    by_edge: dict[EdgeKey, list[int]] = {}
    for i, (ka, kb, _, _, _) in enumerate(segs):
        by_edge.setdefault(ka, []).append(i)
        by_edge.setdefault(kb, []).append(i)
    used = [False] * len(segs)
    out = []

    def walk(start_seg: int, start_key: EdgeKey):
        """Follow the chain leaving start_seg through start_key."""
        pts_keys = []
        i = start_seg
        key = start_key
        while True:
            used[i] = True
            ka, kb, pa, pb, _ = segs[i]
            if key == ka:
                pts_keys.append((ka, pa))
                nxt_key, nxt_pt = kb, pb
            else:
                pts_keys.append((kb, pb))
                nxt_key, nxt_pt = ka, pa
            cand = [j for j in by_edge.get(nxt_key, []) if not used[j]]
            if not cand:
                pts_keys.append((nxt_key, nxt_pt))
                return pts_keys, nxt_key
            i = cand[0]
            key = nxt_key

    for i in range(len(segs)):
        if used[i]:
            continue
        ka = segs[i][0]
        chain, end_key = walk(i, ka)
        closed = end_key == ka and len(chain) > 2
        if closed:
            pts = [p for _, p in chain]
        else:
            # may have started mid-chain: walk the other way too
            used[i] = False
            back, _ = walk(i, segs[i][1])
            pts = [p for _, p in reversed(back)] + [p for _, p in chain[2:]]
            closed = False
        arr = np.array(pts, dtype=float)
        if closed and len(arr) > 1 and not np.allclose(arr[0], arr[-1]):
            arr = np.vstack([arr, arr[:1]])
        out.append((arr, bool(closed)))
    return out


def marching_squares(sampler: Callable, bbox: tuple[float, float, float, float],
                     level: float, n: int = 256) -> list[tuple[np.ndarray, bool]]:
    """Contours of ``sampler(x, y) == level`` on an n x n grid over bbox.

    ``sampler`` may accept numpy arrays (vectorized) or scalars; NaN values
    mask cells out of the domain.  Returns a list of (polyline, closed).
    """
    if n < 16:
        raise ValueError("grid too coarse: n must be at least 16")
    x0, x1, y0, y1 = bbox
    xs = np.linspace(x0, x1, n)
    ys = np.linspace(y0, y1, n)
    try:
        X, Y = np.meshgrid(xs, ys)
        vals = np.asarray(sampler(X, Y), dtype=float)
        if vals.shape != X.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([[float(sampler(float(x), float(y))) for x in xs] for y in ys])

    def center(xc, yc):
        try:
            return float(sampler(xc, yc))
        except Exception:
            return math.nan

    segs = grid_segments(vals, xs, ys, level, center=center)
    return stitch_segments(segs)
