"""Singular points of the deformed system: location and Williamson type.

Rank-one points sit on the axis of the reduced surface and are located as
in-domain roots of the rank-one polynomial; squaring merges the two angle
branches, so every root is re-tested against each branch before a point is
emitted.  Rank-zero candidates are the four torus-fixed chart origins; their
types are read off the spectrum of omega^{-1} (c1 d2J + c2 d2H_t) over
several generic (c1, c2) draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from .energies import jet2_chart, jet2_reduced, eval_J, eval_Ht, reduced_value
from .geometry import (
    DomainError,
    INVARIANT_CHARTS,
    invariant_point,
    reduced_chart_embed,
    s_domain,
)
from .numerics import (
    Poly,
    _pderiv,
    _peval,
    _pmul,
    _pscale,
    _padd,
    _reduced_blocks,
    eigen4,
    rank_one_poly,
    real_roots,
)

__all__ = [
    "WilliamsonType",
    "SingularPointRecord",
    "NotSingular",
    "OMEGA",
    "OMEGA_INV",
    "invariant_points",
    "find_rank_one",
    "classify_rank_one",
    "classify_rank_zero",
    "degenerate_rank_one_locus",
    "nonneg_det_check",
    "f_poly",
    "hessian_pencil",
]


class WilliamsonType(Enum):
    EllipticElliptic = "elliptic-elliptic"
    FocusFocus = "focus-focus"
    EllipticHyperbolic = "elliptic-hyperbolic"
    HyperbolicHyperbolic = "hyperbolic-hyperbolic"
    EllipticRegular = "elliptic-regular"
    HyperbolicRegular = "hyperbolic-regular"
    Degenerate = "degenerate"


class NotSingular(ValueError):
    """The queried point is not critical to working tolerance."""


@dataclass
class SingularPointRecord:
    """One singular point (or candidate) of the system over a J-level.

    Reduced-axis points carry chart 1 coordinates (u, v); the torus-fixed
    origins carry their own chart id with u = v = 0.  ``branch`` records the
    second angle (0 or pi) for rank-one points.  ``degeneracy_margin`` is the
    scaled distance of the classifying data from the degenerate boundary.
    """

    rank: int
    j: float
    h: float
    chart: int | None = None
    u: float = 0.0
    v: float = 0.0
    ambient: tuple[complex, ...] | None = None
    wtype: WilliamsonType | None = None
    branch: str | None = None
    degeneracy_margin: float = math.nan


# symplectic form on a chart, coordinates (x, y, u, v)
OMEGA = np.array([
    [0.0, 1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
    [0.0, 0.0, -1.0, 0.0],
])
OMEGA_INV = -OMEGA


# ---------------------------------------------------------------------------
# rank zero
# ---------------------------------------------------------------------------

def invariant_points(t: Sequence[float]) -> list[SingularPointRecord]:
    """The four torus-fixed points, untyped (run classify_rank_zero)."""
    out = []
    for nu in INVARIANT_CHARTS:
        amb = invariant_point(nu)
        out.append(SingularPointRecord(
            rank=0,
            j=eval_J(amb),
            h=eval_Ht(t, amb),
            chart=nu,
            ambient=amb,
        ))
    return out


def hessian_pencil(t: Sequence[float], nu: int, c1: float, c2: float) -> np.ndarray:
    """omega^{-1} (c1 d2J + c2 d2H_t) at the chart-``nu`` origin."""
    hj = jet2_chart(t, nu, 0j, 0j, "J").h
    hh = jet2_chart(t, nu, 0j, 0j, "Ht").h
    return OMEGA_INV @ (c1 * hj + c2 * hh)


def _pattern(vals: list[complex], eps: float) -> WilliamsonType:
    """Williamson pattern of a symplectic-pencil spectrum."""
    if any(abs(v) < eps for v in vals):
        return WilliamsonType.Degenerate
    # repeated eigenvalues signal a degenerate pencil
    for i in range(4):
        for k in range(i + 1, 4):
            if abs(vals[i] - vals[k]) < eps:
                return WilliamsonType.Degenerate
    n_real = sum(1 for v in vals if abs(v.imag) < eps)
    n_imag = sum(1 for v in vals if abs(v.real) < eps)
    if n_imag == 4:
        return WilliamsonType.EllipticElliptic
    if n_real == 4:
        return WilliamsonType.HyperbolicHyperbolic
    if n_real == 2 and n_imag == 2:
        return WilliamsonType.EllipticHyperbolic
    if n_real == 0 and n_imag == 0:
        return WilliamsonType.FocusFocus
    return WilliamsonType.Degenerate


def classify_rank_zero(t: Sequence[float], which: int, *,
                       c_draws: Sequence[tuple[float, float]] | None = None,
                       draws: int = 5, seed: int = 20240) -> WilliamsonType:
    """Williamson type of the chart-``which`` origin under t.

    Uses the spectrum of the pencil over several generic (c1, c2); all draws
    must agree, and repeated or vanishing eigenvalues (relative gap below
    1e-7 of the spectral radius) demote the verdict to Degenerate.
    """
    if which not in INVARIANT_CHARTS:
        raise DomainError(f"chart {which} origin is not an invariant point")
    if c_draws is None:
        rng = np.random.default_rng(seed)
        c_draws = []
        while len(c_draws) < draws:
            ang = rng.uniform(0.0, 2.0 * math.pi)
            c1, c2 = math.cos(ang), math.sin(ang)
            if abs(c2) >= 0.1:
                c_draws.append((c1, c2))
    verdicts = set()
    for c1, c2 in c_draws:
        vals = eigen4(hessian_pencil(t, which, c1, c2))
        rho = max(abs(v) for v in vals)
        verdicts.add(_pattern(vals, 1e-7 * (rho + 1e-300)))
    if len(verdicts) == 1:
        return verdicts.pop()
    return WilliamsonType.Degenerate


# ---------------------------------------------------------------------------
# rank one
# ---------------------------------------------------------------------------

def _branch_residuals(t: Sequence[float], j: float, s: float):
    """Axis derivative of the reduced Hamiltonian on each branch at |w|^2=s.

    Returns ((g0, gpi), scale): g0 is d/du at u = +sqrt(s), gpi at -sqrt(s);
    scale normalizes the residual test.
    """
    a = 2.0 * float(j)
    P, dG, _ = _reduced_blocks([float(x) for x in t], a)
    Pv = _peval(P, s)
    dPv = _peval(_pderiv(P), s)
    if Pv <= 0.0:
        raise DomainError("branch residual needs an interior point (P > 0)")
    t1 = float(t[0])
    even = 2.0 * math.sqrt(s) * _peval(dG, s)
    odd = t1 * (Pv + s * dPv) / (50.0 * math.sqrt(Pv))
    scale = abs(even) + abs(odd)
    return (even + odd, -even + odd), scale


def find_rank_one(t: Sequence[float], j: float, *, exact: bool = True,
                  branch_tol: float = 1e-6) -> list[SingularPointRecord]:
    """All rank-one singular points over the J = j level, classified.

    Roots of the rank-one polynomial are filtered to the open reduced domain
    and re-tested per branch; a root can legitimately fire both branches (this
    happens at symmetric parameters), and roots passing neither are artifacts
    of squaring and are dropped.
    """
    a = 2.0 * float(j)
    r1 = math.sqrt(a)
    lo, hi = s_domain(j)
    poly = rank_one_poly(t, r1, exact=exact)
    eps_rim = 1e-9
    out: list[SingularPointRecord] = []
    for s, _mult in real_roots(poly, lo, hi, with_multiplicity=True):
        if s - lo <= eps_rim * (1.0 + abs(s)) or hi - s <= eps_rim * (1.0 + abs(s)):
            continue
        try:
            (g0, gpi), scale = _branch_residuals(t, j, s)
        except DomainError:
            # root-finder noise pushed a rim root past the rim
            continue
        for g, sign, name in ((g0, 1.0, "theta2=0"), (gpi, -1.0, "theta2=pi")):
            if abs(g) > branch_tol * (1.0 + scale):
                continue
            u = sign * math.sqrt(s)
            wtype, margin = _classify_reduced(t, j, u)
            out.append(SingularPointRecord(
                rank=1,
                j=float(j),
                h=reduced_value(t, j, u, 0.0),
                chart=1,
                u=u,
                v=0.0,
                ambient=reduced_chart_embed(j, complex(u, 0.0)),
                wtype=wtype,
                branch=name,
                degeneracy_margin=margin,
            ))
    out.sort(key=lambda r: r.u)
    return out


def _classify_reduced(t: Sequence[float], j: float, u: float) -> tuple[WilliamsonType, float]:
    jet = jet2_reduced(t, j, u, 0.0)
    hmax = float(np.max(np.abs(jet.h)))
    det = float(jet.h[0, 0] * jet.h[1, 1] - jet.h[0, 1] ** 2)
    margin = abs(det) / (1.0 + hmax) ** 2
    if margin < 1e-8:
        return WilliamsonType.Degenerate, margin
    if det < 0.0:
        return WilliamsonType.HyperbolicRegular, margin
    return WilliamsonType.EllipticRegular, margin


def classify_rank_one(t: Sequence[float], j: float, u: float) -> WilliamsonType:
    """Type of the reduced-axis point (u, 0) over J = j.

    Raises NotSingular when the reduced gradient is not (numerically) zero.
    """
    jet = jet2_reduced(t, j, u, 0.0)
    if float(np.max(np.abs(jet.g))) > 1e-6:
        raise NotSingular(
            f"|grad| = {float(np.max(np.abs(jet.g))):.3e} at (u, v) = ({u}, 0)"
        )
    return _classify_reduced(t, j, u)[0]


# ---------------------------------------------------------------------------
# degeneracy locus along the rank-one stratum
# ---------------------------------------------------------------------------

def _degeneracy_poly(t: Sequence[float], j: float) -> Poly:
    """Polynomial (in s) vanishing where the axis second derivative of either
    branch vanishes: 2500 P^3 (2 G' + 4 s G'')^2 - t1^2 s (2 N' P - N P')^2
    with N = P + s P'.  Exact over the binary values of the inputs."""
    a = Fraction(2) * Fraction(float(j))
    tt = [Fraction(float(x)) for x in t]
    P, dG, _ = _reduced_blocks(tt, a)
    ddG = _pderiv(dG)
    dP = _pderiv(P)
    s_poly = [Fraction(0), Fraction(1)]
    N = _padd(P, _pmul(s_poly, dP))
    term1 = _padd(_pscale(dG, 2), _pmul(_pscale(s_poly, 4), ddG))
    lhs = _pscale(_pmul(_pmul(P, _pmul(P, P)), _pmul(term1, term1)), 2500)
    inner = _padd(_pscale(_pmul(_pderiv(N), P), 2), _pscale(_pmul(N, dP), -1))
    rhs = _pscale(_pmul(s_poly, _pmul(inner, inner)), tt[0] * tt[0])
    coeffs = _padd(lhs, _pscale(rhs, -1))
    return Poly(tuple(float(c) for c in coeffs), exact=tuple(coeffs))


def degenerate_rank_one_locus(t: Sequence[float], j: float, *,
                              pair_tol: float = 5e-3) -> list[SingularPointRecord]:
    """Candidates for degenerate (parabolic) rank-one points over J = j.

    Intersects the in-domain roots of the rank-one polynomial with those of
    the axis-degeneracy polynomial by radius clustering: a candidate is
    emitted where a critical radius and a degeneracy radius agree within
    ``pair_tol``, on the same branch.  Emits at most one record per
    degeneracy root, located at the nearest critical point.
    """
    lo, hi = s_domain(j)
    crit = find_rank_one(t, j)
    dpoly = _degeneracy_poly(t, j)
    eps_rim = 1e-9
    out = []
    for sd, _m in real_roots(dpoly, lo, hi, with_multiplicity=True):
        if sd - lo <= eps_rim * (1.0 + sd) or hi - sd <= eps_rim * (1.0 + sd):
            continue
        rd = math.sqrt(sd)
        best = None
        for rec in crit:
            gap = abs(abs(rec.u) - rd)
            if gap < pair_tol and (best is None or gap < best[0]):
                # degeneracy must hold on the record's own branch
                d2 = _axis_second_derivative(t, j, math.copysign(rd, rec.u))
                if abs(d2[0]) < 1e-2 * (1.0 + d2[1]):
                    best = (gap, rec)
        if best is not None:
            rec = best[1]
            out.append(SingularPointRecord(
                rank=1,
                j=float(j),
                h=rec.h,
                chart=1,
                u=rec.u,
                v=0.0,
                ambient=rec.ambient,
                wtype=WilliamsonType.Degenerate,
                branch=rec.branch,
                degeneracy_margin=rec.degeneracy_margin,
            ))
    return out


def _axis_second_derivative(t: Sequence[float], j: float, u: float) -> tuple[float, float]:
    """(d2/du2 of the reduced Hamiltonian on the axis, scale) at signed u."""
    jet = jet2_reduced(t, j, u, 0.0)
    return float(jet.h[0, 0]), float(np.max(np.abs(jet.h)))


# ---------------------------------------------------------------------------
# determinant certificates at the fixed points
# ---------------------------------------------------------------------------

def f_poly(k: int, t: Sequence[float], c1: float, c2: float) -> float:
    """Closed-form determinant factor at the chart-``k`` origin:
    det(omega^{-1}(c1 d2J + c2 d2H_t)) = (f_k / 625)^2."""
    t1, t2, t3, t4 = (float(x) for x in t)
    if k == 2:
        return (
            625.0 * c1 * c1
            + 25.0 * c1 * c2 * (-25.0 + 50.0 * t1 - 256.0 * t2 - 384.0 * t3 - 192.0 * t4)
            + 48.0 * c2 * c2 * (
                3.0 * t1 * t1 + 320.0 * t2 * t2 + 75.0 * t3 + 720.0 * t3 * t3
                + 75.0 * t4 + 864.0 * t3 * t4 + 144.0 * t4 * t4
                + t2 * (50.0 + 960.0 * t3 + 576.0 * t4)
                - 50.0 * t1 * (2.0 * t2 + 3.0 * (t3 + t4))
            )
        )
    if k == 3:
        return (
            625.0 * c1 * c1
            - 25.0 * c1 * c2 * (-25.0 + 50.0 * t1 + 168.0 * t4)
            + 72.0 * c2 * c2 * (2.0 * t1 * t1 + 50.0 * t1 * t4 + t4 * (-25.0 + 96.0 * t4))
        )
    if k == 6:
        # linear coefficient -432 multiplies t2 (the quadratic block is
        # t2-only as well; chart 6 sees no t3, t4 at second order)
        return (
            625.0 * c1 * c1
            + 25.0 * c1 * c2 * (-25.0 + 50.0 * t1 - 432.0 * t2)
            + 48.0 * c2 * c2 * (3.0 * t1 * t1 - 200.0 * t1 * t2 + 20.0 * t2 * (5.0 + 48.0 * t2))
        )
    if k == 7:
        return (
            625.0 * c1 * c1
            - 125.0 * c1 * c2 * (-5.0 + 10.0 * t1 + 256.0 * t2)
            + 48.0 * c2 * c2 * (3.0 * t1 * t1 + 800.0 * t1 * t2 + 16.0 * t2 * (-25.0 + 512.0 * t2))
        )
    raise ValueError(f"no fixed point on chart {k}")


def nonneg_det_check(t: Sequence[float], c1: float, c2: float) -> tuple[float, float, float, float]:
    """Pencil determinants at the four fixed points, in chart order 2, 3, 6, 7.

    Each is a perfect square of a real polynomial in (t, c1, c2), hence
    nonnegative; the chart-3 value is cross-checked against its closed form
    (1e-8 relative) on every call.
    """
    dets = []
    for nu in INVARIANT_CHARTS:
        m = hessian_pencil(t, nu, c1, c2)
        dets.append(float(np.linalg.det(m)))
    ref3 = (f_poly(3, t, c1, c2) / 625.0) ** 2
    if abs(dets[1] - ref3) > 1e-8 * (1.0 + abs(ref3)):
        raise ArithmeticError(
            f"chart-3 determinant {dets[1]!r} disagrees with closed form {ref3!r}"
        )
    return tuple(dets)  # type: ignore[return-value]
