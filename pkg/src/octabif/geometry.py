"""The ambient manifold and its coordinate charts.

The phase space is the zero set of six affine conditions on the squared
moduli of (z1, ..., z8), modulo a six-torus action.  Local charts keep two
complex slots free and express the remaining six moduli as affine functions
(radicands) of rho = |z|^2 and sigma = |w|^2; the radicand tables are solved
once, exactly, from the defining equations at import time.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction
from typing import Sequence

__all__ = [
    "DomainError",
    "EPS_DOM",
    "WEIGHTS",
    "LEVELS",
    "CHART_SLOTS",
    "RADICAND_TABLES",
    "OCTAGON_VERTICES",
    "manifold_residual",
    "chart_embed",
    "chart_contains",
    "polar_to_chart",
    "chart_to_polar",
    "reduced_chart_embed",
    "s_domain",
    "invariant_point",
    "INVARIANT_CHARTS",
]


class DomainError(ValueError):
    """A requested point lies outside the chart's radicand domain."""


EPS_DOM = 1e-12

# defining conditions: WEIGHTS @ (|z_1|^2, ..., |z_8|^2) = LEVELS
WEIGHTS = (
    (1, 0, 0, 0, 1, 0, 0, 0),
    (0, 1, 0, 0, 1, 0, 1, 0),
    (0, 0, 1, 0, 0, 0, 1, 0),
    (0, 0, 0, 1, -1, 0, 1, 0),
    (0, 0, 0, 0, 1, -1, 1, 0),
    (0, 0, 0, 0, 1, 0, -1, 1),
)
LEVELS = (6, 10, 6, 4, 2, 4)

# free complex slots per chart, 1-based indices into (z1, ..., z8)
CHART_SLOTS = {1: (1, 2), 2: (2, 3), 3: (3, 4), 6: (6, 7), 7: (7, 8)}

# charts whose origin is fixed by the full torus action
INVARIANT_CHARTS = (2, 3, 6, 7)

# image polygon of (J, H) at t = 0, for sanity banding of diagram output
OCTAGON_VERTICES = (
    (0.0, 1.0), (0.0, 2.0), (1.0, 3.0), (2.0, 3.0),
    (3.0, 2.0), (3.0, 1.0), (2.0, 0.0), (1.0, 0.0),
)


def _solve_affine(columns: Sequence[int]) -> dict[int, tuple[Fraction, Fraction, Fraction]]:
    """Solve the six conditions for the six non-free moduli.

    ``columns`` are the two free 1-based slots.  Each dependent modulus comes
    out as c0 + c_rho*rho + c_sigma*sigma with exact rational coefficients.
    """
    free = set(columns)
    dep = [k for k in range(1, 9) if k not in free]
    a = [[Fraction(WEIGHTS[r][k - 1]) for k in dep] for r in range(6)]
    # three right-hand sides: constants, -column(rho), -column(sigma)
    rhs = [
        [Fraction(LEVELS[r]) for r in range(6)],
        [Fraction(-WEIGHTS[r][columns[0] - 1]) for r in range(6)],
        [Fraction(-WEIGHTS[r][columns[1] - 1]) for r in range(6)],
    ]
    n = 6
    m = [row[:] + [rhs[0][i], rhs[1][i], rhs[2][i]] for i, row in enumerate(a)]
    for col in range(n):
        piv = next(r for r in range(col, n) if m[r][col] != 0)
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        m[col] = [x * inv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return {k: (m[i][n], m[i][n + 1], m[i][n + 2]) for i, k in enumerate(dep)}


RADICAND_TABLES: dict[int, dict[int, tuple[Fraction, Fraction, Fraction]]] = {
    nu: _solve_affine(slots) for nu, slots in CHART_SLOTS.items()
}


def manifold_residual(z: Sequence[complex]) -> tuple[float, ...]:
    """Residuals of the six defining conditions at an ambient point."""
    if len(z) != 8:
        raise ValueError("expected 8 ambient coordinates")
    n = [abs(complex(zk)) ** 2 for zk in z]
    return (
        n[0] + n[4] - 6.0,
        n[1] + n[4] + n[6] - 10.0,
        n[2] + n[6] - 6.0,
        n[3] - n[4] + n[6] - 4.0,
        n[4] - n[5] + n[6] - 2.0,
        n[4] - n[6] + n[7] - 4.0,
    )


def _radicands(nu: int, rho: float, sigma: float) -> dict[int, float]:
    table = RADICAND_TABLES[nu]
    return {k: float(c0) + float(cr) * rho + float(cs) * sigma for k, (c0, cr, cs) in table.items()}


def _embed_any(nu: int, z: complex, w: complex) -> tuple[complex, ...]:
    if nu not in CHART_SLOTS:
        raise DomainError(f"no chart {nu}")
    z = complex(z)
    w = complex(w)
    rho = abs(z) ** 2
    sigma = abs(w) ** 2
    rad = _radicands(nu, rho, sigma)
    out: list[complex] = [0j] * 8
    pa, pb = CHART_SLOTS[nu]
    out[pa - 1] = z
    out[pb - 1] = w
    for k, r in rad.items():
        if r < -EPS_DOM:
            raise DomainError(f"chart {nu}: modulus {k} would be negative ({r:.3e})")
        out[k - 1] = complex(math.sqrt(max(r, 0.0)))
    return tuple(out)


def chart_embed(nu: int, z: complex, w: complex) -> tuple[complex, ...]:
    """Ambient point of the chart-``nu`` coordinates (z, w), nu in {1, 2}.

    The remaining moduli take the nonnegative real square roots of the
    radicands; DomainError if any radicand is negative beyond EPS_DOM.
    """
    if nu not in (1, 2):
        raise DomainError(f"chart_embed supports charts 1 and 2, got {nu}")
    return _embed_any(nu, z, w)


def chart_contains(nu: int, z: complex, w: complex) -> bool:
    """Whether (z, w) lies in the closed chart-``nu`` domain (EPS_DOM slack)."""
    if nu not in CHART_SLOTS:
        return False
    rho = abs(complex(z)) ** 2
    sigma = abs(complex(w)) ** 2
    return all(r >= -EPS_DOM for r in _radicands(nu, rho, sigma).values())


def polar_to_chart(j: float, theta1: float, s: float, theta2: float) -> tuple[complex, complex]:
    """Chart-1 coordinates from action-angle style data.

    j is the first integral (|z|^2 = 2j), s the squared second radius.
    """
    if j < 0.0 or s < 0.0:
        raise DomainError("polar radii need j >= 0 and s >= 0")
    return (
        math.sqrt(2.0 * j) * cmath.exp(1j * theta1),
        math.sqrt(s) * cmath.exp(1j * theta2),
    )


def chart_to_polar(z: complex, w: complex) -> tuple[float, float, float, float]:
    """Inverse of polar_to_chart.  Angles of zero-radius slots are 0 by
    convention (the angle is undefined there)."""
    z = complex(z)
    w = complex(w)
    th1 = cmath.phase(z) if abs(z) > 0.0 else 0.0
    th2 = cmath.phase(w) if abs(w) > 0.0 else 0.0
    return (abs(z) ** 2 / 2.0, th1, abs(w) ** 2, th2)


def reduced_chart_embed(j: float, w: complex) -> tuple[complex, ...]:
    """Ambient point over the reduced coordinates w = u + iv on the J = j
    level, with the first angle gauged away."""
    if j < 0.0:
        raise DomainError("need j >= 0")
    return chart_embed(1, math.sqrt(2.0 * j), w)


def s_domain(j: float) -> tuple[float, float]:
    """Admissible range of s = |w|^2 in chart 1 on the J = j level."""
    a = 2.0 * j
    lo = max(a - 2.0, 2.0 * a - 6.0, 0.0)
    hi = min(8.0, 4.0 + a, 2.0 + 2.0 * a)
    if lo > hi + EPS_DOM:
        raise DomainError(f"empty reduced domain at j = {j}")
    return lo, hi


def invariant_point(nu: int) -> tuple[complex, ...]:
    """Ambient coordinates of the chart-``nu`` origin, nu in {2, 3, 6, 7}.

    These four points are fixed by the torus action; their types under the
    deformed system are decided by the rank-zero classifier.
    """
    if nu not in INVARIANT_CHARTS:
        raise DomainError(f"chart {nu} origin is not an invariant point")
    return _embed_any(nu, 0j, 0j)
