"""The commuting integrals and their deformations.

J and H are the two toric integrals; gamma_1..gamma_4 are the torus-invariant
perturbations that deform H into H_t.  On a fixed J-level the first angle can
be gauged away, leaving a one-degree-of-freedom potential on the reduced
surface; its even part (gamma_cap) and odd radical part (gamma_bar_omega) are
implemented both in closed form and through the ambient embedding, and the
two routes are cross-checked at import.

All derivative information flows through second-order jets; there are no
finite differences in this module.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .geometry import (
    CHART_SLOTS,
    DomainError,
    RADICAND_TABLES,
    chart_embed,
    reduced_chart_embed,
    s_domain,
)
from .numerics import CNum, Jet2, _peval, _reduced_blocks

__all__ = [
    "MUTATIONS",
    "eval_J",
    "eval_H",
    "eval_gamma",
    "eval_Ht",
    "gamma_cap",
    "gamma_bar_omega",
    "reduced_value",
    "reduced_coeffs",
    "jet2_reduced",
    "jet2_chart",
    "flow_J",
    "poisson_bracket",
    "gamma_cap_selftest",
]

# active fault injections (verification plumbing); see the verify command
MUTATIONS: set[str] = set()


def eval_J(z: Sequence[complex]) -> float:
    return abs(complex(z[0])) ** 2 / 2.0


def eval_H(z: Sequence[complex]) -> float:
    return abs(complex(z[2])) ** 2 / 2.0


def eval_gamma(k: int, z: Sequence[complex]) -> float:
    """The k-th invariant perturbation at an ambient point, k in 1..4."""
    zc = [complex(x) for x in z]
    if k == 1:
        return ((zc[1] * zc[2] * zc[3]).conjugate() * zc[5] * zc[6] * zc[7]).real / 50.0
    n4 = abs(zc[3]) ** 2
    n5 = abs(zc[4]) ** 2
    n7 = abs(zc[6]) ** 2
    if k == 2:
        val = n5 * n5 * n4 * n4 / 50.0
        return -val if "gamma2-sign" in MUTATIONS else val
    if k == 3:
        return n4 * n4 * n7 * n7 / 50.0
    if k == 4:
        return n5 * n5 * n7 * n7 / 100.0
    raise ValueError(f"gamma index must be 1..4, got {k}")


def eval_Ht(t: Sequence[float], z: Sequence[complex]) -> float:
    """The deformed Hamiltonian (1 - 2 t1) H + sum_k t_k gamma_k."""
    t1, t2, t3, t4 = t
    return (
        (1.0 - 2.0 * t1) * eval_H(z)
        + t1 * eval_gamma(1, z)
        + t2 * eval_gamma(2, z)
        + t3 * eval_gamma(3, z)
        + t4 * eval_gamma(4, z)
    )


# ---------------------------------------------------------------------------
# the reduced potential on a J-level
# ---------------------------------------------------------------------------

def reduced_coeffs(t: Sequence[float], j: float):
    """Float coefficient arrays (ascending, in s = u^2 + v^2) of the even
    potential Gamma and of the radical product P on the J = j level."""
    a = 2.0 * float(j)
    P, _dG, G = _reduced_blocks([float(x) for x in t], a)
    return np.asarray(G, dtype=float), np.asarray(P, dtype=float)


def gamma_cap(t: Sequence[float], j: float, s: float) -> float:
    """Even part of the reduced potential at s = |w|^2 on the J = j level."""
    G, _ = reduced_coeffs(t, j)
    return float(np.polynomial.polynomial.polyval(s, G))


def gamma_bar_omega(r1: float, r2: float) -> float:
    """Odd radical factor: (r2 / 50) sqrt(P) at a = r1^2, s = r2^2.

    Vanishing P marks the rim of the reduced surface, where the odd part of
    the potential loses smoothness in these coordinates.
    """
    a = float(r1) ** 2
    s = float(r2) ** 2
    P = (8.0 - s) * (2.0 + 2.0 * a - s) * (6.0 - 2.0 * a + s) * (4.0 + a - s) * (2.0 - a + s)
    if P < 0.0:
        raise DomainError(f"outside the reduced surface: P = {P:.3e} < 0")
    return r2 / 50.0 * math.sqrt(P)


def reduced_value(t: Sequence[float], j: float, u: float, v: float) -> float:
    """The reduced Hamiltonian at (u, v) on the J = j level."""
    t1 = float(t[0])
    s = u * u + v * v
    G, P = reduced_coeffs(t, j)
    Pv = float(np.polynomial.polynomial.polyval(s, P))
    if Pv < 0.0:
        raise DomainError("outside the reduced surface")
    return float(np.polynomial.polynomial.polyval(s, G)) + t1 / 50.0 * u * math.sqrt(Pv)


def jet2_reduced(t: Sequence[float], j: float, u: float, v: float) -> Jet2:
    """Value, gradient and Hessian of the reduced Hamiltonian in (u, v).

    Only interior points are meaningful: on the rim the radical term is not
    differentiable in these coordinates and a DomainError is raised.
    """
    t1 = float(t[0])
    G, P = reduced_coeffs(t, j)
    ju = Jet2.variable(u, 0, 2)
    jv = Jet2.variable(v, 1, 2)
    s = ju * ju + jv * jv
    Pj = _peval(list(P), s)
    if Pj.f <= 0.0:
        raise DomainError("rim or exterior of the reduced surface")
    val = _peval(list(G), s) + (t1 / 50.0) * ju * Pj.sqrt()
    return val


# ---------------------------------------------------------------------------
# chart evaluation with jets
# ---------------------------------------------------------------------------

def _chart_cnums(nu: int, x, y, u, v) -> list[CNum]:
    """All eight ambient coordinates over a chart as CNum of the scalar type
    of the inputs (floats or jets)."""
    slots = CHART_SLOTS[nu]
    rho = x * x + y * y
    sigma = u * u + v * v
    out: list[CNum | None] = [None] * 8
    out[slots[0] - 1] = CNum(x, y)
    out[slots[1] - 1] = CNum(u, v)
    zero = (x - x) if isinstance(x, Jet2) else 0.0
    for k, (c0, cr, cs) in RADICAND_TABLES[nu].items():
        rad = float(c0) + float(cr) * rho + float(cs) * sigma
        try:
            root = rad.sqrt() if isinstance(rad, Jet2) else math.sqrt(rad)
        except ValueError as exc:
            raise DomainError(f"chart {nu} boundary: modulus {k} vanishes") from exc
        out[k - 1] = CNum(root, zero)
    return out  # type: ignore[return-value]


def _energy_on_cnums(t: Sequence[float], zc: list[CNum], which: str):
    if which == "J":
        return zc[0].abs2() * 0.5
    if which != "Ht":
        raise ValueError("which must be 'J' or 'Ht'")
    t1, t2, t3, t4 = (float(x) for x in t)
    H = zc[2].abs2() * 0.5
    g1 = ((zc[1] * zc[2] * zc[3]).conj() * (zc[5] * zc[6] * zc[7])).re * (1.0 / 50.0)
    n4 = zc[3].abs2()
    n5 = zc[4].abs2()
    n7 = zc[6].abs2()
    g2 = n5 * n5 * n4 * n4 * (1.0 / 50.0)
    if "gamma2-sign" in MUTATIONS:
        g2 = -g2
    g3 = n4 * n4 * n7 * n7 * (1.0 / 50.0)
    g4 = n5 * n5 * n7 * n7 * (1.0 / 100.0)
    return (1.0 - 2.0 * t1) * H + t1 * g1 + t2 * g2 + t3 * g3 + t4 * g4


def jet2_chart(t: Sequence[float], nu: int, z: complex, w: complex, which: str = "Ht") -> Jet2:
    """Second-order jet of J or H_t in the real chart coordinates
    (Re z, Im z, Re w, Im w).  Charts 1 and 2 cover the generic strata; the
    remaining chart ids serve the invariant-point classifiers."""
    if nu not in CHART_SLOTS:
        raise DomainError(f"no chart {nu}")
    z = complex(z)
    w = complex(w)
    x = Jet2.variable(z.real, 0, 4)
    y = Jet2.variable(z.imag, 1, 4)
    u = Jet2.variable(w.real, 2, 4)
    v = Jet2.variable(w.imag, 3, 4)
    return _energy_on_cnums(t, _chart_cnums(nu, x, y, u, v), which)


def flow_J(time: float, z: complex, w: complex) -> tuple[complex, complex]:
    """Time-``time`` Hamiltonian flow of J in chart 1: the first slot rotates
    at unit angular speed, the second is fixed."""
    return (complex(z) * complex(math.cos(time), math.sin(time)), complex(w))


def poisson_bracket(t: Sequence[float], nu: int, z: complex, w: complex) -> float:
    """{J, H_t} in chart ``nu`` at (z, w), from exact jet gradients.

    Identically zero in exact arithmetic; the float result is a residual
    diagnostic used by the verification suite.
    """
    gj = jet2_chart(t, nu, z, w, "J").g
    gh = jet2_chart(t, nu, z, w, "Ht").g
    return float(
        gj[0] * gh[1] - gj[1] * gh[0] + gj[2] * gh[3] - gj[3] * gh[2]
    )


# ---------------------------------------------------------------------------
# startup consistency: closed form vs ambient embedding
# ---------------------------------------------------------------------------

_SELFTEST_SETS = (
    ((0.25, 1.0 / 3.0, 1.0 / 3.0, 1.0), 2.0, 3.7),
    ((0.5, 0.5, 1.0 / 3.0, 1.0), 2.0, 5.0),
    ((0.35, 0.35, 7.0 / 30.0, 0.7), 0.664405, 1.0),
    ((0.5, -6.0225, -4.015, -12.045), 1.3, 2.2),
)


def gamma_cap_selftest(tol: float = 1e-10) -> float:
    """Largest mismatch between the closed-form even potential and the even
    part of the ambient Hamiltonian over the probe set.  Raises ArithmeticError
    beyond ``tol`` (relative)."""
    worst = 0.0
    for t, j, s in _SELFTEST_SETS:
        lo, hi = s_domain(j)
        if not (lo < s < hi):
            raise AssertionError("self-test probe outside the reduced domain")
        r2 = math.sqrt(s)
        plus = eval_Ht(t, reduced_chart_embed(j, complex(r2, 0.0)))
        minus = eval_Ht(t, reduced_chart_embed(j, complex(-r2, 0.0)))
        even = 0.5 * (plus + minus)
        closed = gamma_cap(t, j, s)
        err = abs(even - closed) / (1.0 + abs(closed))
        worst = max(worst, err)
        # odd part against the radical factor, same embedding
        odd = 0.5 * (plus - minus)
        closed_odd = t[0] * gamma_bar_omega(math.sqrt(2.0 * j), r2)
        err2 = abs(odd - closed_odd) / (1.0 + abs(closed_odd))
        worst = max(worst, err2)
    if worst > tol:
        raise ArithmeticError(
            f"reduced-potential routes disagree by {worst:.3e} (tol {tol:.1e})"
        )
    return worst


gamma_cap_selftest()
