"""Singular-point tests: rank-one circle location and typing, the degree-12
criterion polynomial against its reference coefficient tables, rank-zero
classification, and the closed-form pencil spectra."""

import cmath
import math

import numpy as np
import pytest

from helpers import match_defect, pair_means

from octabif.geometry import manifold_residual
from octabif.numerics import DegenerateFamily, eigen4, rank_one_poly
from octabif.singular import (
    WilliamsonType,
    classify_rank_zero,
    find_rank_one,
    hessian_pencil,
    invariant_points,
    nonneg_det_check,
)

T2 = (0.25, 1 / 3, 1 / 3, 1.0)
T3 = (0.5, 0.5, 1 / 3, 1.0)
TAU4 = -12.045
T4 = (0.5, TAU4 / 2, TAU4 / 3, TAU4)

# reference coefficient tables, 6 significant figures, ascending in s
COEFFS_T2 = (655.36, -286855, 797691, -972680, 684747, -309212, 94171.9,
             -19783.5, 2874.65, -283.91, 18.1967, -0.682667, 0.0113778)
COEFFS_T3 = (2621.44, -366594, 966351, -1125670, 761534, -332674, 98714.3,
             -20343.5, 2917.25, -285.733, 18.2302, -0.682667, 0.0113778)


def _by_u(recs):
    return sorted(recs, key=lambda r: r.u)


def test_two_stack_points():
    recs = _by_u(find_rank_one(T2, 2.0))
    assert len(recs) == 2
    ell, hyp = recs
    assert ell.u == pytest.approx(-1.66216, abs=1e-3)
    assert ell.wtype is WilliamsonType.EllipticRegular
    assert hyp.u == pytest.approx(1.48116, abs=1e-3)
    assert hyp.wtype is WilliamsonType.HyperbolicRegular
    for r in recs:
        assert r.rank == 1
        assert r.v == 0.0
        assert r.j == 2.0
        assert max(manifold_residual(r.ambient)) < 1e-9
        assert r.branch in ("theta2=0", "theta2=pi")


def test_coefficient_tables_to_reference_precision():
    for t, table in ((T2, COEFFS_T2), (T3, COEFFS_T3)):
        p = rank_one_poly(t, 2.0)
        assert p.degree == 12
        for got, want in zip(p.coeffs, table):
            assert abs(got - want) <= 1e-4 * abs(want)


def test_three_stack_points():
    recs = _by_u(find_rank_one(T3, 2.0))
    assert [r.u for r in recs] == pytest.approx(
        [-2.23607, 1.56842, 2.23607, 2.74592], abs=1e-3)
    assert [r.wtype for r in recs] == [
        WilliamsonType.EllipticRegular,
        WilliamsonType.HyperbolicRegular,
        WilliamsonType.EllipticRegular,
        WilliamsonType.HyperbolicRegular,
    ]
    hyp = [r for r in recs if r.wtype is WilliamsonType.HyperbolicRegular]
    assert abs(hyp[0].h - hyp[1].h) < 1e-6
    assert hyp[0].h == pytest.approx(1.389178, abs=1e-5)


def test_four_stack_points():
    recs = _by_u(find_rank_one(T4, 2.0))
    assert [r.u for r in recs] == pytest.approx(
        [-2.61232, -2.23607, -1.78207, 1.83516, 2.23607, 2.5753], abs=1e-3)
    hyp = [r for r in recs if r.wtype is WilliamsonType.HyperbolicRegular]
    ell = [r for r in recs if r.wtype is WilliamsonType.EllipticRegular]
    assert sorted(round(r.u, 3) for r in hyp) == [-2.612, -1.782, 2.236]
    assert len(ell) == 3
    for r in hyp:
        assert r.h == pytest.approx(-14.7267, abs=1e-3)


def test_float_root_path_keeps_simple_roots():
    # the elliptic pair at u = +-2.23607 is a double root of the squared
    # criterion: sign scanning cannot see it, which is why the exact path is
    # the default.  The float path must still deliver the simple roots.
    exact = _by_u(find_rank_one(T3, 2.0))
    approx = _by_u(find_rank_one(T3, 2.0, exact=False))
    assert len(exact) == 4
    assert [r.u for r in approx] == pytest.approx([1.56842, 2.74592], abs=1e-4)
    assert all(r.wtype is WilliamsonType.HyperbolicRegular for r in approx)
    exact_simple = [r for r in exact if r.wtype is WilliamsonType.HyperbolicRegular]
    for a, b in zip(exact_simple, approx):
        assert a.u == pytest.approx(b.u, abs=1e-7)


def test_near_toric_sweep_has_no_hyperbolic_circles():
    # rim roots leak slightly past the boundary at tiny t1; the solver must
    # skip them rather than crash, and none may type as hyperbolic
    t = (1e-3, 0.0, 0.0, 0.0)
    for j in np.linspace(0.15, 2.85, 28):
        recs = find_rank_one(t, float(j))
        assert all(r.wtype is not WilliamsonType.HyperbolicRegular for r in recs)


def test_invariant_points_structure():
    recs = invariant_points(T3)
    assert len(recs) == 4
    assert sorted(r.chart for r in recs) == [2, 3, 6, 7]
    assert sorted(round(r.j, 9) for r in recs) == [1.0, 1.0, 2.0, 2.0]
    for r in recs:
        assert r.rank == 0
        assert max(manifold_residual(r.ambient)) < 1e-12


def test_rank_zero_type_sequence_along_the_flap_family():
    taus = {0.2: WilliamsonType.EllipticElliptic,
            0.45: WilliamsonType.FocusFocus,
            0.62: WilliamsonType.EllipticElliptic}
    for tau, want in taus.items():
        t = (tau / 2, tau / 2, tau / 3, tau)
        assert classify_rank_zero(t, 2) is want


def test_nonneg_det_at_invariant_points():
    rng = np.random.default_rng(12)
    for _ in range(50):
        c1, c2 = rng.uniform(-2, 2, size=2)
        for d in nonneg_det_check(T3, float(c1), float(c2)):
            assert d >= -1e-9


# ---------------------------------------------------------------------------
# closed-form pencil spectra at the chart-2 origin
# ---------------------------------------------------------------------------

def _pencil_cases(c1, c2):
    tau = 25 / 69
    lam = cmath.sqrt(-1250 * c1 ** 2 + 205000 * c1 * c2 / 23
                     - 8405000 * c2 ** 2 / 529) / (25 * math.sqrt(2))
    yield (tau / 2, tau / 2, tau / 3, tau), lam
    tau = 5 / 9
    lam = cmath.sqrt(-1250 * c1 ** 2 + 13000 * c1 * c2
                     - 33800 * c2 ** 2) / (25 * math.sqrt(2))
    yield (tau / 2, tau / 2, tau / 3, tau), lam
    lam = cmath.sqrt(-36 * c2 ** 2 + 444 * c1 * c2 - 1369 * c1 ** 2) / 37
    yield (25 / 74, 0.0, 0.0, 0.0), lam
    lam = cmath.sqrt(-36 * c2 ** 2 - 156 * c1 * c2 - 169 * c1 ** 2) / 13
    yield (25 / 26, 0.0, 0.0, 0.0), lam


def test_degenerate_pencils_give_double_pairs():
    rng = np.random.default_rng(42)
    for _ in range(3):
        c1, c2 = (float(x) for x in rng.uniform(-2, 2, size=2))
        for t, lam in _pencil_cases(c1, c2):
            got = eigen4(hessian_pencil(t, 2, c1, c2))
            # doubles split by ~sqrt(eps); the pair means recover the values
            means = pair_means(got)
            assert match_defect(means, [lam, -lam]) < 1e-8


def test_one_parameter_spectrum_formula():
    # closed-form spectrum of the (1, 1) pencil along t = (tau/2, tau/2, tau/3, tau)
    for tau in (0.2, 0.45, 0.62, 0.8):
        A = -625.0 / 2.0 + 6000.0 * tau - 91017.0 * tau * tau / 2.0
        B = ((25.0 / 2.0 - 423.0 * tau / 2.0)
             * cmath.sqrt(625.0 - 2850.0 * tau + 3105.0 * tau * tau))
        lp = cmath.sqrt(A + B) / 25.0
        lm = cmath.sqrt(A - B) / 25.0
        t = (tau / 2, tau / 2, tau / 3, tau)
        got = eigen4(hessian_pencil(t, 2, 1.0, 1.0))
        assert match_defect(got, [lp, -lp, lm, -lm]) < 1e-8


def test_rank_one_warns_on_degenerate_family():
    with pytest.warns(DegenerateFamily):
        find_rank_one((0.0, 1 / 3, 1 / 3, 1.0), 2.0)
