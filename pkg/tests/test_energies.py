"""Tests for the energy pair (J, H_t): reduced potentials, the polar identity,
jets, the circle flow and the commutation bracket."""

import math

import numpy as np
import pytest

from octabif.energies import (
    MUTATIONS,
    eval_Ht,
    eval_J,
    flow_J,
    gamma_bar_omega,
    gamma_cap,
    gamma_cap_selftest,
    jet2_chart,
    jet2_reduced,
    poisson_bracket,
    reduced_coeffs,
    reduced_value,
)
from octabif.geometry import (
    DomainError,
    chart_embed,
    invariant_point,
    polar_to_chart,
    reduced_chart_embed,
    s_domain,
)

T_REF = (0.25, 1 / 3, 1 / 3, 1.0)


def _random_polar(rng):
    j = float(rng.uniform(0.1, 2.9))
    lo, hi = s_domain(j)
    s = float(rng.uniform(lo + 1e-3, hi - 1e-3))
    th1 = float(rng.uniform(-math.pi, math.pi))
    th2 = float(rng.uniform(-math.pi, math.pi))
    return j, s, th1, th2


def test_invariant_point_j_values():
    assert eval_J(invariant_point(2)) == pytest.approx(1.0)
    assert eval_J(invariant_point(3)) == pytest.approx(2.0)
    assert eval_J(invariant_point(6)) == pytest.approx(2.0)
    assert eval_J(invariant_point(7)) == pytest.approx(1.0)


def test_gamma_cap_is_polyval_of_reduced_coeffs():
    rng = np.random.default_rng(2)
    for _ in range(20):
        t = tuple(rng.uniform(-1, 1, size=4))
        j, s, _, _ = _random_polar(rng)
        G, P = reduced_coeffs(t, j)
        want = float(np.polynomial.polynomial.polyval(s, G))
        assert gamma_cap(t, j, s) == pytest.approx(want, rel=1e-14)
        assert float(np.polynomial.polynomial.polyval(s, P)) > 0.0


def test_polar_identity_through_chart_one():
    rng = np.random.default_rng(4)
    for _ in range(100):
        j, s, th1, th2 = _random_polar(rng)
        z, w = polar_to_chart(j, th1, s, th2)
        ambient = eval_Ht(T_REF, chart_embed(1, z, w))
        u = math.sqrt(s) * math.cos(th2)
        v = math.sqrt(s) * math.sin(th2)
        red = reduced_value(T_REF, j, u, v)
        assert abs(ambient - red) < 1e-10 * (1.0 + abs(red))


def test_even_odd_split_of_the_potential():
    rng = np.random.default_rng(6)
    for _ in range(50):
        j, s, _, _ = _random_polar(rng)
        r2 = math.sqrt(s)
        plus = eval_Ht(T_REF, reduced_chart_embed(j, complex(r2, 0.0)))
        minus = eval_Ht(T_REF, reduced_chart_embed(j, complex(-r2, 0.0)))
        even = 0.5 * (plus + minus)
        odd = 0.5 * (plus - minus)
        assert abs(even - gamma_cap(T_REF, j, s)) < 1e-10 * (1.0 + abs(even))
        want_odd = T_REF[0] * gamma_bar_omega(math.sqrt(2.0 * j), r2)
        assert abs(odd - want_odd) < 1e-10 * (1.0 + abs(want_odd))


def test_gamma_bar_omega_rejects_exterior():
    with pytest.raises(DomainError):
        gamma_bar_omega(math.sqrt(2.0), 5.0)  # s = 25 far beyond the rim at j = 1


def test_selftest_round_trip():
    assert gamma_cap_selftest() < 1e-10


def test_flow_period_two_pi():
    rng = np.random.default_rng(8)
    for _ in range(30):
        j, s, th1, th2 = _random_polar(rng)
        z, w = polar_to_chart(j, th1, s, th2)
        z2, w2 = flow_J(2 * math.pi, z, w)
        assert abs(z2 - z) < 1e-12 * (1.0 + abs(z))
        assert abs(w2 - w) < 1e-12 * (1.0 + abs(w))
        # the flow preserves both moduli at all times
        z3, w3 = flow_J(0.7, z, w)
        assert abs(abs(z3) - abs(z)) < 1e-13
        assert abs(abs(w3) - abs(w)) < 1e-13


def test_bracket_vanishes():
    rng = np.random.default_rng(10)
    for _ in range(100):
        t = tuple(rng.uniform(-1, 1, size=4))
        j, s, th1, th2 = _random_polar(rng)
        z, w = polar_to_chart(j, th1, s, th2)
        assert abs(poisson_bracket(t, 1, z, w)) < 1e-10


def test_chart_jet_matches_central_differences():
    t = T_REF
    z, w = polar_to_chart(1.3, 0.4, 2.1, 1.1)
    jet = jet2_chart(t, 1, z, w)
    h = 1e-5

    def f(dx, dy, du, dv):
        return eval_Ht(t, chart_embed(1, z + complex(dx, dy), w + complex(du, dv)))

    grads = []
    for i in range(4):
        d = [0.0] * 4
        d[i] = h
        grads.append((f(*d) - f(*[-x for x in d])) / (2 * h))
    scale = 1.0 + float(np.max(np.abs(jet.g)))
    assert np.allclose(jet.g, grads, atol=1e-6 * scale)
    # one diagonal and one mixed second derivative
    d2_00 = (f(h, 0, 0, 0) - 2 * f(0, 0, 0, 0) + f(-h, 0, 0, 0)) / h ** 2
    d2_03 = (f(h, 0, 0, h) - f(h, 0, 0, -h) - f(-h, 0, 0, h) + f(-h, 0, 0, -h)) / (4 * h ** 2)
    hscale = 1.0 + float(np.max(np.abs(jet.h)))
    assert abs(jet.h[0, 0] - d2_00) < 1e-4 * hscale
    assert abs(jet.h[0, 3] - d2_03) < 1e-4 * hscale


def test_reduced_jet_matches_central_differences():
    t = T_REF
    j, u, v = 1.7, 1.5, -0.5
    jet = jet2_reduced(t, j, u, v)
    h = 1e-5
    f = lambda du, dv: reduced_value(t, j, u + du, v + dv)
    gu = (f(h, 0) - f(-h, 0)) / (2 * h)
    gv = (f(0, h) - f(0, -h)) / (2 * h)
    assert jet.g == pytest.approx([gu, gv], abs=1e-7 * (1 + float(np.max(np.abs(jet.g)))))
    huu = (f(h, 0) - 2 * f(0, 0) + f(-h, 0)) / h ** 2
    assert abs(jet.h[0, 0] - huu) < 1e-4 * (1.0 + abs(jet.h[0, 0]))


def test_mutation_hook_perturbs_only_Ht():
    p = reduced_chart_embed(1.4, complex(1.1, 0.4))
    base_h = eval_Ht(T_REF, p)
    base_j = eval_J(p)
    MUTATIONS.add("gamma2-sign")
    try:
        assert eval_Ht(T_REF, p) != pytest.approx(base_h, abs=1e-12)
        assert eval_J(p) == pytest.approx(base_j, abs=1e-14)
        with pytest.raises(ArithmeticError):
            gamma_cap_selftest()
    finally:
        MUTATIONS.discard("gamma2-sign")
    assert eval_Ht(T_REF, p) == pytest.approx(base_h, abs=1e-14)
