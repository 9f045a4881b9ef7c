"""Randomized invariants, lighter siblings of the acceptance property suite.

Everything is seeded; nothing here depends on wall-clock or thread count.
"""

import math
import warnings

import numpy as np

from octabif.energies import (
    eval_Ht,
    eval_J,
    flow_J,
    jet2_reduced,
    poisson_bracket,
    reduced_value,
)
from octabif.fibres import fibre_graph, max_hyperbolic_audit
from octabif.geometry import (
    DomainError,
    chart_embed,
    manifold_residual,
    polar_to_chart,
    s_domain,
)
from octabif.singular import nonneg_det_check

SEED = 42


def _draw_polar(rng):
    j = float(rng.uniform(0.05, 2.95))
    lo, hi = s_domain(j)
    s = float(rng.uniform(lo + 1e-6, hi - 1e-6))
    th1 = float(rng.uniform(-math.pi, math.pi))
    th2 = float(rng.uniform(-math.pi, math.pi))
    return j, s, th1, th2


def test_residual_and_conserved_j_along_the_flow():
    rng = np.random.default_rng(SEED)
    worst_res = worst_j = 0.0
    for _ in range(300):
        j, s, th1, th2 = _draw_polar(rng)
        z, w = polar_to_chart(j, th1, s, th2)
        p = chart_embed(1, z, w)
        worst_res = max(worst_res, max(manifold_residual(p)))
        z2, w2 = flow_J(float(rng.uniform(0, 7)), z, w)
        worst_j = max(worst_j, abs(eval_J(chart_embed(1, z2, w2)) - j))
    assert worst_res < 1e-10
    assert worst_j < 1e-10


def test_bracket_and_polar_identity():
    rng = np.random.default_rng(SEED + 1)
    for _ in range(300):
        t = tuple(rng.uniform(-2, 2, size=4))
        j, s, th1, th2 = _draw_polar(rng)
        z, w = polar_to_chart(j, th1, s, th2)
        assert abs(poisson_bracket(t, 1, z, w)) < 1e-10
        u = math.sqrt(s) * math.cos(th2)
        v = math.sqrt(s) * math.sin(th2)
        red = reduced_value(t, j, u, v)
        amb = eval_Ht(t, chart_embed(1, z, w))
        assert abs(red - amb) < 1e-10 * (1.0 + abs(amb))


def test_reduced_gradient_vanishes_at_circle_points():
    # at every reported rank-one point the reduced gradient is zero
    from octabif.singular import find_rank_one

    for t, j in (((0.25, 1 / 3, 1 / 3, 1.0), 2.0),
                  ((0.5, 0.5, 1 / 3, 1.0), 2.0),
                  ((0.35, 0.35, 7 / 30, 0.7), 1.0)):
        for r in find_rank_one(t, j):
            g = jet2_reduced(t, j, r.u, r.v).g
            scale = 1.0 + float(np.max(np.abs(jet2_reduced(t, j, r.u, r.v).h)))
            assert float(np.max(np.abs(g))) < 1e-7 * scale


def test_nonneg_det_over_random_pencils():
    rng = np.random.default_rng(SEED + 2)
    for _ in range(200):
        t = tuple(rng.uniform(-2, 2, size=4))
        c1, c2 = (float(x) for x in rng.uniform(-2, 2, size=2))
        for d in nonneg_det_check(t, c1, c2):
            assert d >= -1e-9 * max(1.0, abs(d))


def test_euler_identity_on_probe_graphs():
    probes = (
        ((0.25, 1 / 3, 1 / 3, 1.0), 2.0, 1.429654),
        ((0.5, 0.5, 1 / 3, 1.0), 2.0, 1.389178),
        ((0.5, 0.5, 1 / 3, 1.0), 1.90125, 1.733735),
        ((0.5, 0.5, 1 / 3, 1.0), 2.0, 1.2),
        ((0.5, -6.0225, -4.015, -12.045), 2.0, -14.7267),
    )
    for t, j, h in probes:
        g = fibre_graph(t, j, h, grid=500)
        assert g.edges == 2 * len(g.vertices)
        assert len(g.vertices) - g.edges + g.faces == 1 + g.n_components
        assert g.S == ()


def test_audit_bound_on_random_families():
    rng = np.random.default_rng(SEED + 3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for _ in range(10):
            t = rng.uniform(-2, 2, size=4)
            while t[2] == 0.0:
                t = rng.uniform(-2, 2, size=4)
            try:
                bound = max_hyperbolic_audit(tuple(float(x) for x in t), exact=False)
            except DomainError:
                continue
            assert 0 <= bound <= 12
