"""Fibre-topology tests: level-set extraction, saddle graphs, component
counts and the stacking number."""

import numpy as np
import pytest

from octabif.fibres import (
    count_components,
    fibre_graph,
    max_hyperbolic_audit,
    reduced_level_set,
    stacked_torus_count,
)
from octabif.geometry import DomainError

T2 = (0.25, 1 / 3, 1 / 3, 1.0)
T3 = (0.5, 0.5, 1 / 3, 1.0)
TAU4 = -12.045
T4 = (0.5, TAU4 / 2, TAU4 / 3, TAU4)

H2 = 1.429653761410995
H3 = 1.3891784


def _euler_ok(g):
    return len(g.vertices) - g.edges + g.faces == 1 + g.n_components


def test_two_stack_graph():
    g = fibre_graph(T2, 2.0, H2)
    assert (len(g.vertices), g.edges, g.faces) == (1, 2, 3)
    assert g.n_components == 1
    assert g.k == 2
    assert g.S == ()
    assert _euler_ok(g)
    assert g.edges == 2 * len(g.vertices)


def test_three_stack_graph():
    g = fibre_graph(T3, 2.0, H3)
    assert (len(g.vertices), g.edges, g.faces) == (2, 4, 4)
    assert g.n_components == 1
    assert g.k == 3
    assert _euler_ok(g)
    assert stacked_torus_count(T3, 2.0, H3) == 3


def test_four_stack_graph():
    g = fibre_graph(T4, 2.0, -14.7267)
    assert (len(g.vertices), g.edges, g.faces) == (3, 6, 5)
    assert g.n_components == 1
    assert g.k == 4
    assert _euler_ok(g)


def test_window_graph_above_collision():
    g = fibre_graph(T3, 2.10125, 1.092151)
    assert (len(g.vertices), g.edges, g.faces) == (1, 2, 3)
    assert g.k == 2
    assert _euler_ok(g)


def test_regular_level_graph_has_no_saddles():
    g = fibre_graph(T3, 2.0, 1.2)
    assert g.vertices == []
    assert g.edges == 0
    assert g.k == 1
    assert _euler_ok(g)


def test_counts_and_level_sets_agree():
    for t, j, h, want in ((T2, 2.0, H2, 1), (T3, 1.90125, 1.733735, 2),
                          (T3, 2.0, H3, 1)):
        n, open_unresolved = count_components(t, j, h)
        assert n == want
        assert not open_unresolved
        fib = reduced_level_set(t, j, h)
        assert fib.n_components == want
        assert len(fib.polylines) >= want
        assert len(fib.component_of) == len(fib.polylines)


def test_toric_limit_counts():
    t = (0.01, 1 / 3, 1 / 3, 1.0)
    assert count_components(t, 1.5, 4.707294726129869) == (1, False)
    assert count_components(t, 1.5, 50.0) == (0, False)


def test_empty_level_set():
    fib = reduced_level_set(T3, 2.0, 50.0)
    assert fib.n_components == 0
    assert fib.polylines == []


def test_count_rejects_bad_j():
    with pytest.raises(DomainError):
        count_components(T3, 5.0, 1.0)


def test_audit_values():
    assert max_hyperbolic_audit(T4, j_values=[2.0]) == 3
    # both hyperbolic circles of the 3-stack sit on the same fibre
    assert max_hyperbolic_audit(T3, j_values=[2.0]) == 2
    assert max_hyperbolic_audit((1e-3, 0.0, 0.0, 0.0), j_values=list(np.linspace(0.2, 2.8, 14))) == 0
