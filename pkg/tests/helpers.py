"""Shared helpers for the test suite."""

from __future__ import annotations


def pair_means(vals: list[complex]) -> list[complex]:
    """Average the four eigenvalues into two nearest pairs.

    A defective double eigenvalue of a non-symmetric matrix splits under
    floating-point eig by about sqrt(eps) * norm, symmetrically about the
    true value to first order, so the pair mean recovers it.
    """
    vs = list(vals)
    out = []
    while vs:
        v = vs.pop()
        i = min(range(len(vs)), key=lambda k: abs(vs[k] - v))
        w = vs.pop(i)
        out.append((v + w) / 2.0)
    return out


def match_defect(vals, expected) -> float:
    """Worst scaled distance of ``vals`` to the multiset ``expected``.

    Greedy nearest matching without replacement; scale 1 + |expected value|.
    """
    pool = list(expected)
    worst = 0.0
    for v in vals:
        best = min(pool, key=lambda x: abs(x - v))
        worst = max(worst, abs(best - v) / (1.0 + abs(best)))
        pool.remove(best)
    return worst
