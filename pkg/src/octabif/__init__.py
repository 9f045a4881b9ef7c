"""Completely integrable systems on the octagon manifold.

A four-parameter family (J, H_t) with one S^1 symmetry: singular points
and their Williamson types, reduced fibre topology (stacked tori through
saddle bouquets), and bifurcation diagrams with flap, swallowtail, and
transition data.
"""

from .bifurcation import (
    DiagramKind,
    DiagramPoint,
    FamilyPath,
    NoTransition,
    count_fibre_components,
    export_flap_swallowtail_data,
    scan_diagram,
    trace_transition,
)
from .energies import eval_Ht, eval_J, reduced_coeffs, reduced_value
from .fibres import (
    BouquetGraph,
    ReducedFibre,
    count_components,
    fibre_graph,
    max_hyperbolic_audit,
    reduced_level_set,
    stacked_torus_count,
)
from .geometry import DomainError, s_domain
from .numerics import DegenerateFamily, NoConvergence
from .singular import (
    SingularPointRecord,
    WilliamsonType,
    classify_rank_zero,
    degenerate_rank_one_locus,
    find_rank_one,
    invariant_points,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BouquetGraph",
    "DegenerateFamily",
    "DiagramKind",
    "DiagramPoint",
    "DomainError",
    "FamilyPath",
    "NoConvergence",
    "NoTransition",
    "ReducedFibre",
    "SingularPointRecord",
    "WilliamsonType",
    "classify_rank_zero",
    "count_components",
    "count_fibre_components",
    "degenerate_rank_one_locus",
    "eval_Ht",
    "eval_J",
    "export_flap_swallowtail_data",
    "fibre_graph",
    "find_rank_one",
    "invariant_points",
    "max_hyperbolic_audit",
    "reduced_coeffs",
    "reduced_level_set",
    "reduced_value",
    "s_domain",
    "scan_diagram",
    "stacked_torus_count",
    "trace_transition",
]
