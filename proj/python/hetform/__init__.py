"""Heterogeneous-sensing formation analysis (C++ core)."""

from ._core import (
    DirectedEdge,
    FormationError,
    GainBound,
    MergeCase,
    RigidityReport,
    Scenario,
    SensingKind,
    SimParams,
    TwoLayerGraph,
    analyze_rigidity,
    assemble_control,
    check_consistency,
    gain_bound_one_leader,
    gain_bound_two_coleaders,
    gain_bound_unilateral,
    load_scenario,
    parse_scenario,
    perturb,
    plan_merge,
    projection_inverse,
    projection_sum_eigenvalues,
    rigidity_matrix,
    simulate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
