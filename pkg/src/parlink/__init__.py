"""Equilibria of routing games on two-terminal parallel-link networks.

Compute Wardrop equilibria, coalition best responses and composite equilibria
(coalitions playing Nash against a Wardrop background), certify them with a
variational-inequality gap, and run the comparative-statics experiments:
coalition-size threshold and scans, coalition splits, and vanishing-coalition
convergence.
"""

from .analysis import (
    INDUCES_TOLERANCE,
    AdmissibleSequenceSpec,
    ComparisonReport,
    ConvergenceStep,
    ConvergenceTable,
    ScanResult,
    SplitExperiment,
    StructuralCheck,
    asymptotic_experiment,
    compare_ce_we,
    run_structural_checks,
    scan_coalition_size,
    scan_single_coalition,
    split_experiment,
    threshold_t_tilde,
)
from .core import (
    ArcViolation,
    CompositionProfile,
    CostFunction,
    EquilibriumReport,
    FlowProfile,
    Network,
    NetworkValidation,
    eval_cost,
    eval_cost_derivative,
    marginal_cost,
    validate_network,
)
from .equilibrium import (
    ConvergenceError,
    CostSummary,
    SolverSettings,
    WardropResult,
    best_response,
    ce_gap,
    equilibrium_costs,
    marginal_optimality_violation,
    solve_ce,
    solve_we,
)
from .instance import Instance, InstanceFormatError, emit_instance, load_instance, parse_instance
from .report import emit_report

__version__ = "0.1.0"

__all__ = [
    "AdmissibleSequenceSpec",
    "ArcViolation",
    "ComparisonReport",
    "CompositionProfile",
    "ConvergenceError",
    "ConvergenceStep",
    "ConvergenceTable",
    "CostFunction",
    "CostSummary",
    "EquilibriumReport",
    "FlowProfile",
    "INDUCES_TOLERANCE",
    "Instance",
    "InstanceFormatError",
    "Network",
    "NetworkValidation",
    "ScanResult",
    "SolverSettings",
    "SplitExperiment",
    "StructuralCheck",
    "WardropResult",
    "asymptotic_experiment",
    "best_response",
    "ce_gap",
    "compare_ce_we",
    "emit_instance",
    "emit_report",
    "equilibrium_costs",
    "eval_cost",
    "eval_cost_derivative",
    "load_instance",
    "marginal_cost",
    "marginal_optimality_violation",
    "parse_instance",
    "run_structural_checks",
    "scan_coalition_size",
    "scan_single_coalition",
    "solve_ce",
    "solve_we",
    "split_experiment",
    "threshold_t_tilde",
    "validate_network",
]
