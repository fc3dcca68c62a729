"""Stability-constrained optimal power flow for droop-controlled inverter
networks: network reduction, decentralized voltage-difference stability
certificates, an eigenvalue oracle, a dense SQP solver with full duals, and
the shadow-price analysis layer tying them together."""

from .dynamics import (
    EigenReport,
    InverterParams,
    OperatingPoint,
    StateMatrix,
    eigen_stability,
    injection_jacobian,
    linearize,
    reference_params,
)
from .econdual import (
    MaxFormMultipliers,
    NsspReport,
    StationarityCheck,
    Theorem1Report,
    aggregate_max_multiplier,
    compute_nssp,
    find_positive_price_costs,
    verify_reduced_stationarity,
    verify_zero_price_structure,
)
from .netmodel import (
    Branch,
    Bus,
    CaseError,
    Network,
    ReducedNetwork,
    ReductionError,
    SusceptanceMatrix,
    build_susceptance,
    builtin_case_path,
    kron_reduce,
    load_case,
    parse_case,
    with_loads,
)
from .opfcore import (
    CostModel,
    DecisionVector,
    GenLimits,
    OpfProblem,
    OpfSolution,
    assemble,
    default_starts,
    evaluate_constraints,
    newton_power_flow,
    solution_record,
    solve,
    solve_sweep,
)
from .stabcert import (
    GapRatioReport,
    StabilityConstraint,
    StabilityConstraintSet,
    build_constraints,
    evaluate_margins,
    from_gammas,
    gap_ratio_scan,
)

__version__ = "0.1.0"
