"""Simulation and deterministic approximations of local density-dependent
Markov processes on weighted Erdős–Rényi graphs."""

from .approximations import (
    MeanFieldSolution,
    NimfaSolution,
    nimfa_average,
    nimfa_rhs,
    simplex_violation,
    solve_meanfield,
    solve_nimfa,
)
from .errors import (
    CapacityError,
    DegenerateParametersError,
    ErdyError,
    GridMismatchError,
    IntegrationError,
    InvalidInputError,
    ModelContractError,
    SimplexViolationError,
    SimulationError,
)
from .experiments import (
    StudyConfig,
    StudyResult,
    derive_seed,
    fit_loglog,
    fit_loglog_slope,
    run_convergence_study,
    sup_error,
)
from .graph import (
    AssumptionReport,
    GraphParams,
    WeightDistribution,
    WeightedGraph,
    check_assumptions,
    common_weight,
    covariance_c,
    mean_degree,
    r1,
    r2,
    read_edge_list,
    sample_graph,
    write_edge_list,
)
from .models import (
    SIR,
    SIS,
    CustomModel,
    LipschitzConstants,
    QuadraticSIS,
    RateModel,
    Voter,
    local_environment,
    local_environments,
    model_from_spec,
)
from .simulation import (
    EventLog,
    KPath,
    SystemState,
    Trajectory,
    compute_h,
    gronwall_slack,
    initial_state,
    net_jump_counts,
    reconstruct_k,
    simulate,
    sup_h,
)

__version__ = "0.1.0"
