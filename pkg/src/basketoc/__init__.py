"""Exact operating characteristics of basket trials with empirical Bayes
borrowing (power prior and Fujikawa designs)."""

from .calibration import (
    Calibration,
    InfeasibleError,
    RankedDesignTable,
    ScenarioMatrix,
    adjust_lambda,
    get_scenarios,
    opt_design,
    weight_grid,
)
from .design import (
    CPP,
    JSD,
    BetaParams,
    NoBorrowing,
    DesignSpec,
    Status,
    TrialState,
    WeightConfig,
    cpp_weight,
    final_decision,
    jsd_weight,
    shared_posterior,
    weight_curve,
    weight_matrix,
)
from .engine import (
    InterimConfig,
    OCResult,
    OutcomeClass,
    StageLayout,
    TrueScenario,
    ecd,
    enumerate_outcomes,
    ess,
    estim,
    evaluate,
    interim_decision,
    power,
    ppp,
    single_stage_oc,
    toer,
    two_stage_oc,
)
from .montecarlo import SimulationResult, simulate_oc

__version__ = "0.1.0"
