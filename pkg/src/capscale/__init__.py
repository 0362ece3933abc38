"""capscale: a laboratory for online capacity scaling.

Workload construction, fluid queue simulation under online scaling
controllers, the offline LP benchmark, guarantee-constant calculus,
adversarial lower-bound instance generators, and potential-function drift
diagnostics, behind a batch CLI.
"""

from .workload import (
    ArrivalFunction,
    AccuracyReport,
    GridMismatchError,
    make_constant,
    make_sinusoid,
    make_step,
    ingest_trace,
    load_trace_csv,
    make_prediction,
    mae,
    accuracy_eta,
    resample,
)
from .dynamics import (
    CostWeights,
    CostBreakdown,
    Trajectory,
    simulate,
    cost,
    cost_increments,
    competitive_ratio,
)
from .policies import (
    ABCSParams,
    Policy,
    BalancedScaling,
    AdaptToPrediction,
    AdaptiveBalancedScaling,
    IdleTimeoutTimer,
    NoWaitBalancedScaling,
    FixedSchedule,
    balanced_derivative,
    gated_rates,
    confidence_params,
    build_policy,
)
from .offline import (
    LPInstance,
    LPSolution,
    SolverError,
    build_lp,
    solve_lp,
    solve,
    lp_schedule,
    opt_cost,
    approximation_factor,
)
from .bounds import (
    GuaranteeConstants,
    guarantee_constants,
    guarantee_constants_exact,
    cr_bound,
    expected_cr,
    error_scale,
)
from .adversary import (
    AdversaryReport,
    online_lower_bound,
    timer_lower_bound,
    consistency_tradeoff,
    setup_time_lower_bound,
    integrality_gap,
)
from .diagnostics import (
    PotentialSeries,
    potential_pcr,
    potential_ocr,
    drift_check,
)

__version__ = "0.1.0"
