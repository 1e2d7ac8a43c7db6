"""Coupled mean-field forward-backward SDE solver with residual certificates.

Solves a fully coupled McKean-Vlasov forward-backward system on a time grid
with a Picard/least-squares hybrid scheme or a terminal-loss shooting
scheme, and certifies any candidate discrete solution with a computable
a posteriori error estimator.  A linear-quadratic benchmark with known
closed form supplies exact-solution oracles for validation and convergence
studies.
"""
from .basis import BasisSpec, basis_index, evaluate_policy, fit_weights
from .core import (
    PAPER_PARAMS,
    DivergenceError,
    Ensemble,
    InsufficientDataError,
    InvalidArgumentError,
    LQParams,
    MeasureSummary,
    MonotonicityCert,
    MonotonicityError,
    StepSizeError,
    TimeGrid,
    make_grid,
    validate_lq,
)
from .estimator import (
    EstimatorReport,
    GeneratorEval,
    StepMeasure,
    estimator_vs_error_ratio,
    evaluate_estimator,
    lq_generator,
)
from .lq_analytic import (
    ClosedForm,
    RiccatiSolution,
    TrueErrorReport,
    estimate_path_regularity,
    eval_closed_form,
    exact_discrete_solution,
    exact_triple_on_paths,
    riccati_discrete,
    true_error,
)
from .picard import (
    DecoupledPolicy,
    PicardConfig,
    backward_pass,
    forward_rollout,
    picard_solve,
    rollout_ensemble,
)
from .sampling import SampleConfig, derive_seed, gen_increments
from .shooting import ShootingParams, ShootingResult, shoot_rollout, solve_shooting
from .study import (
    CSV_HEADER,
    ScheduleEntry,
    StudyRow,
    fit_slope,
    read_csv,
    run_study,
    schedule,
    write_csv,
)

__version__ = "0.1.0"
