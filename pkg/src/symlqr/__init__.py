"""Model-free iterative LQR for externally symmetric linear systems.

The central object is the affine operator built from two plant runs per
evaluation; its fixed point is the optimal control.  Everything else here
supports that loop: signals on a shared time grid, the simulated plant,
step-size selection, Riccati references, static-gain recovery, and the
noise study.
"""

from .feedback import (
    DataMatrices,
    GainEstimate,
    RankDeficientDataError,
    average_trials,
    collect_data,
    recover_gain,
)
from .lti import (
    StateSpace,
    check_external_symmetry,
    check_internal_symmetry,
    gain_l2,
    gain_pk,
    hinf_norm,
    impulse_response,
    random_symmetric_system,
    simulate,
    stability_margin,
    transposed,
)
from .noise_study import NoiseStudyReport, run_unbiasedness_study
from .plant import (
    START_ORIGIN,
    START_PROBLEM,
    NoiseModel,
    PlantInterface,
    SimulatedPlant,
    derive_seed,
    noise_sample_path,
)
from .pontryagin import (
    OperatorConfig,
    OperatorEval,
    StepSizeEstimate,
    apply_linear_adjoint,
    apply_linear_part,
    apply_operator,
    contraction_bound,
    estimate_max_step_size,
    safe_step_size,
)
from .riccati import (
    FhSolution,
    LqrProblem,
    RiccatiSolution,
    TailErrorReport,
    analytic_P,
    cost_J,
    optimal_control_fh,
    riccati_tail_error,
    solve_are_hamiltonian,
    solve_riccati_fh,
)
from .signals import (
    GridMismatchError,
    Signal,
    TimeGrid,
    as_signature,
    inner_product,
    norm,
    read_csv,
    time_reverse,
    write_csv,
)
from .solver import (
    SolveResult,
    SolverConfig,
    SolverDivergenceError,
    iterate_once,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "DataMatrices",
    "GainEstimate",
    "RankDeficientDataError",
    "average_trials",
    "collect_data",
    "recover_gain",
    "StateSpace",
    "check_external_symmetry",
    "check_internal_symmetry",
    "gain_l2",
    "gain_pk",
    "hinf_norm",
    "impulse_response",
    "random_symmetric_system",
    "simulate",
    "stability_margin",
    "transposed",
    "NoiseStudyReport",
    "run_unbiasedness_study",
    "START_ORIGIN",
    "START_PROBLEM",
    "NoiseModel",
    "PlantInterface",
    "SimulatedPlant",
    "derive_seed",
    "noise_sample_path",
    "OperatorConfig",
    "OperatorEval",
    "StepSizeEstimate",
    "apply_linear_adjoint",
    "apply_linear_part",
    "apply_operator",
    "contraction_bound",
    "estimate_max_step_size",
    "safe_step_size",
    "FhSolution",
    "LqrProblem",
    "RiccatiSolution",
    "TailErrorReport",
    "analytic_P",
    "cost_J",
    "optimal_control_fh",
    "riccati_tail_error",
    "solve_are_hamiltonian",
    "solve_riccati_fh",
    "GridMismatchError",
    "Signal",
    "TimeGrid",
    "as_signature",
    "inner_product",
    "norm",
    "read_csv",
    "time_reverse",
    "write_csv",
    "SolveResult",
    "SolverConfig",
    "SolverDivergenceError",
    "iterate_once",
    "solve",
    "__version__",
]
