"""Dense quasi-Newton Hessian-approximation toolkit.

Broyden-family updates (SR1, BFGS, DFP, and the tau-interpolated family)
with greedy and random direction selection, inverse and factor
maintenance, convergence measures and closed-form rate envelopes, test
objectives, and iteration drivers.  The ``qnbench`` command line wraps the
drivers into reproducible CSV-traced experiments.
"""

from .linalg import (
    CholFactor,
    EigsNotConverged,
    NotPD,
    SymMatrix,
    cholesky,
    extreme_eigs,
    inverse_spd,
    inv_sqrt_spd,
    psd_order_holds,
    random_spd,
    solve_spd,
)
from .measures import eta_trace_ratio, lambda_measure, sigma_measure, tau_measure
from .updates import (
    ApproxState,
    UpdateRule,
    bfgs_factor_update,
    bfgs_inverse_update,
    bfgs_update,
    broyden_inverse_update,
    broyden_update,
    correct,
    dfp_update,
    sr1_inverse_update,
    sr1_update,
)
from .directions import (
    DirectionStrategy,
    greedy_bfgs_dir,
    greedy_broyden_dir,
    greedy_sr1_dir,
    sample_gaussian,
    sample_sphere,
)
from .rng import RngState, rng_from_seed, split
from .objectives import (
    LogisticObjective,
    LogSumExpObjective,
    Objective,
    QuadraticObjective,
    SparseSample,
    initial_point_on_sphere,
    load_libsvm,
    make_logistic_synthetic,
    make_logsumexp_synthetic,
    parse_libsvm,
    samples_to_dense,
)
from .bounds import BoundEnvelope, bound_envelope, starting_moment
from .solvers import (
    InvariantViolation,
    IterationRecord,
    StopRule,
    agd_baseline,
    approx_matrix,
    newton_warm_start,
    solve_general,
    solve_quadratic,
)

__version__ = "0.1.0"

__all__ = [
    "ApproxState",
    "BoundEnvelope",
    "CholFactor",
    "DirectionStrategy",
    "EigsNotConverged",
    "InvariantViolation",
    "IterationRecord",
    "LogisticObjective",
    "LogSumExpObjective",
    "NotPD",
    "Objective",
    "QuadraticObjective",
    "RngState",
    "SparseSample",
    "StopRule",
    "SymMatrix",
    "UpdateRule",
    "agd_baseline",
    "approx_matrix",
    "bfgs_factor_update",
    "bfgs_inverse_update",
    "bfgs_update",
    "bound_envelope",
    "broyden_inverse_update",
    "broyden_update",
    "cholesky",
    "correct",
    "dfp_update",
    "eta_trace_ratio",
    "extreme_eigs",
    "greedy_bfgs_dir",
    "greedy_broyden_dir",
    "greedy_sr1_dir",
    "initial_point_on_sphere",
    "inv_sqrt_spd",
    "inverse_spd",
    "lambda_measure",
    "load_libsvm",
    "make_logistic_synthetic",
    "make_logsumexp_synthetic",
    "newton_warm_start",
    "parse_libsvm",
    "psd_order_holds",
    "random_spd",
    "rng_from_seed",
    "sample_gaussian",
    "sample_sphere",
    "samples_to_dense",
    "sigma_measure",
    "solve_general",
    "solve_quadratic",
    "solve_spd",
    "split",
    "sr1_inverse_update",
    "sr1_update",
    "starting_moment",
    "tau_measure",
]
