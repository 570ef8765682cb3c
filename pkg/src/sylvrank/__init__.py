"""Learning low-order structured models from transfer-function data.

A structured model H(x) = C (sum_i alpha_i(x) A_i)^{-1} B is inferred from
samples by solving the Sylvester-type interpolation constraints for N x N
matrices A_i while penalizing the rank of their stacks with an iteratively
reweighted nuclear norm, then projecting onto the dominant subspaces.
"""

from .benchmarks import (
    GroundTruth,
    gen_delay_rod,
    gen_scalar_delay,
    gen_thermal_block,
    intrusive_oracle,
    sample_frequencies,
    sample_parameters,
)
from .compression import (
    CompressionReport,
    compress,
    compress_model,
    numerical_rank_rmin,
    realify,
    select_order,
    stacked_svds,
    uncompressed_model,
)
from .constraints import (
    ConstraintSystem,
    SampleSet,
    assemble_constraints,
    assemble_lambdas,
    denormalize,
    normalize,
    q2_consistency,
    residual_norm,
    residuals,
    symmetrize,
    with_default_directions,
)
from .errors import (
    ConjugatePairingError,
    DimensionError,
    DivergenceError,
    IncompatiblePointError,
    NonFiniteError,
    SingularPencilError,
    SylvrankError,
)
from .metrics import FitReport, evaluate_model, pointwise_errors
from .model import AlphaFunction, EvalPoint, StructuredModel, eval_alpha, eval_transfer, parse_alphas
from .optimizer import (
    NAdam,
    SolverConfig,
    SolveState,
    objective,
    objective_gradient,
    optimize,
    solve_rsmi,
    update_weights,
    weighted_nuclear_norm,
    wnn_gradient,
)

__version__ = "0.1.0"
