"""Asymptotics of low-rank perturbations of large rectangular random matrices.

The package predicts where the extreme singular values of a noise-plus-spike
matrix land in the large-dimension limit, how strongly the associated
singular vectors align with the planted directions, and the Gaussian
fluctuations around those limits; and it validates each prediction against
its own Monte Carlo simulator.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConvergenceFailure,
    DimensionError,
    DomainError,
    InvalidSpec,
    InvariantViolation,
    NearSingularShift,
    NegativeVariance,
    NonConvergence,
    OutOfRange,
    RankDeficient,
    SchemaError,
    SpikedSVError,
    UnknownTheta,
)
from .measures import (  # noqa: F401
    SpectralMeasure,
    SupportBounds,
    atomic,
    density,
    empirical,
    integrate,
    marchenko_pastur,
    phi,
    phi_prime,
    point_mass,
    support_bounds,
    tilde,
    uniform,
)
from .transforms import (  # noqa: F401
    TransformContext,
    c_transform,
    d_at_b_plus,
    d_inverse,
    d_prime,
    d_transform,
    phi_at_a_minus_abs,
    phi_inverse_small,
    phi_prime_at_b_plus,
    phi_tilde,
    threshold_large,
    threshold_small,
    u_function,
)
from .prediction import (  # noqa: F401
    SpikePrediction,
    SpikeSpec,
    classify_edge,
    fluct_std_largest,
    fluct_std_smallest_square,
    predict_largest,
    predict_projections_largest,
    predict_projections_smallest_square,
    predict_smallest_square,
)
from .randmat import (  # noqa: F401
    GaussianRect,
    HaarSquare,
    MasterMatrix,
    MatrixFactory,
    Perturbation,
    empirical_concentration_check,
    factory_from_file,
    kernel_identity_residual,
    load_matrix,
    master_matrix,
    master_matrix_limit,
    projection_norms,
    sample_noise,
    sample_perturbation,
    save_matrix,
    svd_dense,
)
from .experiment import (  # noqa: F401
    Aggregate,
    CollectFlags,
    ExperimentConfig,
    TrialResult,
    run_experiment,
    run_trial,
)
