"""Multiplex network latent space estimation.

Each layer ``A_k`` of a multiplex network is modelled through a low-rank
natural parameter ``F + G_k``: a component ``F`` shared by all layers plus a
layer-specific component ``G_k``.  Both are estimated by nuclear-norm
penalized proximal gradient descent, optionally followed by an eigenvalue
refit that removes the shrinkage bias.
"""

__version__ = "0.1.0"

from .baseline import oracle_alternating, svt_impute
from .embed import ErrorMetrics, align_columns, ase, error_metrics, identifiability_check
from .exceptions import (
    BudgetExceeded,
    ConvergenceWarning,
    CvFailed,
    CvWarning,
    DegenerateDesign,
    HoldoutTooLarge,
    ImputationUnderdetermined,
    InvalidInput,
    IoError,
    MultinessError,
    MultinessWarning,
    NumericalFailure,
    ParseError,
    RefitWarning,
)
from .io import (
    read_decomposition,
    read_matrix,
    read_multiplex,
    write_decomposition,
    write_matrix,
    write_multiplex,
)
from .linalg import (
    EigenPair,
    eigen_truncated,
    hollow_frobenius,
    numerical_rank,
    psd_project,
    soft_threshold_svd,
    truncate_rank,
)
from .model import (
    BernoulliLogistic,
    EdgeFamily,
    GaussianIdentity,
    LatentDecomposition,
    MultiplexNetwork,
    Signature,
    block_gradient,
    expected_adjacency,
    get_family,
    masked_loss,
    similarity_matrix,
)
from .refit import fit_plus, refit_eigenvalues
from .simulate import SimTruth, gen_correlated, gen_gaussian, gen_logistic, hold_out
from .solver import FitReport, SolverConfig, fit, initialize_common, objective, pgd_step
from .tuning import (
    DEFAULT_DELTA,
    TuningMethod,
    TuningSelection,
    adaptive_params,
    edge_cv,
    sigma_mad,
)
