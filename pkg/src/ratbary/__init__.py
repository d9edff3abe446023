"""Set-valued barycentric rational approximation toolkit.

Approximates a family of functions sampled on a shared grid by one
barycentric rational model with common supports, weights and poles. The
direct greedy method lives in `ratbary.aaa`; `ratbary.qr_aaa` compresses
the column set with a truncated pivoted QR first, and `ratbary.pqr`
distributes that over column partitions. `ratbary.problems` ships the
benchmark generators and `ratbary.cli` the command-line front end.
"""

from .aaa import AaaConfig, LoewnerState, loewner_assemble, residual_argmax, sv_aaa
from .barycentric import BarycentricModel, SampleGrid, node_polynomial_max
from .errors import (
    DegenerateInputError,
    ExhaustionError,
    FileFormatError,
    PoleHitError,
    RatbaryError,
)
from .fileio import (
    MatrixFile,
    ModelFile,
    read_matrix,
    read_model,
    write_matrix,
    write_model,
)
from .linalg import RrqrFactorization, min_right_singular_vector, norm_p_inf, rrqr
from .pqr import (
    AccumulationResult,
    ExtensionSet,
    PartitionPlan,
    PartitionResult,
    extension_set,
    linearized_error_bound,
    mock_chebyshev,
    pqr_aaa,
    zeta,
)
from .problems import (
    PROBLEM_NAMES,
    SplitFormProblem,
    gen_beam,
    gen_delay,
    gen_photonic,
    gen_scalar,
    gen_schrodinger,
    get_problem,
)
from .qr_aaa import ColumnScaling, QrAaaModel, qr_aaa, reconstruct, scale_columns

__version__ = "0.1.0"

__all__ = [
    "AaaConfig",
    "PROBLEM_NAMES",
    "AccumulationResult",
    "BarycentricModel",
    "ColumnScaling",
    "DegenerateInputError",
    "ExhaustionError",
    "ExtensionSet",
    "FileFormatError",
    "LoewnerState",
    "MatrixFile",
    "ModelFile",
    "PartitionPlan",
    "PartitionResult",
    "PoleHitError",
    "QrAaaModel",
    "RatbaryError",
    "RrqrFactorization",
    "SampleGrid",
    "SplitFormProblem",
    "extension_set",
    "gen_beam",
    "gen_delay",
    "gen_photonic",
    "gen_scalar",
    "gen_schrodinger",
    "get_problem",
    "linearized_error_bound",
    "loewner_assemble",
    "min_right_singular_vector",
    "mock_chebyshev",
    "node_polynomial_max",
    "norm_p_inf",
    "pqr_aaa",
    "qr_aaa",
    "read_matrix",
    "read_model",
    "reconstruct",
    "residual_argmax",
    "rrqr",
    "scale_columns",
    "sv_aaa",
    "write_matrix",
    "write_model",
    "zeta",
]
