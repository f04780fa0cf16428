"""Partial traces, partial determinants and numerical checks of their inequalities."""

__version__ = "0.1.0"

from .block import (  # noqa: E402
    BlockMat,
    SelectionEmbedding,
    block_tensor_power,
    commutation_matrix,
    partial_det,
    partial_trace,
    realign,
    selection_embedding,
)
from .catalog import (  # noqa: E402
    CheckResult,
    check_choi,
    check_fiedler_markham,
    check_fischer,
    check_mean_bounds,
    check_partial_det_three,
    check_partial_det_three_common,
    check_proof_chain,
    check_superadd_partial_det,
    check_tensor_three,
    check_tensor_two_common,
    check_thompson,
    run_suite,
)
from .dense import compound, det, eig_hermitian, kron, loewner_margin, tensor_power  # noqa: E402
from .errors import (  # noqa: E402
    BadSpec,
    CapExceeded,
    DimMismatch,
    DimTooLarge,
    NoConvergence,
    NotHermitian,
    NotPSD,
    PartialMatError,
)
from .psd import GenSpec, generate, is_psd  # noqa: E402
from .report import Report  # noqa: E402
from .tolerance import DEFAULT_TOL, Tolerance  # noqa: E402

__all__ = [
    "BadSpec", "BlockMat", "CapExceeded", "CheckResult", "DEFAULT_TOL", "DimMismatch",
    "DimTooLarge", "GenSpec", "NoConvergence", "NotHermitian", "NotPSD", "PartialMatError",
    "Report", "SelectionEmbedding", "Tolerance", "block_tensor_power", "check_choi",
    "check_fiedler_markham", "check_fischer", "check_mean_bounds", "check_partial_det_three",
    "check_partial_det_three_common", "check_proof_chain", "check_superadd_partial_det",
    "check_tensor_three", "check_tensor_two_common", "check_thompson", "commutation_matrix",
    "compound", "det", "eig_hermitian", "generate", "is_psd", "kron", "loewner_margin",
    "partial_det", "partial_trace", "realign", "run_suite", "selection_embedding",
    "tensor_power",
]
