"""Hierarchically sparse signal recovery from hierarchically structured
measurements: block-sparse signal model, structured measurement operators,
the HiHTP solver, exact restricted-isometry constants on small instances,
and a Monte Carlo experiment harness."""

from .blocks import (
    BlockStructure,
    BlockVector,
    HiSparsity,
    HiSupport,
    block_norms,
    hi_threshold,
    is_hi_sparse,
    restrict,
)
from .ensembles import (
    gaussian_matrix,
    restrict_columns,
    spawn_seedseq,
    subsampled_dft,
)
from .errors import BudgetError, DimensionError
from .operators import (
    HierarchicalOperator,
    kronecker_operator,
    load_operator,
    save_operator,
)
from .riplab import (
    RipEstimate,
    column_necessity_check,
    gram_matrix,
    hirip_bound,
    hirip_constant_exact,
    lemma1_check,
    prop1_check,
    rip_constant_exact,
    rip_constant_randomized,
)
from .solvers import SolverConfig, SolverResult, hihtp, htp_flat, least_squares_on_support

__version__ = "0.1.0"

__all__ = [
    "BlockStructure",
    "BlockVector",
    "HiSparsity",
    "HiSupport",
    "HierarchicalOperator",
    "RipEstimate",
    "SolverConfig",
    "SolverResult",
    "BudgetError",
    "DimensionError",
    "block_norms",
    "column_necessity_check",
    "gaussian_matrix",
    "gram_matrix",
    "hi_threshold",
    "hihtp",
    "hirip_bound",
    "hirip_constant_exact",
    "htp_flat",
    "is_hi_sparse",
    "kronecker_operator",
    "least_squares_on_support",
    "lemma1_check",
    "load_operator",
    "prop1_check",
    "restrict",
    "restrict_columns",
    "rip_constant_exact",
    "rip_constant_randomized",
    "save_operator",
    "spawn_seedseq",
    "subsampled_dft",
]
