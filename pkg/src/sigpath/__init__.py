"""Learning paths from third-order signature tensors."""

from .identifiability import (
    BoundsReport,
    finite_stabilizer_certificate,
    is_symmetrically_concise,
    jacobian_j1,
    jacobian_j1_exact,
    kappa_bounds,
    kappa_xc_upper,
    nonconcise_witness,
)
from .recovery import RecoveryConfig, RecoveryReport, experiment_grid, minimize
from .shortest_path import ContinuationConfig, ShortestResult, export_path, path_length, shortest
from .signatures import (
    LieData,
    LoopPathError,
    SignatureTriple,
    core_axis,
    core_generic,
    core_mono,
    extract_lie,
    recover_lower,
    sig_of_matrix,
    sig_pl,
    universal_membership,
)
from .tensor3 import DimensionError, concat_flatten, congruence, flatten, frobenius

__version__ = "0.1.0"
