"""Adaptive randomized compression of rank-structured matrices into HSS
form, with pluggable sketching operators and bound-verification tools."""

from .cluster_tree import (ClusterNode, ClusterTree, build_from_points,
                           build_uniform, topological_order)
from .dense_kernels import (interpolative_decomposition, project_out, qr,
                            row_interpolative_decomposition, svd)
from .hss_compress import (CompressOptions, HssMatrix, HssNode,
                           MaxSketchReached, NodeState, compress,
                           frobenius_stop, rank_deficiency_stop)
from .hss_ops import (HssStats, matvec, reconstruct_dense, relative_error,
                      stats)
from .matgen import (FileFormatError, MatrixSpec, covariance_matrix,
                     from_file, qchem_toeplitz, synthetic_hss, write_file)
from .sketching import (DenseAccessor, MatrixAccessor, SketchOperator,
                        append_columns, apply_right, apply_right_transposed,
                        dense_rows, fwht, jl_dimension_bound, new_operator)
from .verify import (BoundReport, CampaignConfig, frobenius_trial,
                     rangefinder_trial, run_campaign)

__version__ = "0.1.0"

__all__ = [
    "ClusterNode", "ClusterTree", "build_from_points", "build_uniform",
    "topological_order",
    "interpolative_decomposition", "project_out", "qr",
    "row_interpolative_decomposition", "svd",
    "CompressOptions", "HssMatrix", "HssNode", "MaxSketchReached",
    "NodeState", "compress", "frobenius_stop", "rank_deficiency_stop",
    "HssStats", "matvec", "reconstruct_dense", "relative_error", "stats",
    "FileFormatError", "MatrixSpec", "covariance_matrix", "from_file",
    "qchem_toeplitz", "synthetic_hss", "write_file",
    "DenseAccessor", "MatrixAccessor", "SketchOperator", "append_columns",
    "apply_right", "apply_right_transposed", "dense_rows", "fwht",
    "jl_dimension_bound", "new_operator",
    "BoundReport", "CampaignConfig", "frobenius_trial", "rangefinder_trial",
    "run_campaign",
    "__version__",
]
