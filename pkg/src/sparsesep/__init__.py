"""Blind source separation by sparsity and morphological diversity.

Fixed-dictionary solvers (MCA, MMCA, GMCA, FastGMCA), adaptive dictionary
learning (K-SVD and SAC+BK-SVD inside MMCA), a FastICA baseline, and the
evaluation utilities that resolve the scale/permutation indeterminacy.
"""

from .adaptive import AdaptiveBssConfig, adaptive_separate, estimate_noise_sigma
from .core import SolverError, mad_sigma, normalize_columns, rng
from .dictlearn import (LearnState, bksvd_update, complexity_report, ksvd_update,
                        learn_dictionary, sac_cluster)
from .fastica import fastica
from .mca import (BssProblem, McaProblem, McaResult, SeparationResult, auto_schedule,
                  fast_gmca_separate, gmca_separate, mca_decompose, mmca_separate)
from .metrics import (AlignmentMap, MetricReport, align, correlation, evaluate,
                      mixing_criterion, mse, psnr)
from .mixing import MixtureSet, WhiteningTransform, center, mix, random_mixing_matrix, whiten
from .patches import PatchGrid, extract_patches, reassemble_patches
from .sparse_coding import (SparseCode, ThresholdSchedule, block_omp, block_sparse_code,
                            hard_threshold, omp, soft_threshold, sparse_code)
from .transforms import (BlockStructure, Dictionary, analyze, analyze2, dct_basis,
                         dwt_basis, overcomplete_dct, render_mosaic, synthesize,
                         synthesize2, union_basis)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveBssConfig", "AlignmentMap", "BlockStructure", "BssProblem", "Dictionary",
    "LearnState", "McaProblem", "McaResult", "MetricReport", "MixtureSet", "PatchGrid",
    "SeparationResult", "SolverError", "SparseCode", "ThresholdSchedule",
    "WhiteningTransform", "adaptive_separate", "align", "analyze", "analyze2",
    "auto_schedule", "bksvd_update", "block_omp", "block_sparse_code", "center",
    "complexity_report", "correlation", "dct_basis", "dwt_basis", "estimate_noise_sigma",
    "evaluate", "fast_gmca_separate", "fastica", "gmca_separate", "hard_threshold",
    "ksvd_update", "learn_dictionary", "mad_sigma", "mca_decompose", "mix",
    "mixing_criterion", "mmca_separate", "mse", "normalize_columns", "omp",
    "overcomplete_dct", "psnr", "random_mixing_matrix", "reassemble_patches",
    "render_mosaic", "rng", "sac_cluster", "soft_threshold", "sparse_code",
    "synthesize", "synthesize2", "union_basis", "whiten", "extract_patches",
]
