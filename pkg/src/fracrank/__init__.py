"""Low-rank matrix recovery with the fraction-function rank surrogate.

Submodules
----------
numerics   full SVD, rank truncation, norms
operators  measurement maps, masks and mask files
penalty    fraction penalty, singular value thresholding, DC subgradient
solver     RTrDC, SVT and SVP solvers
theory     numerical checks of the recovery theory
bench      PGM I/O, noise, inpainting instances and comparison tables
"""
from .numerics import SvdFactors, frobenius_norm, nuclear_norm, svd, truncate_rank
from .operators import (
    GeneralOperator,
    MaskOperator,
    adjoint_apply,
    apply,
    load_mask,
    operator_norm,
    sample_mask,
    save_mask,
)
from .penalty import beta_one, dc_subgradient, penalty_value, rho, soft_threshold_svt
from .solver import RtrdcConfig, SolverReport, rtrdc_solve, svp_solve, svt_solve

__version__ = "0.1.0"
