"""Hyperspectral unmixing with a soft low-rank tensor prior on the abundances.

The package solves the linear mixing model per pixel under simplex
constraints and couples the pixels through a rank-constrained CPD fit of
the abundance tensor, alternating between the two until the joint
objective settles.  Synthetic-scene generation, evaluation metrics, file
formats, and a command-line front end round out the toolkit.
"""

from .cpd import CpdFactors, CpdOptions, cpd_als, khatri_rao, normalize_factors, reconstruct
from .datagen import (GroundTruth, PATTERNS, SceneSpec, add_noise, gen_abundances,
                      gen_endmembers, gen_scene, max_pairwise_cosine,
                      spatial_autocorr_lag1)
from .exceptions import (DimensionError, FileFormatError, GenerationError,
                         InsufficientDataError, NumericalError, ParameterError,
                         UltraUnmixError)
from .fcls import (check_endmembers, fcls_map, fcls_pixel,
                   regularized_fcls_map, regularized_fcls_pixel)
from .fileio import (read_cube, read_endmembers_csv, read_value_csv,
                     write_cube, write_endmembers_csv)
from .metrics import (MetricReport, WilcoxonResult, metric_report,
                      per_endmember_sre, reconstruction_rmse, sre,
                      wilcoxon_signed_rank_one_tailed)
from .tensor_ops import (as_tensor3, contract_mode3_ones, fold, frobenius_norm,
                         mode_k_product, multilinear_product, outer3, unfold)
from .ultra import (RunReport, UltraConfig, a_step, check_abundances,
                    evaluate_cost, forward_model, q_step, ultra)

__version__ = "0.1.0"

__all__ = [
    "CpdFactors", "CpdOptions", "cpd_als", "khatri_rao", "normalize_factors",
    "reconstruct",
    "GroundTruth", "PATTERNS", "SceneSpec", "add_noise", "gen_abundances",
    "gen_endmembers", "gen_scene", "max_pairwise_cosine", "spatial_autocorr_lag1",
    "DimensionError", "FileFormatError", "GenerationError",
    "InsufficientDataError", "NumericalError", "ParameterError", "UltraUnmixError",
    "check_endmembers", "fcls_map", "fcls_pixel", "regularized_fcls_map",
    "regularized_fcls_pixel",
    "read_cube", "read_endmembers_csv", "read_value_csv", "write_cube",
    "write_endmembers_csv",
    "MetricReport", "WilcoxonResult", "metric_report", "per_endmember_sre",
    "reconstruction_rmse", "sre", "wilcoxon_signed_rank_one_tailed",
    "as_tensor3", "contract_mode3_ones", "fold", "frobenius_norm",
    "mode_k_product", "multilinear_product", "outer3", "unfold",
    "RunReport", "UltraConfig", "a_step", "check_abundances", "evaluate_cost",
    "forward_model", "q_step", "ultra",
    "__version__",
]
