"""Closed-form forecasting under shape and learning constraints."""

__version__ = "0.1.0"

from .constraints import (
    ConstraintSpec,
    PenaltyBlock,
    PenaltyMatrix,
    assemble_block_penalty,
    orthogonal_complement_projector,
    transfer_penalty,
)
from .data_model import Dataset, Scaling, SplitSpec, group_partition, read_csv, split
from .errors import ConfigError, DataError, NumericalError, SingularSystemError, WeaklError
from .evaluation import BootstrapConfig, block_bootstrap, metrics, skill_test, stationary_bootstrap
from .feature_maps import FeatureMapSpec, build_feature_matrix, eval_map
from .hierarchy import (
    Hierarchy,
    build_summation_matrix,
    fit_weakl_bu,
    fit_weakl_g,
    fit_weakl_t,
    reconcile,
    run_toy_benchmark,
)
from .shape_models import fit_additive, fit_combination, fit_online, rolling_refit
from .solver import FittedModel, WeaklProblem, empirical_risk, fit_weakl, predict
from .tuning import GridSpec, grid_search, refit_best
