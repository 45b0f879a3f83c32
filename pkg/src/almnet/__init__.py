"""Constrained training of feedforward networks.

The lifted formulation treats hidden activations as decision variables tied to
the weights by equality constraints.  An augmented Lagrangian outer loop drives
feasibility; each inner problem is minimized by Gauss-Newton steps whose
directions come from a forward dynamic-programming solve over the layer stages.
"""

from .alm import AlmConfig, AlmResult, alm_run, kkt_residuals
from .baseline import FirstOrderConfig, train_first_order
from .datagen import (
    TeacherConfig,
    gen_teacher_student,
    kaiming_init,
    load_dataset_csv,
    save_dataset_csv,
)
from .errors import (
    AlmnetError,
    ConfigError,
    LinesearchError,
    NumericError,
    OracleError,
    ShapeError,
)
from .fdp import FdpWorkspace, fdp_solve
from .gauss_newton import (
    aug_lagrangian,
    build_linearization,
    gn_run,
    grad_aug_lagrangian,
)
from .network import (
    Dataset,
    NetworkSpec,
    PrimalPoint,
    cost_f,
    mse,
    pack,
    residual_F,
    unpack,
    unroll,
)
from .oracles import dense_solve, dense_system, fd_gradient, rel_inf_error
from .stages import StageSystem

__version__ = "0.1.0"

__all__ = [
    "AlmConfig", "AlmResult", "alm_run", "kkt_residuals",
    "FirstOrderConfig", "train_first_order",
    "TeacherConfig", "gen_teacher_student", "kaiming_init",
    "load_dataset_csv", "save_dataset_csv",
    "AlmnetError", "ConfigError", "LinesearchError", "NumericError",
    "OracleError", "ShapeError",
    "FdpWorkspace", "fdp_solve",
    "aug_lagrangian", "build_linearization", "gn_run", "grad_aug_lagrangian",
    "Dataset", "NetworkSpec", "PrimalPoint", "cost_f", "mse",
    "pack", "residual_F", "unpack", "unroll",
    "dense_solve", "dense_system", "fd_gradient", "rel_inf_error",
    "StageSystem",
    "__version__",
]
