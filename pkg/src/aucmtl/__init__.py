"""Multi-task AUC preference learning.

Per-user linear scoring models decomposed into a shared consensus vector, a
co-clustered group matrix, and column-sparse personal deviations, trained by
a line-searched proximal gradient method with a linear-time pairwise-AUC
loss/gradient evaluator.
"""

from .aucgraph import (LossGrad, SingleClassError, build_cache, gradient_fast,
                       gradient_naive, laplacian_dense, laplacian_spectral_norm,
                       loss_user_fast, loss_user_naive, total_loss)
from .core import (Dataset, FitReport, Hyperparams, IterRecord, ModelParams,
                   UserLossCache, UserTask, ValidationError, validate_dataset)
from .metrics import MacroAuc, UserAuc, auc_macro, auc_user
from .proxops import (SvdFactors, prox_group_columns, prox_ridge,
                      prox_truncated_sv, reg_value_truncated_sv)
from .simgen import SimConfig, SimResult, StructureReport, generate, structure_report
from .solver import (DiagnosticError, LineSearchError, convergence_diagnostics,
                     fit, line_search, lipschitz_bound, proximal_step,
                     surrogate_bound_holds)

__version__ = "0.1.0"

__all__ = [
    "Dataset", "UserTask", "ModelParams", "Hyperparams", "UserLossCache",
    "IterRecord", "FitReport", "ValidationError", "validate_dataset",
    "LossGrad", "SingleClassError", "build_cache", "loss_user_fast",
    "loss_user_naive", "gradient_fast", "gradient_naive", "total_loss",
    "laplacian_dense", "laplacian_spectral_norm",
    "SvdFactors", "prox_ridge", "prox_group_columns", "prox_truncated_sv",
    "reg_value_truncated_sv",
    "fit", "line_search", "proximal_step", "surrogate_bound_holds",
    "lipschitz_bound", "convergence_diagnostics", "LineSearchError",
    "DiagnosticError",
    "SimConfig", "SimResult", "generate", "StructureReport", "structure_report",
    "MacroAuc", "UserAuc", "auc_user", "auc_macro",
    "__version__",
]
