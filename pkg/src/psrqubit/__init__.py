"""Parameter-shift gradient training of a single-qubit data re-uploading circuit."""

from .grad import (
    GradientReport,
    ShiftRuleConstants,
    fd_partial,
    figure1_discrepancy,
    psr_gradient,
    psr_partial_plain,
    psr_partial_scaled,
)
from .model import (
    EvalTag,
    ExecMode,
    Executor,
    ExecutorConfig,
    ReuploadingModel,
    build_circuit,
    estimate,
)
from .optim import Dataset, TrainConfig, TrainReport, mse_gradient, mse_loss, train_adam, train_cmaes

__version__ = "0.1.0"
