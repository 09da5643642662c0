"""Kernel SVM with region-dependent misclassification costs from domain rules."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigurationError,
    ConvergenceError,
    DataError,
    DegenerateTask,
    KisvmError,
)
from .kernel_qp import KernelParams, QpProblem, gram_matrix, kkt_report, rbf, solve_dual  # noqa: E402
from .knowledge import FURNACE_A, FURNACE_B, KnowledgeRule, RegionTag, SiliconBands  # noqa: E402
from .wsvm import PenaltyScheme, TrainedModel, decision_function, predict, train  # noqa: E402
