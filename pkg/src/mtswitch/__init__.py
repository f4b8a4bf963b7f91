"""Online learning with switching hypotheses across interleaved tasks."""
from ._backend import BACKEND
from .core import (
    ComparatorSequence,
    DegeneracyError,
    ParameterError,
    RegretLedger,
    TaskSchedule,
    count_switches_modes,
    route,
)
from .experts import ExpertParams, ExpertState, run_experts, theorem1_bound, tune_params

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ComparatorSequence",
    "DegeneracyError",
    "ExpertParams",
    "ExpertState",
    "ParameterError",
    "RegretLedger",
    "TaskSchedule",
    "count_switches_modes",
    "route",
    "run_experts",
    "theorem1_bound",
    "tune_params",
]
