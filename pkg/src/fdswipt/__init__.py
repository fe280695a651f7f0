"""Full-duplex two-way SWIPT relay sum-rate optimization."""

from .joint import JointResult, SolverOptions, joint_optimize, relay_only_optimize
from .model import (
    ChannelSet,
    Infeasible,
    OperatingPoint,
    PerformanceReport,
    SystemParams,
    evaluate,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelSet",
    "Infeasible",
    "JointResult",
    "OperatingPoint",
    "PerformanceReport",
    "SolverOptions",
    "SystemParams",
    "evaluate",
    "joint_optimize",
    "relay_only_optimize",
    "__version__",
]
