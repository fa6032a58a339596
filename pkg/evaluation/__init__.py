"""Agreement metrics and the parameter/FLOP efficiency model."""

from .metrics import EvalReport, rmse, plcc, srcc, density_grid, evaluate
from .efficiency_score import (
    CESConfig,
    CESReport,
    ResourceProfile,
    cost_C,
    efficiency_E,
    ces,
    ces_report,
)
from .flop_model import (
    ArchSpec,
    ParamCounts,
    FlopBreakdown,
    OperatingPoint,
    param_count,
    flop_estimate,
    visual_token_count,
    text_token_budget,
    operating_point_report,
    load_arch_spec,
)

__all__ = [
    "EvalReport",
    "rmse",
    "plcc",
    "srcc",
    "density_grid",
    "evaluate",
    "CESConfig",
    "CESReport",
    "ResourceProfile",
    "cost_C",
    "efficiency_E",
    "ces",
    "ces_report",
    "ArchSpec",
    "ParamCounts",
    "FlopBreakdown",
    "OperatingPoint",
    "param_count",
    "flop_estimate",
    "visual_token_count",
    "text_token_budget",
    "operating_point_report",
    "load_arch_spec",
]
