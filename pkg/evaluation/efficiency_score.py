"""Comprehensive efficiency score: correlation discounted by resource cost.

    C   = sqrt(params / p_tgt) * sqrt(flops / f_tgt)
    E   = min(1 + bonus_slope * ln(1/C), bonus_cap)      C <= 1
        = 1 / (1 + penalty_slope * ln C)                 C >  1
    CES = max(0, plcc) * E
"""

import math
from pathlib import Path
from typing import Union

from pydantic import BaseModel, Field, model_validator

from csv_utils import write_csv

CES_FIELDS = ["plcc", "params", "flops", "C", "E", "ces"]


class CESConfig(BaseModel):
    p_tgt: float = Field(default=1e9, gt=0)
    f_tgt: float = Field(default=2e10, gt=0)
    bonus_slope: float = Field(default=0.05, gt=0)
    bonus_cap: float = Field(default=1.10, ge=1)
    penalty_slope: float = Field(default=2.0, gt=0)


class ResourceProfile(BaseModel):
    params: float = Field(gt=0)
    flops: float = Field(gt=0)


class CESReport(BaseModel):
    plcc: float
    params: float
    flops: float
    C: float
    E: float
    ces: float

    @model_validator(mode="after")
    def _non_negative(self):
        if self.ces < 0:
            raise ValueError("ces must be non-negative")
        return self


def cost_C(profile: ResourceProfile, cfg: CESConfig = CESConfig()) -> float:
    """Geometric mean of parameters and FLOPs, each relative to its target."""
    return math.sqrt(profile.params / cfg.p_tgt) * math.sqrt(profile.flops / cfg.f_tgt)


def efficiency_bonus(cost: float, cfg: CESConfig = CESConfig()) -> float:
    return min(1.0 + cfg.bonus_slope * -math.log(cost), cfg.bonus_cap)


def efficiency_penalty(cost: float, cfg: CESConfig = CESConfig()) -> float:
    return 1.0 / (1.0 + cfg.penalty_slope * math.log(cost))


def efficiency_E(cost: float, cfg: CESConfig = CESConfig()) -> float:
    """Multiplier: capped bonus when C <= 1, log penalty above."""
    if not cost > 0:
        raise ValueError(f"resource cost must be positive, got {cost}")
    if cost <= 1.0:
        return efficiency_bonus(cost, cfg)
    return efficiency_penalty(cost, cfg)


def ces(plcc: float, profile: ResourceProfile, cfg: CESConfig = CESConfig()) -> float:
    """Efficiency-weighted PLCC; negative correlations score zero."""
    if not -1.0 <= plcc <= 1.0:
        raise ValueError(f"plcc must be in [-1, 1], got {plcc}")
    return max(0.0, plcc) * efficiency_E(cost_C(profile, cfg), cfg)


def ces_report(plcc: float, profile: ResourceProfile, cfg: CESConfig = CESConfig()) -> CESReport:
    """Compute C, E and CES for one model."""
    cost = cost_C(profile, cfg)
    return CESReport(
        plcc=plcc, params=profile.params, flops=profile.flops,
        C=cost, E=efficiency_E(cost, cfg), ces=ces(plcc, profile, cfg),
    )


def write_ces_report(report: CESReport, path: Union[str, Path], preamble: str = ""):
    """Write a single-row CES CSV."""
    write_csv(path, CES_FIELDS, [report.model_dump()], preamble=preamble)
