# app/schemas/risk_schemas.py
from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field, model_validator

HOURS_PER_YEAR = 365.25 * 24


class RiskReport(BaseModel):
    """单个性能函数样本的风险度量"""

    n: int = Field(..., ge=1)
    p_f: float = Field(..., ge=0, le=1)
    reliability: float = Field(..., ge=0, le=1)
    alpha: float = Field(..., ge=0, le=1)
    # p̄_f = 1 时没有分位点（整体均值已 ≥ 0）
    q_alpha: Optional[float] = None
    # 全部为负时没有使尾均值为 0 的 α
    superquantile_at_alpha: Optional[float] = None
    p_f_buffered: float = Field(..., ge=0, le=1)
    reliability_buffered: float = Field(..., ge=0, le=1)

    @model_validator(mode="after")
    def _conservative(self) -> "RiskReport":
        if self.p_f_buffered < self.p_f:
            raise ValueError("buffered failure probability below failure probability")
        return self


class ReturnPeriodSpec(BaseModel):
    return_period_years: float = Field(..., gt=0)
    states_per_hour: float = Field(1.0, gt=0)
    hours_per_year: float = Field(HOURS_PER_YEAR, gt=0)

    @classmethod
    def from_states_per_day(cls, return_period_years: float, states_per_day: float) -> "ReturnPeriodSpec":
        return cls(return_period_years=return_period_years, states_per_hour=states_per_day / 24.0)


class NormalOracle(BaseModel):
    """正态分布下 p̄_f 的解析解"""

    mu: float
    sigma: float
    z: float
    alpha: float
    q_alpha: float
    p_f: float
    p_f_buffered: float
