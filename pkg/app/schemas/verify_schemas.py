# app/schemas/verify_schemas.py
from __future__ import annotations

from typing import List, Literal

from pydantic import BaseModel, Field


class DirectionCheck(BaseModel):
    index: int
    theta: float
    threshold: float  # C_j（超越概率）或 C̄_j（Γ 检查）
    estimate: float = Field(..., ge=0, le=1)
    std_error: float = Field(..., ge=0)
    z_score: float
    passed: bool


class VerificationReport(BaseModel):
    check: Literal["exceedence", "gamma_buffered"]
    model_id: str
    pe: float
    n_construct: int
    n_verify: int
    construction_seed: int
    verify_seed: int
    sigma_level: float
    se_method: str
    directions: List[DirectionCheck]
    max_estimate: float
    failing_directions: List[int] = []
    passed: bool
    warnings: List[str] = []


class DominanceReport(BaseModel):
    """g ≤ Γ(u_j, ·) 时的支配校验结果"""

    index: int
    theta: float
    n_verify: int
    verify_seed: int
    dominated: bool
    p_f: float
    p_f_buffered: float
    p_f_buffered_gamma: float
    std_error: float
    failure_region_contained: bool
    passed: bool
