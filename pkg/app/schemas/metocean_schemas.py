# app/schemas/metocean_schemas.py
from __future__ import annotations

from typing import Literal, Union

from pydantic import BaseModel, ConfigDict, Field


class Weibull3Params(BaseModel):
    """三参数 Weibull：位置 γ (m)、尺度 α (m)、形状 β"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float = Field(..., gt=0, description="scale (m)")
    beta: float = Field(..., gt=0, description="shape")
    gamma: float = Field(0.0, description="location (m)")


class CondLognormalParams(BaseModel):
    """
    T | H = h 的对数正态参数：
    - μ(h) = a1 + a2·h^a3
    - σ(h) = b1 + b2·e^(b3·h)，σ > 0 在采样时检查
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    a1: float
    a2: float
    a3: float
    b1: float
    b2: float
    b3: float


class JointMetoceanModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["metocean"] = "metocean"
    name: str = "custom"
    marginal: Weibull3Params
    conditional: CondLognormalParams


class BivariateNormalModel(BaseModel):
    """合成测试用的二维正态模型（分量顺序与 (t, h) 一致）"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["bivariate_normal"] = "bivariate_normal"
    name: str = "bivariate-normal"
    mean_x: float = 0.0
    mean_y: float = 0.0
    sd_x: float = Field(1.0, gt=0)
    sd_y: float = Field(1.0, gt=0)
    rho: float = Field(0.0, gt=-1, lt=1)


# extra="forbid" 保证 dict 只能匹配其中一个模型
EnvironmentalModel = Union[JointMetoceanModel, BivariateNormalModel]
