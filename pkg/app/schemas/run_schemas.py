# app/schemas/run_schemas.py
from __future__ import annotations

from datetime import datetime
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.metocean_schemas import EnvironmentalModel
from app.schemas.risk_schemas import NormalOracle, ReturnPeriodSpec, RiskReport
from app.schemas.verify_schemas import VerificationReport


class RunConfig(BaseModel):
    """
    一次等值线运行的完整配置（配置文件 / 命令行参数合并后的结果）
    - pe 与 return_period 必须二选一
    """
    model_config = ConfigDict(extra="forbid")

    model: Union[str, EnvironmentalModel] = "swell"
    pe: Optional[float] = Field(None, gt=0, lt=1)
    return_period: Optional[ReturnPeriodSpec] = None
    sample_size: int = Field(..., gt=0)
    direction_count: int = Field(..., ge=3)
    seed: int = Field(..., gt=0)
    buffered: bool = False
    scale_a: float = Field(1.0, gt=0)
    min_tail_count: int = Field(..., ge=1)
    workers: int = Field(1, ge=1)
    out_dir: str = "out"
    svg: bool = False
    verify_sample_size: Optional[int] = Field(None, gt=0)
    verify_seed: Optional[int] = Field(None, ge=0)

    @model_validator(mode="after")
    def _exactly_one_probability(self) -> "RunConfig":
        if (self.pe is None) == (self.return_period is None):
            raise ValueError("exactly one of pe or return_period must be given")
        return self


class RiskCalcConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    input: Optional[str] = None
    normal_mean: Optional[float] = None
    normal_sd: Optional[float] = Field(None, gt=0)
    sample_size: int = Field(1_000_000, gt=0)
    seed: int = Field(1, gt=0)
    out_dir: str = "out"

    @model_validator(mode="after")
    def _one_source(self) -> "RiskCalcConfig":
        synthetic = self.normal_mean is not None or self.normal_sd is not None
        if synthetic and (self.normal_mean is None or self.normal_sd is None):
            raise ValueError("synthetic input needs both normal_mean and normal_sd")
        if synthetic == (self.input is not None):
            raise ValueError("exactly one of input or normal_mean/normal_sd must be given")
        return self


class SampleConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: Union[str, EnvironmentalModel] = "swell"
    sample_size: int = Field(..., gt=0)
    seed: int = Field(..., gt=0)
    out_dir: str = "out"


# -------- 报告 --------
class SupportSummary(BaseModel):
    tail_count: int
    c_min: float
    c_max: float
    cbar_min: float
    cbar_max: float
    cbar_scaled_min: float
    cbar_scaled_max: float


class PolygonSummary(BaseModel):
    kind: str
    vertex_count: int
    valid: bool
    failing_vertices: List[int] = []


class ContainmentVerdict(BaseModel):
    """classical ⊆ buffered：经典多边形的每个顶点都满足所有缓冲半平面"""
    classical_inside_buffered: bool
    polygons_valid: bool


class ContourRunData(BaseModel):
    model_id: str
    pe: float
    n: int
    m: int
    seed: int
    scale_a: float
    support: SupportSummary
    classical: PolygonSummary
    buffered: Optional[PolygonSummary] = None
    containment: Optional[ContainmentVerdict] = None
    files: Dict[str, str] = {}


class RiskCalcData(BaseModel):
    source: str
    report: RiskReport
    p_f_buffered_std_error: float
    return_period_years: Optional[float] = None
    oracle: Optional[NormalOracle] = None


class VerifyRunData(BaseModel):
    contour: str
    passed: bool
    exceedence: VerificationReport
    gamma_buffered: VerificationReport
    files: Dict[str, str] = {}


class SampleRunData(BaseModel):
    model_id: str
    n: int
    seed: int
    files: Dict[str, str] = {}


class RunReport(BaseModel):
    success: bool = True
    message: str = ""
    runId: str
    timestamp: datetime
    config: Dict[str, Any] = {}
    data: Any = None
