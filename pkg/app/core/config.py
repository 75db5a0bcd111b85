# app/core/config.py
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
        populate_by_name=True,
    )

    # ==== 采样 / 方向网格 ====
    sample_size: int = Field(1_000_000, alias="CONTOUR_SAMPLES", gt=0)
    direction_count: int = Field(360, alias="CONTOUR_DIRECTIONS", ge=3)
    seed: int = Field(20190101, alias="CONTOUR_SEED", gt=0)

    # 尾部最少样本数：N·Pe 小于它时直接报错，而不是给出噪声
    min_tail_count: int = Field(20, alias="CONTOUR_MIN_TAIL", ge=1)

    # 方向估计的线程数（结果与线程数无关）
    workers: int = Field(4, alias="CONTOUR_WORKERS", ge=1)

    # 凸性判定容差，相对于 max|c_j|
    convexity_tol: float = Field(1e-3, alias="CONTOUR_CONVEXITY_TOL", ge=0)

    out_dir: str = Field("out", alias="CONTOUR_OUT_DIR")

    # ==== 独立仿真校验 ====
    verify_sample_size: int = Field(1_000_000, alias="VERIFY_SAMPLES", gt=0)
    sigma_level: float = Field(3.0, alias="VERIFY_SIGMA_LEVEL", gt=0)
    # 单调性检查用的 α 网格层数（0.1 ... 0.9）
    monotonicity_levels: int = Field(9, alias="MONOTONICITY_LEVELS", ge=1)

    log_level: str = Field("INFO", alias="LOG_LEVEL")


settings = Settings()
