"""
全规模运行：N = 2.2e7，25 年重现期，360 个方向；以及 100 次种子的超越概率校准

只在 CONTOUR_LONG=1 时执行。
"""
import logging

import numpy as np
import pytest

from app.models.contour_models import DirectionGrid
from app.schemas.risk_schemas import ReturnPeriodSpec
from app.schemas.run_schemas import RunConfig
from app.services.contour_service import ContourService, build_support, halfplane_violations
from app.services.metocean_service import SWELL, get_preset, sample_model
from app.services.risk_service import return_period_to_pe
from app.services.run_service import RunService
from app.services.verify_service import check_exceedence

pytestmark = pytest.mark.long

logger = logging.getLogger(__name__)

N_FULL = 22_000_000


@pytest.mark.asyncio
@pytest.mark.parametrize("model", ["swell", "windsea"])
async def test_twenty_five_year_contours(model):
    pe = return_period_to_pe(ReturnPeriodSpec(return_period_years=25))
    assert float(f"{pe:.5g}") == 4.5631e-6

    samples = sample_model(get_preset(model), N_FULL, 2019)
    grid = DirectionGrid.uniform(360)
    support, classical, buffered = await ContourService(workers=4).build_contours(samples, grid, pe, buffered=True)

    assert support.tail_count >= 100
    assert np.all(support.Cbar > support.C)
    # 缓冲多边形凸性由构造保证；经典多边形只记录非凸顶点数
    assert buffered.is_valid
    logger.info("%s: %d of 360 classical vertices flagged", model, len(classical.failing_vertices))
    viol = halfplane_violations(buffered.directions, buffered.offsets, classical.vertices)
    assert np.all(viol <= buffered.tolerance)


@pytest.mark.asyncio
async def test_full_pipeline_writes_svg(tmp_path):
    config = RunConfig(
        model="swell",
        return_period={"return_period_years": 25},
        sample_size=N_FULL,
        direction_count=360,
        seed=2019,
        buffered=True,
        min_tail_count=20,
        workers=4,
        out_dir=str(tmp_path),
        svg=True,
    )
    data = (await RunService().run_contour(config)).data
    assert data.buffered.valid
    assert data.containment.classical_inside_buffered
    assert (tmp_path / "contour.svg").exists()


def test_exceedence_calibration_over_seeds():
    grid = DirectionGrid.uniform(360)
    n, pe = 1_000_000, 0.01
    passes = 0
    for trial in range(100):
        seed = 5_000 + trial
        support = build_support(sample_model(SWELL, n, seed), grid, pe)
        report = check_exceedence(SWELL, support, grid, n_verify=n, seed=seed + 100_000, sigma_level=3.0)
        passes += report.passed
    logger.info("calibration: %d of 100 trials pass at 3 sigma", passes)
    assert passes >= 95
