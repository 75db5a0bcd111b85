# app/tests/conftest.py
from __future__ import annotations

import os

import pytest

from app.core.logging import setup_logging
from app.models.contour_models import DirectionGrid
from app.services.contour_service import build_support
from app.services.metocean_service import ISOTROPIC_NORMAL, SWELL, WINDSEA, sample_model

# 构造样本的种子；校验时一律用别的种子
SWELL_SEED = 11
WINDSEA_SEED = 12
ISO_SEED = 13
N_DESK = 1_000_000


def pytest_collection_modifyitems(config, items):
    """long 标记的用例默认跳过，CONTOUR_LONG=1 时才跑"""
    if os.getenv("CONTOUR_LONG") == "1":
        return
    skip_long = pytest.mark.skip(reason="long run, set CONTOUR_LONG=1")
    for item in items:
        if "long" in item.keywords:
            item.add_marker(skip_long)


@pytest.fixture(scope="session", autouse=True)
def _logging():
    # 会话开始时挂好 handler，之后 main() 不会再加
    setup_logging("INFO")


@pytest.fixture(scope="session")
def swell_samples():
    return sample_model(SWELL, N_DESK, SWELL_SEED)


@pytest.fixture(scope="session")
def windsea_samples():
    return sample_model(WINDSEA, N_DESK, WINDSEA_SEED)


@pytest.fixture(scope="session")
def iso_samples():
    return sample_model(ISOTROPIC_NORMAL, N_DESK, ISO_SEED)


@pytest.fixture(scope="session")
def grid8():
    return DirectionGrid.uniform(8)


@pytest.fixture(scope="session")
def grid360():
    return DirectionGrid.uniform(360)


@pytest.fixture(scope="session")
def swell_support_8(swell_samples, grid8):
    """swell，Pe = 0.01，8 个方向"""
    return build_support(swell_samples, grid8, 0.01)


@pytest.fixture(scope="session")
def iso_support_360(iso_samples, grid360):
    """各向同性正态，Pe = 0.1，360 个方向"""
    return build_support(iso_samples, grid360, 0.1)
