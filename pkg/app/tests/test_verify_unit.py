import math

import numpy as np
import pytest
from scipy import stats

from app.core import rng
from app.core.errors import DomainError, InputError, InsufficientTailError
from app.models.contour_models import DirectionalSupport, DirectionGrid
from app.services.contour_service import project
from app.services.metocean_service import SWELL, sample_model
from app.services.verify_service import (
    VerifyService,
    check_dominated,
    check_exceedence,
    check_gamma_buffered,
    check_monotonicity,
    gamma_sample,
    normal_cvar_oracle,
)

VERIFY_SEED = 101


def _replace(support: DirectionalSupport, **changes) -> DirectionalSupport:
    fields = dict(
        C=support.C, Cbar=support.Cbar, tail_count=support.tail_count, pe=support.pe,
        n_samples=support.n_samples, seed=support.seed, model_id=support.model_id,
        min_tail_count=support.min_tail_count,
    )
    fields.update(changes)
    return DirectionalSupport(**fields)


# ========= Γ 样本 =========
def test_gamma_sample_is_shifted_projection():
    samples = sample_model(SWELL, 10_000, 2)
    u = (math.cos(0.3), math.sin(0.3))
    base = project(samples, u).values
    assert np.array_equal(gamma_sample(samples, u, 0.0).values, base)
    assert np.allclose(gamma_sample(samples, u, 1.5).values, base - 1.5, rtol=0, atol=1e-12)
    assert gamma_sample(samples, u, base[-1] + 0.1).values[-1] < 0
    assert gamma_sample(samples, u, base[-1] - 0.1).values[-1] >= 0


# ========= 超越概率校验 =========
def test_exceedence_calibration(swell_support_8, grid8):
    report = check_exceedence(SWELL, swell_support_8, grid8, n_verify=1_000_000, seed=VERIFY_SEED)
    assert report.check == "exceedence"
    assert report.se_method == "binomial"
    assert report.warnings == []
    se = math.sqrt(0.01 * 0.99 * (1 / 1_000_000 + 1 / swell_support_8.n_samples))
    for d in report.directions:
        assert d.std_error == pytest.approx(se)
        assert abs(d.z_score) <= 4
    assert report.max_estimate == max(d.estimate for d in report.directions)


def test_exceedence_infinite_thresholds(swell_support_8, grid8):
    high = _replace(swell_support_8, C=np.full(8, np.inf))
    low = _replace(swell_support_8, C=np.full(8, -np.inf))
    r_high = check_exceedence(SWELL, high, grid8, n_verify=10_000, seed=VERIFY_SEED)
    r_low = check_exceedence(SWELL, low, grid8, n_verify=10_000, seed=VERIFY_SEED)
    assert all(d.estimate == 0.0 for d in r_high.directions)
    assert all(d.estimate == 1.0 for d in r_low.directions)
    assert not r_high.passed and not r_low.passed


def test_same_seed_warns(swell_support_8, grid8, caplog):
    report = check_exceedence(SWELL, swell_support_8, grid8, n_verify=10_000, seed=swell_support_8.seed)
    assert any("equals construction seed" in w for w in report.warnings)
    assert "equals construction seed" in caplog.text


# ========= Γ 的缓冲失效概率 =========
def test_gamma_buffered_equals_pe(swell_support_8, grid8):
    report = check_gamma_buffered(SWELL, swell_support_8, grid8, n_verify=1_000_000, seed=VERIFY_SEED)
    assert report.check == "gamma_buffered"
    assert report.se_method == "delta"
    for d in report.directions:
        assert abs(d.z_score) <= 4
        assert d.estimate == pytest.approx(0.01, abs=0.002)


def test_gamma_buffered_with_doubled_offset(swell_support_8, grid8):
    doubled = _replace(swell_support_8, Cbar=2.0 * swell_support_8.Cbar)
    report = check_gamma_buffered(SWELL, doubled, grid8, n_verify=1_000_000, seed=VERIFY_SEED)
    positive = np.flatnonzero(swell_support_8.Cbar > 0)
    assert positive.size >= 3
    for j in positive:
        assert report.directions[j].estimate < 0.01


def test_gamma_buffered_needs_tail():
    sup = DirectionalSupport(
        C=np.zeros(4), Cbar=np.ones(4), tail_count=100, pe=0.01, n_samples=10_000,
        seed=1, model_id="swell", min_tail_count=20,
    )
    with pytest.raises(InsufficientTailError):
        check_gamma_buffered(SWELL, sup, DirectionGrid.uniform(4), n_verify=1000, seed=2)


# ========= 被 Γ 支配的性能函数 =========
def _dominated_by_gamma(u, cbar, shift):
    def g(rows):
        return rows[:, 0] * u[0] + rows[:, 1] * u[1] - cbar - shift
    return g


def test_dominated_function_has_smaller_buffered_probability(swell_support_8, grid8):
    j = 1
    u = grid8.vectors[j]
    g = _dominated_by_gamma(u, float(swell_support_8.Cbar[j]), 0.5)
    report = check_dominated(SWELL, swell_support_8, grid8, j, g, n_verify=200_000, seed=VERIFY_SEED)
    assert report.dominated
    assert report.failure_region_contained
    assert report.p_f_buffered <= report.p_f_buffered_gamma
    assert report.passed


def test_non_dominated_function_is_reported(swell_support_8, grid8):
    j = 0
    g = _dominated_by_gamma(grid8.vectors[j], float(swell_support_8.Cbar[j]), -0.5)
    report = check_dominated(SWELL, swell_support_8, grid8, j, g, n_verify=200_000, seed=VERIFY_SEED)
    assert not report.dominated
    assert not report.passed


def test_dominated_rejects_wrong_shape(swell_support_8, grid8):
    with pytest.raises(InputError):
        check_dominated(SWELL, swell_support_8, grid8, 0, lambda rows: rows[:10, 0], n_verify=1000, seed=3)


# ========= 单调性 =========
def test_monotonicity_random_pairs():
    for seed in range(1, 101):
        stream = rng.make_stream(seed, rng.STREAM_SYNTHETIC)
        base = stream.standard_normal(2_000) - 1.0
        noisy = base + np.abs(stream.standard_normal(2_000)) * stream.uniform(0.01, 1.0)
        assert check_monotonicity(base, noisy)


def test_monotonicity_trivial_pairs():
    v = rng.make_stream(9, rng.STREAM_SYNTHETIC).standard_normal(1_000)
    assert check_monotonicity(v, v + 1.0)
    assert check_monotonicity(v, v)


def test_monotonicity_pairing_violation():
    with pytest.raises(InputError) as e:
        check_monotonicity([0.0, 2.0], [1.0, 1.0])
    assert e.value.details["index"] == 1


# ========= 正态解析解 =========
def test_oracle_normal_example():
    o = normal_cvar_oracle(-2.5, 1.5)
    assert o.q_alpha == pytest.approx(-0.738, abs=2e-3)
    assert o.alpha == pytest.approx(0.880, abs=2e-3)
    assert o.p_f_buffered == pytest.approx(1.0 - o.alpha, abs=1e-12)
    assert o.p_f == pytest.approx(stats.norm.sf(2.5 / 1.5), rel=1e-12)
    hazard = stats.norm.pdf(o.z) / stats.norm.sf(o.z)
    assert hazard == pytest.approx(2.5 / 1.5, rel=1e-8)


def test_oracle_limits():
    assert normal_cvar_oracle(-1.0, 1e-3).p_f_buffered == pytest.approx(0.0, abs=1e-12)

    sigma = 1.3
    o = normal_cvar_oracle(-sigma * 2.0 * stats.norm.pdf(0.0), sigma)
    assert o.z == pytest.approx(0.0, abs=1e-8)
    assert o.alpha == pytest.approx(0.5, abs=1e-8)
    assert o.p_f_buffered == pytest.approx(0.5, abs=1e-8)


def test_oracle_domain():
    with pytest.raises(DomainError):
        normal_cvar_oracle(0.0, 1.0)
    with pytest.raises(DomainError):
        normal_cvar_oracle(-1.0, 0.0)


# ========= 并行 =========
@pytest.mark.asyncio
async def test_async_checks_match_serial(swell_support_8, grid8):
    service = VerifyService(workers=3)
    serial = check_exceedence(SWELL, swell_support_8, grid8, n_verify=200_000, seed=VERIFY_SEED)
    parallel = await service.check_exceedence(SWELL, swell_support_8, grid8, 200_000, VERIFY_SEED)
    assert [d.estimate for d in parallel.directions] == [d.estimate for d in serial.directions]

    serial_g = check_gamma_buffered(SWELL, swell_support_8, grid8, n_verify=200_000, seed=VERIFY_SEED)
    parallel_g = await service.check_gamma_buffered(SWELL, swell_support_8, grid8, 200_000, VERIFY_SEED)
    assert [d.estimate for d in parallel_g.directions] == [d.estimate for d in serial_g.directions]
    assert [d.std_error for d in parallel_g.directions] == [d.std_error for d in serial_g.directions]
