# app/services/verify_service.py
"""
独立仿真校验

- check_exceedence：新样本上 P(u_j'V > C_j) 是否等于 Pe
- check_gamma_buffered：Γ(u_j, V) = u_j'V − C̄_j 的缓冲失效概率是否等于 Pe
- check_dominated：被某个 Γ 支配的性能函数 p̄_f 不超过 Γ 的 p̄_f
- normal_cvar_oracle：正态分布下 p̄_f 的解析解（二分法）

校验种子必须与构造种子不同，否则结果会偏乐观。
"""
from __future__ import annotations

import asyncio
import logging
import math
from typing import Callable

import numpy as np
from scipy import optimize, stats

from app.core.config import settings
from app.core.errors import DegenerateTailError, DomainError, InputError
from app.models.contour_models import DirectionalSupport, DirectionGrid
from app.models.sample_models import SampleSet, ScalarSample
from app.schemas.risk_schemas import NormalOracle
from app.schemas.verify_schemas import DirectionCheck, DominanceReport, VerificationReport
from app.services.contour_service import _projection, _tail_split
from app.services.metocean_service import AnyModel, sample_model
from app.services.risk_service import (
    buffered_failure_probability,
    buffered_std_error,
    failure_probability,
    superquantile,
)

logger = logging.getLogger(__name__)

PerformanceFunction = Callable[[np.ndarray], np.ndarray]


def gamma_sample(samples: SampleSet, u, cbar: float) -> ScalarSample:
    """Γ(u, V_r) = u'V_r − C̄(u)，升序"""
    u = np.asarray(u, dtype=float)
    return ScalarSample(np.sort(_projection(samples.rows, u) - cbar))


# ========= 单方向计算（线程里跑） =========
def _exceedence_chunk(rows, vectors, C, indices):
    n = rows.shape[0]
    est = np.empty(indices.size)
    for i, j in enumerate(indices):
        est[i] = np.count_nonzero(_projection(rows, vectors[j]) > C[j]) / n
    return indices, est


def _gamma_chunk(rows, vectors, Cbar, indices):
    est = np.empty(indices.size)
    se = np.empty(indices.size)
    for i, j in enumerate(indices):
        s = ScalarSample(np.sort(_projection(rows, vectors[j]) - Cbar[j]))
        report = buffered_failure_probability(s)
        est[i] = report.p_f_buffered
        se[i] = buffered_std_error(s, report)
    return indices, est, se


def _seed_warnings(model: AnyModel, support: DirectionalSupport, seed: int) -> list[str]:
    warnings: list[str] = []
    if seed == support.seed:
        msg = f"verification seed {seed} equals construction seed; calibration will look optimistic"
        logger.warning(msg)
        warnings.append(msg)
    if model.name != support.model_id:
        msg = f"verifying model '{model.name}' against a support built from '{support.model_id}'"
        logger.warning(msg)
        warnings.append(msg)
    return warnings


def _assemble(
    check: str,
    model: AnyModel,
    support: DirectionalSupport,
    grid: DirectionGrid,
    pe: float,
    n_verify: int,
    seed: int,
    sigma_level: float,
    se_method: str,
    thresholds: np.ndarray,
    estimates: np.ndarray,
    std_errors: np.ndarray,
    warnings: list[str],
) -> VerificationReport:
    z = (estimates - pe) / std_errors
    passed = np.abs(z) <= sigma_level
    directions = [
        DirectionCheck(
            index=j,
            theta=float(grid.angles[j]),
            threshold=float(thresholds[j]),
            estimate=float(estimates[j]),
            std_error=float(std_errors[j]),
            z_score=float(z[j]),
            passed=bool(passed[j]),
        )
        for j in range(grid.m)
    ]
    failing = [int(j) for j in np.flatnonzero(~passed)]
    if failing:
        logger.info("%s check: %d of %d directions outside %.1f sigma", check, len(failing), grid.m, sigma_level)
    return VerificationReport(
        check=check,
        model_id=model.name,
        pe=pe,
        n_construct=support.n_samples,
        n_verify=n_verify,
        construction_seed=support.seed,
        verify_seed=seed,
        sigma_level=sigma_level,
        se_method=se_method,
        directions=directions,
        max_estimate=float(np.max(estimates)),
        failing_directions=failing,
        passed=not failing,
        warnings=warnings,
    )


def _exceedence_se(pe: float, n_verify: int, n_construct: int) -> float:
    # 构造样本本身的分位数误差也算进去
    return math.sqrt(pe * (1.0 - pe) * (1.0 / n_verify + 1.0 / n_construct))


def _gamma_se(raw: np.ndarray, n_verify: int, n_construct: int) -> np.ndarray:
    # C̄_j 来自 N 个构造样本，方差按 1/n 比例叠加
    return raw * math.sqrt(1.0 + n_verify / n_construct)


def check_exceedence(
    model: AnyModel,
    support: DirectionalSupport,
    grid: DirectionGrid,
    pe: float | None = None,
    n_verify: int | None = None,
    seed: int = 1,
    sigma_level: float | None = None,
) -> VerificationReport:
    pe = support.pe if pe is None else pe
    n_verify = n_verify or settings.verify_sample_size
    sigma_level = sigma_level or settings.sigma_level
    warnings = _seed_warnings(model, support, seed)

    fresh = sample_model(model, n_verify, seed)
    _, est = _exceedence_chunk(fresh.rows, grid.vectors, support.C, np.arange(grid.m))
    se = np.full(grid.m, _exceedence_se(pe, n_verify, support.n_samples))
    return _assemble(
        "exceedence", model, support, grid, pe, n_verify, seed, sigma_level,
        "binomial", support.C, est, se, warnings,
    )


def check_gamma_buffered(
    model: AnyModel,
    support: DirectionalSupport,
    grid: DirectionGrid,
    pe: float | None = None,
    n_verify: int | None = None,
    seed: int = 1,
    sigma_level: float | None = None,
    min_tail_count: int | None = None,
) -> VerificationReport:
    pe = support.pe if pe is None else pe
    n_verify = n_verify or settings.verify_sample_size
    sigma_level = sigma_level or settings.sigma_level
    _tail_split(n_verify, pe, settings.min_tail_count if min_tail_count is None else min_tail_count)
    warnings = _seed_warnings(model, support, seed)

    fresh = sample_model(model, n_verify, seed)
    _, est, raw_se = _gamma_chunk(fresh.rows, grid.vectors, support.Cbar, np.arange(grid.m))
    return _assemble(
        "gamma_buffered", model, support, grid, pe, n_verify, seed, sigma_level,
        "delta", support.Cbar, est, _gamma_se(raw_se, n_verify, support.n_samples), warnings,
    )


def check_dominated(
    model: AnyModel,
    support: DirectionalSupport,
    grid: DirectionGrid,
    index: int,
    g: PerformanceFunction,
    n_verify: int | None = None,
    seed: int = 1,
    sigma_level: float | None = None,
) -> DominanceReport:
    """g(v) ≤ Γ(u_j, v) 时 p̄_f(g) ≤ p̄_f(Γ)，且 {g > 0} ⊆ {u_j'v > C̄_j}"""
    n_verify = n_verify or settings.verify_sample_size
    sigma_level = sigma_level or settings.sigma_level
    fresh = sample_model(model, n_verify, seed)

    y = _projection(fresh.rows, grid.vectors[index])
    cbar = float(support.Cbar[index])
    gamma_vals = y - cbar
    g_vals = np.asarray(g(fresh.rows), dtype=float).reshape(-1)
    if g_vals.shape != gamma_vals.shape:
        raise InputError(
            f"performance function returned {g_vals.size} values for {n_verify} draws",
            n_verify=n_verify,
        )

    dominated = bool(np.all(g_vals <= gamma_vals))
    s_gamma = ScalarSample.from_values(gamma_vals)
    s_g = ScalarSample.from_values(g_vals)
    report_gamma = buffered_failure_probability(s_gamma)
    report_g = buffered_failure_probability(s_g)
    se = _gamma_se(np.array([buffered_std_error(s_gamma, report_gamma)]), n_verify, support.n_samples)[0]

    contained = bool(np.all(y[g_vals > 0] > cbar))
    passed = dominated and contained and report_g.p_f_buffered <= report_gamma.p_f_buffered + sigma_level * se
    return DominanceReport(
        index=index,
        theta=float(grid.angles[index]),
        n_verify=n_verify,
        verify_seed=seed,
        dominated=dominated,
        p_f=report_g.p_f,
        p_f_buffered=report_g.p_f_buffered,
        p_f_buffered_gamma=report_gamma.p_f_buffered,
        std_error=float(se),
        failure_region_contained=contained,
        passed=passed,
    )


def check_monotonicity(values_1, values_2, levels: int | None = None) -> bool:
    """
    values_1[i] ≤ values_2[i] 逐点配对（排序前）时：
    超分位数在 α 网格上有序，且 p̄_f 有序
    """
    v1 = np.asarray(values_1, dtype=float).reshape(-1)
    v2 = np.asarray(values_2, dtype=float).reshape(-1)
    if v1.shape != v2.shape or v1.size == 0:
        raise InputError("paired samples must be nonempty and of equal length")
    bad = np.flatnonzero(v1 > v2)
    if bad.size:
        raise InputError(
            f"pairing violated at index {int(bad[0])}: {v1[bad[0]]} > {v2[bad[0]]}",
            index=int(bad[0]),
        )

    s1 = ScalarSample.from_values(v1)
    s2 = ScalarSample.from_values(v2)
    levels = levels or settings.monotonicity_levels
    for alpha in np.linspace(0.1, 0.9, levels):
        try:
            q1 = superquantile(s1, float(alpha))
            q2 = superquantile(s2, float(alpha))
        except DegenerateTailError:
            logger.debug("skip alpha=%.3f: degenerate tail", alpha)
            continue
        if q1 > q2 + 1e-12 * max(1.0, abs(q2)):
            logger.info("superquantile order violated at alpha=%.3f: %r > %r", alpha, q1, q2)
            return False

    p1 = buffered_failure_probability(s1).p_f_buffered
    p2 = buffered_failure_probability(s2).p_f_buffered
    if p1 > p2:
        logger.info("buffered probability order violated: %r > %r", p1, p2)
        return False
    return True


# ========= 正态解析解 =========
def _normal_hazard(z: float) -> float:
    # φ(z)/(1 − Φ(z))，在对数域里算，z 很大时不溢出
    return math.exp(stats.norm.logpdf(z) - stats.norm.logsf(z))


def normal_cvar_oracle(mu: float, sigma: float) -> NormalOracle:
    """
    g ~ N(mu, sigma²) 时解 φ(z)/(1 − Φ(z)) = −mu/sigma：
    α = Φ(z)，q_α = mu + sigma·z，p̄_f = 1 − α
    """
    if not mu < 0:
        raise DomainError(f"mean must be negative for a root with 0 < alpha < 1, got {mu}", mu=mu)
    if not sigma > 0:
        raise DomainError(f"standard deviation must be positive, got {sigma}", sigma=sigma)

    ratio = -mu / sigma

    def f(z: float) -> float:
        return _normal_hazard(z) - ratio

    lo, hi = -1.0, 1.0
    while f(lo) > 0:
        lo *= 2.0
    while f(hi) < 0:
        hi *= 2.0
    z = optimize.bisect(f, lo, hi, xtol=1e-10, maxiter=500)

    return NormalOracle(
        mu=mu,
        sigma=sigma,
        z=z,
        alpha=float(stats.norm.cdf(z)),
        q_alpha=mu + sigma * z,
        p_f=float(stats.norm.sf(-mu / sigma)),
        p_f_buffered=float(stats.norm.sf(z)),
    )


class VerifyService:
    """方向校验的并行版本（异步），结果与 workers 无关"""

    def __init__(self, *, workers: int | None = None, sigma_level: float | None = None) -> None:
        self.workers = workers or settings.workers
        self.sigma_level = sigma_level or settings.sigma_level

    def _chunks(self, m: int) -> list[np.ndarray]:
        return [idx for idx in np.array_split(np.arange(m), self.workers) if idx.size]

    async def check_exceedence(
        self,
        model: AnyModel,
        support: DirectionalSupport,
        grid: DirectionGrid,
        n_verify: int,
        seed: int,
    ) -> VerificationReport:
        warnings = _seed_warnings(model, support, seed)
        fresh = await asyncio.to_thread(sample_model, model, n_verify, seed)
        results = await asyncio.gather(*(
            asyncio.to_thread(_exceedence_chunk, fresh.rows, grid.vectors, support.C, idx)
            for idx in self._chunks(grid.m)
        ))
        est = np.empty(grid.m)
        for idx, part in results:
            est[idx] = part
        se = np.full(grid.m, _exceedence_se(support.pe, n_verify, support.n_samples))
        return _assemble(
            "exceedence", model, support, grid, support.pe, n_verify, seed, self.sigma_level,
            "binomial", support.C, est, se, warnings,
        )

    async def check_gamma_buffered(
        self,
        model: AnyModel,
        support: DirectionalSupport,
        grid: DirectionGrid,
        n_verify: int,
        seed: int,
    ) -> VerificationReport:
        _tail_split(n_verify, support.pe, support.min_tail_count)
        warnings = _seed_warnings(model, support, seed)
        fresh = await asyncio.to_thread(sample_model, model, n_verify, seed)
        results = await asyncio.gather(*(
            asyncio.to_thread(_gamma_chunk, fresh.rows, grid.vectors, support.Cbar, idx)
            for idx in self._chunks(grid.m)
        ))
        est = np.empty(grid.m)
        raw_se = np.empty(grid.m)
        for idx, part, part_se in results:
            est[idx] = part
            raw_se[idx] = part_se
        return _assemble(
            "gamma_buffered", model, support, grid, support.pe, n_verify, seed, self.sigma_level,
            "delta", support.Cbar, est, _gamma_se(raw_se, n_verify, support.n_samples), warnings,
        )
