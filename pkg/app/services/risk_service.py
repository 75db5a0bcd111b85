# app/services/risk_service.py
"""
标量样本上的经验风险度量

约定：
- 分位数取第 k = ceil(prob·n) 个次序统计量，不插值
- 失效为 g > 0（严格大于），超分位数同样只取严格大于分位数的部分
- p̄_f 通过后缀尾均值 m(k) 的第一个非负位置精确求得，O(n)
"""
from __future__ import annotations

import math

import numpy as np

from app.core.errors import DegenerateTailError, InputError
from app.models.sample_models import ScalarSample
from app.schemas.risk_schemas import HOURS_PER_YEAR, ReturnPeriodSpec, RiskReport


def _require_nonempty(s: ScalarSample) -> None:
    if s.n < 1:
        raise InputError("sample is empty")


def _check_probability(prob: float, name: str = "prob") -> None:
    if not 0 < prob < 1:
        raise InputError(f"{name} must lie strictly between 0 and 1, got {prob}", field=name)


def order_index(prob: float, n: int) -> int:
    """1 起始的次序统计量下标 k = ceil(prob·n)，截断到 [1, n]"""
    # 先抹掉 prob·n 的浮点噪声，0.8·10 之类的乘积要落在整数上
    k = math.ceil(round(prob * n, 9))
    return min(max(k, 1), n)


def empirical_quantile(s: ScalarSample, prob: float) -> float:
    _require_nonempty(s)
    _check_probability(prob)
    return float(s.values[order_index(prob, s.n) - 1])


def superquantile(s: ScalarSample, alpha: float) -> float:
    q = empirical_quantile(s, alpha)
    tail = s.values[s.values > q]
    if tail.size == 0:
        raise DegenerateTailError(
            f"no sample values strictly above the {alpha}-quantile {q}",
            alpha=alpha,
            quantile=q,
        )
    return float(tail.mean())


def failure_probability(s: ScalarSample) -> float:
    _require_nonempty(s)
    return float(np.count_nonzero(s.values > 0)) / s.n


def reliability(p_f: float) -> float:
    return 1.0 - p_f


def suffix_means(s: ScalarSample) -> np.ndarray:
    """m(k) = mean(Y_(k+1..n))，k = 0…n−1；对升序样本单调不减"""
    _require_nonempty(s)
    y = s.values
    sums = np.cumsum(y[::-1])[::-1]
    counts = np.arange(s.n, 0, -1, dtype=float)
    return sums / counts


def buffered_failure_probability(s: ScalarSample) -> RiskReport:
    _require_nonempty(s)
    n = s.n
    p_f = failure_probability(s)
    means = suffix_means(s)

    crossing = np.flatnonzero(means >= 0)
    if crossing.size == 0:
        # max < 0：没有任何尾部能平衡到 0
        return RiskReport(
            n=n,
            p_f=p_f,
            reliability=reliability(p_f),
            alpha=1.0,
            q_alpha=float(s.values[-1]),
            superquantile_at_alpha=None,
            p_f_buffered=0.0,
            reliability_buffered=1.0,
        )

    k_star = int(crossing[0])
    p_bar = (n - k_star) / n
    return RiskReport(
        n=n,
        p_f=p_f,
        reliability=reliability(p_f),
        alpha=k_star / n,
        q_alpha=float(s.values[k_star - 1]) if k_star >= 1 else None,
        superquantile_at_alpha=float(means[k_star]),
        p_f_buffered=p_bar,
        reliability_buffered=reliability(p_bar),
    )


def buffered_std_error(s: ScalarSample, report: RiskReport | None = None) -> float:
    """
    经验 p̄_f 的 delta-method 标准误差：

    se(p̄) ≈ se(尾均值) · p / (尾均值 − q)，
    se(尾均值)² ≈ [Var(尾) + (1 − p)(尾均值 − q)²] / (n·p)

    尾部不可用时退回二项分布标准误差；下限 1/n。
    """
    report = report or buffered_failure_probability(s)
    n = s.n
    p = report.p_f_buffered
    binomial = math.sqrt(p * (1.0 - p) / n)
    k_star = n - round(p * n)

    if report.q_alpha is None or not 0 < p < 1 or n - k_star < 2:
        return max(binomial, 1.0 / n)

    tail = s.values[k_star:]
    cvar = float(tail.mean())
    gap = cvar - report.q_alpha
    if gap <= 0:
        return max(binomial, 1.0 / n)

    var_cvar = (float(tail.var()) + (1.0 - p) * gap ** 2) / (n * p)
    return max(math.sqrt(var_cvar) * p / gap, 1.0 / n)


def risk_report(values) -> RiskReport:
    return buffered_failure_probability(ScalarSample.from_values(values))


# ========= 重现期 =========
def return_period_to_pe(spec: ReturnPeriodSpec) -> float:
    pe = 1.0 / (spec.return_period_years * spec.hours_per_year * spec.states_per_hour)
    if pe >= 1:
        raise InputError(
            "return period shorter than one sea state",
            return_period_years=spec.return_period_years,
            states_per_hour=spec.states_per_hour,
        )
    return pe


def return_period_years(p_f: float, states_per_hour: float = 1.0, hours_per_year: float = HOURS_PER_YEAR) -> float:
    """E[T] = 1/p_f 个海况，换算成年"""
    if not 0 < p_f <= 1:
        raise InputError(f"failure probability must lie in (0, 1], got {p_f}")
    return 1.0 / (p_f * states_per_hour * hours_per_year)
