# app/services/metocean_service.py
"""
联合长期海况模型：H 为三参数 Weibull 边缘分布，T | H 为对数正态

f_{T,H}(t, h) = f_H(h) · f_{T|H}(t | h)

另外提供合成的二维正态模型，供几何与校验测试使用。
"""
from __future__ import annotations

import logging
from typing import Union

import numpy as np
from scipy import stats

from app.core import rng
from app.core.errors import (
    ConditionalModelError,
    DivergentDensityError,
    InputError,
    ParameterError,
    UsageError,
)
from app.models.sample_models import SampleSet
from app.schemas.metocean_schemas import (
    BivariateNormalModel,
    CondLognormalParams,
    JointMetoceanModel,
    Weibull3Params,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]
AnyModel = Union[JointMetoceanModel, BivariateNormalModel]


# ========= 预置模型（North West Australia，25 年重现期算例） =========
SWELL = JointMetoceanModel(
    name="swell",
    marginal=Weibull3Params(alpha=0.450, beta=1.580, gamma=0.132),
    conditional=CondLognormalParams(a1=0.010, a2=2.543, a3=0.032, b1=0.137, b2=0.000, b3=0.000),
)
WINDSEA = JointMetoceanModel(
    name="windsea",
    marginal=Weibull3Params(alpha=0.605, beta=0.867, gamma=0.322),
    conditional=CondLognormalParams(a1=0.000, a2=1.798, a3=0.134, b1=0.042, b2=0.224, b3=-0.500),
)
ISOTROPIC_NORMAL = BivariateNormalModel(name="isotropic-normal")

PRESETS: dict[str, AnyModel] = {
    "swell": SWELL,
    "windsea": WINDSEA,
    "isotropic-normal": ISOTROPIC_NORMAL,
}


def get_preset(name: str) -> AnyModel:
    key = name.strip().lower().replace("_", "-")
    if key == "wind-sea":
        key = "windsea"
    try:
        return PRESETS[key]
    except KeyError:
        raise UsageError(
            f"unknown model preset '{name}'",
            field="model",
            choices=sorted(PRESETS),
        ) from None


def resolve_model(model: Union[str, AnyModel]) -> AnyModel:
    """预置名或内联参数文档"""
    if isinstance(model, str):
        return get_preset(model)
    if isinstance(model, (JointMetoceanModel, BivariateNormalModel)):
        return model
    raise UsageError(f"unsupported model specification {model!r}", field="model")


# ========= Weibull 边缘分布 =========
def _check_weibull(p: Weibull3Params) -> None:
    # model_construct 会绕过 pydantic 校验，这里再兜一次
    if not p.alpha > 0 or not p.beta > 0:
        raise ParameterError(
            f"invalid Weibull parameters: alpha={p.alpha}, beta={p.beta}",
            alpha=p.alpha,
            beta=p.beta,
        )


def _scalar_or_array(x: np.ndarray, scalar: bool) -> ArrayLike:
    return float(x) if scalar else x


def weibull3_pdf(h: ArrayLike, p: Weibull3Params) -> ArrayLike:
    _check_weibull(p)
    scalar = np.ndim(h) == 0
    hh = np.atleast_1d(np.asarray(h, dtype=float))

    at_left = hh == p.gamma
    if p.beta < 1 and np.any(at_left):
        raise DivergentDensityError(
            f"Weibull density diverges at h = gamma = {p.gamma} for beta = {p.beta} < 1",
            gamma=p.gamma,
            beta=p.beta,
        )

    out = np.zeros_like(hh)
    inside = hh > p.gamma
    x = (hh[inside] - p.gamma) / p.alpha
    out[inside] = (p.beta / p.alpha) * x ** (p.beta - 1.0) * np.exp(-(x ** p.beta))
    if p.beta == 1.0:
        # (h−γ)^0 = 1：左端点密度为 1/α
        out[at_left] = 1.0 / p.alpha
    return _scalar_or_array(out[0] if scalar else out, scalar)


def weibull3_cdf(h: ArrayLike, p: Weibull3Params) -> ArrayLike:
    _check_weibull(p)
    scalar = np.ndim(h) == 0
    hh = np.atleast_1d(np.asarray(h, dtype=float))
    x = np.clip((hh - p.gamma) / p.alpha, 0.0, None)
    out = -np.expm1(-(x ** p.beta))
    return _scalar_or_array(out[0] if scalar else out, scalar)


def weibull3_quantile(u: ArrayLike, p: Weibull3Params) -> ArrayLike:
    """逆 CDF：γ + α·(−ln(1−U))^(1/β)"""
    _check_weibull(p)
    scalar = np.ndim(u) == 0
    uu = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any((uu < 0) | (uu >= 1)):
        raise InputError("Weibull quantile level must lie in [0, 1)")
    out = p.gamma + p.alpha * (-np.log1p(-uu)) ** (1.0 / p.beta)
    return _scalar_or_array(out[0] if scalar else out, scalar)


def weibull3_sample(p: Weibull3Params, n: int, stream: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise InputError(f"sample count must be at least 1, got {n}")
    # Generator.random 取值 [0, 1)，U = 0 映射到左端点 γ
    return weibull3_quantile(stream.random(n), p)


# ========= 条件对数正态 =========
def cond_lognormal_moments(h: ArrayLike, p: CondLognormalParams) -> tuple[ArrayLike, ArrayLike]:
    scalar = np.ndim(h) == 0
    hh = np.atleast_1d(np.asarray(h, dtype=float))
    if np.any(hh < 0):
        raise InputError("wave height must be non-negative for the conditional model")

    mu = p.a1 + p.a2 * np.power(hh, p.a3)
    sigma = p.b1 + p.b2 * np.exp(p.b3 * hh)

    bad = ~(sigma > 0)
    if np.any(bad):
        h_bad = float(hh[np.argmax(bad)])
        raise ConditionalModelError(
            f"log-standard deviation is not positive at h = {h_bad}",
            h=h_bad,
            sigma=float(sigma[np.argmax(bad)]),
        )

    if scalar:
        return float(mu[0]), float(sigma[0])
    return mu, sigma


def joint_pdf(t: ArrayLike, h: ArrayLike, m: JointMetoceanModel) -> ArrayLike:
    scalar = np.ndim(t) == 0 and np.ndim(h) == 0
    tt, hh = np.broadcast_arrays(
        np.atleast_1d(np.asarray(t, dtype=float)),
        np.atleast_1d(np.asarray(h, dtype=float)),
    )
    out = np.zeros(tt.shape)

    inside = (tt > 0) & (hh >= m.marginal.gamma)
    if np.any(inside):
        f_h = weibull3_pdf(hh[inside], m.marginal)
        mu, sigma = cond_lognormal_moments(hh[inside], m.conditional)
        # 标准对数正态密度，归一化因子里带 σ
        f_t = stats.lognorm.pdf(tt[inside], s=sigma, scale=np.exp(mu))
        out[inside] = f_h * f_t
    return _scalar_or_array(out.reshape(-1)[0] if scalar else out, scalar)


def joint_sample(m: JointMetoceanModel, n: int, seed: int) -> SampleSet:
    if n < 1:
        raise InputError(f"sample count must be at least 1, got {n}")

    h = weibull3_sample(m.marginal, n, rng.make_stream(seed, rng.STREAM_MARGINAL))
    mu, sigma = cond_lognormal_moments(h, m.conditional)
    z = rng.make_stream(seed, rng.STREAM_CONDITIONAL).standard_normal(n)
    t = np.exp(mu + sigma * z)

    rows = np.column_stack([t, h])
    rows.setflags(write=False)
    logger.debug("joint_sample model=%s n=%d seed=%d", m.name, n, seed)
    return SampleSet(rows=rows, seed=seed, model_id=m.name)


def bivariate_normal_sample(m: BivariateNormalModel, n: int, seed: int) -> SampleSet:
    if n < 1:
        raise InputError(f"sample count must be at least 1, got {n}")
    z = rng.make_stream(seed, rng.STREAM_SYNTHETIC).standard_normal((n, 2))
    x = m.mean_x + m.sd_x * z[:, 0]
    y = m.mean_y + m.sd_y * (m.rho * z[:, 0] + np.sqrt(1.0 - m.rho ** 2) * z[:, 1])
    rows = np.column_stack([x, y])
    rows.setflags(write=False)
    return SampleSet(rows=rows, seed=seed, model_id=m.name)


def sample_model(model: AnyModel, n: int, seed: int) -> SampleSet:
    if isinstance(model, JointMetoceanModel):
        return joint_sample(model, n, seed)
    if isinstance(model, BivariateNormalModel):
        return bivariate_normal_sample(model, n, seed)
    raise UsageError(f"unsupported model type {type(model).__name__}", field="model")
