import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import integrate, special, stats

from app.core import rng
from app.core.errors import (
    ConditionalModelError,
    DivergentDensityError,
    InputError,
    ParameterError,
    UsageError,
)
from app.schemas.metocean_schemas import CondLognormalParams, JointMetoceanModel, Weibull3Params
from app.services.metocean_service import (
    ISOTROPIC_NORMAL,
    SWELL,
    WINDSEA,
    cond_lognormal_moments,
    get_preset,
    joint_pdf,
    resolve_model,
    sample_model,
    weibull3_cdf,
    weibull3_pdf,
    weibull3_quantile,
    weibull3_sample,
)

SW = SWELL.marginal


def _scipy_weibull(p: Weibull3Params):
    return stats.weibull_min(c=p.beta, loc=p.gamma, scale=p.alpha)


# ========= Weibull 边缘分布 =========
def test_pdf_below_support_is_zero():
    assert weibull3_pdf(0.0, SW) == 0.0


def test_pdf_at_left_endpoint_is_zero_when_beta_above_one():
    assert weibull3_pdf(SW.gamma, SW) == 0.0


def test_pdf_at_left_endpoint_diverges_when_beta_below_one():
    with pytest.raises(DivergentDensityError):
        weibull3_pdf(WINDSEA.marginal.gamma, WINDSEA.marginal)


def test_pdf_at_left_endpoint_exponential_case():
    p = Weibull3Params(alpha=2.0, beta=1.0, gamma=0.5)
    assert weibull3_pdf(0.5, p) == pytest.approx(0.5)


def test_pdf_matches_cdf_derivative_and_scipy():
    h, eps = 0.582, 1e-6
    fd = (weibull3_cdf(h + eps, SW) - weibull3_cdf(h - eps, SW)) / (2 * eps)
    value = weibull3_pdf(h, SW)
    assert value == pytest.approx(fd, rel=1e-6)
    assert value == pytest.approx(_scipy_weibull(SW).pdf(h), rel=1e-12)


def test_pdf_vectorised():
    h = np.array([0.0, SW.gamma, 0.5, 1.0, 2.5])
    out = weibull3_pdf(h, SW)
    assert out.shape == h.shape
    assert out[0] == 0.0 and out[1] == 0.0
    assert np.allclose(out[2:], _scipy_weibull(SW).pdf(h[2:]), rtol=1e-12)


def test_invalid_weibull_params():
    with pytest.raises(ValidationError):
        Weibull3Params(alpha=0.0, beta=1.0)
    bad = Weibull3Params.model_construct(alpha=-1.0, beta=1.0, gamma=0.0)
    with pytest.raises(ParameterError):
        weibull3_pdf(1.0, bad)


@pytest.mark.parametrize("p", [0.01, 0.5, 0.99])
def test_quantile_cdf_round_trip(p):
    for params in (SW, WINDSEA.marginal):
        assert weibull3_cdf(weibull3_quantile(p, params), params) == pytest.approx(p, abs=1e-12)


def test_quantile_examples():
    assert weibull3_quantile(1.0 - math.exp(-1.0), SW) == pytest.approx(SW.gamma + SW.alpha, rel=1e-12)
    assert weibull3_quantile(0.0, SW) == SW.gamma
    assert weibull3_quantile(1e-15, SW) == pytest.approx(SW.gamma, abs=1e-8)
    with pytest.raises(InputError):
        weibull3_quantile(1.0, SW)


def test_sample_mean_matches_analytic(swell_samples):
    g1 = special.gamma(1 + 1 / SW.beta)
    g2 = special.gamma(1 + 2 / SW.beta)
    mean = SW.gamma + SW.alpha * g1
    sd = SW.alpha * math.sqrt(g2 - g1 ** 2)
    se = sd / math.sqrt(swell_samples.n)
    assert abs(swell_samples.h.mean() - mean) <= 4 * se


def test_marginal_ks_in_most_seeds():
    dist = _scipy_weibull(SW)
    passes = 0
    for seed in range(1, 101):
        h = weibull3_sample(SW, 100_000, rng.make_stream(seed, rng.STREAM_MARGINAL))
        if stats.kstest(h, dist.cdf).pvalue >= 0.01:
            passes += 1
    assert passes >= 95


def test_sample_rejects_empty():
    with pytest.raises(InputError):
        weibull3_sample(SW, 0, rng.make_stream(1))


# ========= 条件对数正态 =========
def test_moments_swell_at_one_metre():
    mu, sigma = cond_lognormal_moments(1.0, SWELL.conditional)
    assert mu == pytest.approx(2.553, abs=1e-12)
    assert sigma == pytest.approx(0.137, abs=1e-12)


def test_moments_windsea_examples():
    mu, _ = cond_lognormal_moments(0.0, WINDSEA.conditional)
    assert mu == 0.0
    _, sigma = cond_lognormal_moments(2.0, WINDSEA.conditional)
    assert sigma == pytest.approx(0.042 + 0.224 * math.exp(-1.0), rel=1e-12)


def test_moments_errors():
    with pytest.raises(InputError):
        cond_lognormal_moments(-0.1, SWELL.conditional)
    bad = CondLognormalParams(a1=0.0, a2=1.0, a3=1.0, b1=-1.0, b2=0.0, b3=0.0)
    with pytest.raises(ConditionalModelError):
        cond_lognormal_moments(1.0, bad)


# ========= 联合模型 =========
def test_joint_sample_is_deterministic_and_readonly():
    a = sample_model(SWELL, 5_000, 7)
    b = sample_model(SWELL, 5_000, 7)
    c = sample_model(SWELL, 5_000, 8)
    assert np.array_equal(a.rows, b.rows)
    assert not np.array_equal(a.rows, c.rows)
    assert not a.rows.flags.writeable
    assert a.model_id == "swell" and a.seed == 7


def test_joint_sample_support(swell_samples, windsea_samples):
    for s, m in ((swell_samples, SWELL), (windsea_samples, WINDSEA)):
        assert np.all(s.h >= m.marginal.gamma)
        assert np.all(s.t > 0)


def test_joint_sample_marginal_cdf(swell_samples):
    p = weibull3_cdf(1.0, SW)
    est = np.count_nonzero(swell_samples.h <= 1.0) / swell_samples.n
    assert abs(est - p) <= 4 * math.sqrt(p * (1 - p) / swell_samples.n)


def test_joint_sample_conditional_log_mean(swell_samples):
    band = (swell_samples.h >= 0.9) & (swell_samples.h <= 1.1)
    log_t = np.log(swell_samples.t[band])
    mu, _ = cond_lognormal_moments(swell_samples.h[band], SWELL.conditional)
    assert log_t.mean() == pytest.approx(2.553, abs=0.01)
    assert abs(log_t.mean() - mu.mean()) <= 4 * 0.137 / math.sqrt(band.sum())


def test_joint_pdf_outside_support():
    assert joint_pdf(-1.0, 1.0, SWELL) == 0.0
    assert joint_pdf(10.0, 0.1, SWELL) == 0.0


def test_joint_pdf_integrates_to_one():
    total, _ = integrate.dblquad(
        lambda h, t: joint_pdf(t, h, SWELL), 0.0, 60.0, SW.gamma, SW.gamma + 8.0, epsabs=1e-9,
    )
    assert total == pytest.approx(1.0, abs=1e-4)


def test_joint_pdf_box_mass_matches_sampling(swell_samples):
    mass, _ = integrate.dblquad(lambda h, t: joint_pdf(t, h, SWELL), 8.0, 14.0, 0.5, 1.5, epsabs=1e-10)
    t, h = swell_samples.t, swell_samples.h
    est = np.count_nonzero((t >= 8.0) & (t <= 14.0) & (h >= 0.5) & (h <= 1.5)) / swell_samples.n
    assert abs(est - mass) <= 4 * math.sqrt(mass * (1 - mass) / swell_samples.n) + 1e-6


def test_isotropic_normal_moments(iso_samples):
    assert iso_samples.model_id == "isotropic-normal"
    assert abs(iso_samples.t.mean()) <= 4 / math.sqrt(iso_samples.n)
    assert iso_samples.h.std() == pytest.approx(1.0, abs=0.01)


# ========= 预置模型 =========
def test_presets_and_resolution():
    assert get_preset("swell") is SWELL
    assert get_preset("Wind_Sea") is WINDSEA
    assert get_preset("isotropic-normal") is ISOTROPIC_NORMAL
    assert resolve_model("windsea") is WINDSEA
    custom = JointMetoceanModel(name="site", marginal=SW, conditional=SWELL.conditional)
    assert resolve_model(custom) is custom
    with pytest.raises(UsageError):
        get_preset("north-sea")
