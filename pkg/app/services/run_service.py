# app/services/run_service.py
"""
命令行流水线：contour / riskcalc / verify / sample

每次运行带一个 runId，解析后的配置（含推导出的 Pe）写回报告。
"""
from __future__ import annotations

import asyncio
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from app.core import rng
from app.core.config import settings
from app.core.errors import DomainError, SchemaMismatchError, VerificationFailedError
from app.core.logging import log_stage, new_run_id
from app.models.contour_models import ContourPolygon, DirectionalSupport, DirectionGrid
from app.models.sample_models import ScalarSample
from app.repositories.contour_repo import (
    CONTOUR_CSV,
    CONTOUR_REPORT,
    CONTOUR_SVG,
    RISKCALC_REPORT,
    VERIFY_REPORT,
    ContourRepo,
)
from app.schemas.metocean_schemas import BivariateNormalModel
from app.schemas.run_schemas import (
    ContainmentVerdict,
    ContourRunData,
    PolygonSummary,
    RiskCalcConfig,
    RiskCalcData,
    RunConfig,
    RunReport,
    SampleConfig,
    SampleRunData,
    SupportSummary,
    VerifyRunData,
)
from app.services.contour_service import ContourService, halfplane_violations, tail_count
from app.services.metocean_service import AnyModel, resolve_model, sample_model
from app.services.risk_service import (
    buffered_failure_probability,
    buffered_std_error,
    return_period_to_pe,
    return_period_years,
)
from app.services.verify_service import VerifyService, normal_cvar_oracle
from app.utils.plotting import plot_contours

logger = logging.getLogger(__name__)


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


def resolve_pe(config: RunConfig) -> float:
    if config.pe is not None:
        return config.pe
    return return_period_to_pe(config.return_period)


def resolved_config(config: RunConfig, pe: float, model: AnyModel) -> Dict[str, Any]:
    data = config.model_dump(mode="json")
    data["pe"] = pe
    data["model_id"] = model.name
    return data


def _polygon_summary(poly: ContourPolygon) -> PolygonSummary:
    return PolygonSummary(
        kind=poly.kind,
        vertex_count=len(poly),
        valid=poly.is_valid,
        failing_vertices=poly.failing_vertices,
    )


def _containment(classical: ContourPolygon, buffered: ContourPolygon) -> ContainmentVerdict:
    # 不走 polygon_contains：非凸标记只报告，不让整次运行失败
    viol = halfplane_violations(buffered.directions, buffered.offsets, classical.vertices)
    inside = bool(np.all(viol <= buffered.tolerance))
    valid = classical.is_valid and buffered.is_valid
    if not inside:
        logger.warning("classical contour is not inside the buffered contour")
    if not valid:
        logger.warning("containment verdict taken on polygons with non-convex vertices")
    return ContainmentVerdict(classical_inside_buffered=inside, polygons_valid=valid)


def _support_summary(support: DirectionalSupport, scale_a: float) -> SupportSummary:
    scaled = support.offsets("buffered", scale_a)
    return SupportSummary(
        tail_count=support.tail_count,
        c_min=float(np.min(support.C)),
        c_max=float(np.max(support.C)),
        cbar_min=float(np.min(support.Cbar)),
        cbar_max=float(np.max(support.Cbar)),
        cbar_scaled_min=float(np.min(scaled)),
        cbar_scaled_max=float(np.max(scaled)),
    )


class RunService:
    def __init__(self, *, out_dir: str | Path | None = None) -> None:
        self.out_dir = out_dir

    def _repo(self, out_dir: str) -> ContourRepo:
        return ContourRepo(self.out_dir or out_dir)

    # ========= contour =========
    async def run_contour(self, config: RunConfig) -> RunReport:
        run_id = new_run_id()
        model = resolve_model(config.model)
        pe = resolve_pe(config)
        repo = self._repo(config.out_dir)
        logger.info(
            "run %s | contour model=%s pe=%.6g N=%d m=%d seed=%d buffered=%s",
            run_id, model.name, pe, config.sample_size, config.direction_count, config.seed, config.buffered,
        )

        # 采样前先检查尾部大小，N 很大时不必白跑
        tail_count(config.sample_size, pe, config.min_tail_count)
        grid = DirectionGrid.uniform(config.direction_count)

        with log_stage("sample", model=model.name, n=config.sample_size):
            samples = await asyncio.to_thread(sample_model, model, config.sample_size, config.seed)

        service = ContourService(workers=config.workers, min_tail_count=config.min_tail_count)
        with log_stage("contours", m=grid.m, workers=config.workers):
            support, classical, buffered = await service.build_contours(
                samples, grid, pe, buffered=config.buffered, scale_a=config.scale_a,
            )

        files: Dict[str, str] = {}
        with log_stage("write"):
            files["csv"] = str(repo.write_contour_csv(grid, support, classical, buffered, config.scale_a, CONTOUR_CSV))
            if config.svg:
                xy = ("x", "y") if isinstance(model, BivariateNormalModel) else ("T (s)", "H (m)")
                files["svg"] = str(plot_contours(
                    repo.path(CONTOUR_SVG), classical, buffered,
                    title=f"{model.name}, Pe = {pe:.4g}", xlabel=xy[0], ylabel=xy[1],
                ))
            files["report"] = str(repo.path(CONTOUR_REPORT))

            data = ContourRunData(
                model_id=model.name,
                pe=pe,
                n=samples.n,
                m=grid.m,
                seed=config.seed,
                scale_a=config.scale_a,
                support=_support_summary(support, config.scale_a),
                classical=_polygon_summary(classical),
                buffered=_polygon_summary(buffered) if buffered is not None else None,
                containment=_containment(classical, buffered) if buffered is not None else None,
                files=files,
            )
            report = RunReport(
                message="contour ok",
                runId=run_id,
                timestamp=_utc_now(),
                config=resolved_config(config, pe, model),
                data=data,
            )
            repo.write_json(report, CONTOUR_REPORT)
        return report

    # ========= riskcalc =========
    def run_riskcalc(self, config: RiskCalcConfig) -> RunReport:
        run_id = new_run_id()
        repo = self._repo(config.out_dir)
        oracle = None

        if config.input is not None:
            source = config.input
            values = repo.read_scalar_file(config.input)
        else:
            source = f"normal({config.normal_mean:g}, {config.normal_sd:g})"
            stream = rng.make_stream(config.seed, rng.STREAM_SYNTHETIC)
            values = config.normal_mean + config.normal_sd * stream.standard_normal(config.sample_size)
            try:
                oracle = normal_cvar_oracle(config.normal_mean, config.normal_sd)
            except DomainError as e:
                logger.warning("no analytic reference: %s", e.message)

        with log_stage("riskcalc", source=source, n=values.size):
            s = ScalarSample.from_values(values)
            risk = buffered_failure_probability(s)
            se = buffered_std_error(s, risk)

        if oracle is not None:
            logger.info(
                "p_f %.6f (exact %.6f) | p_f_buffered %.6f (exact %.6f) | alpha %.6f (exact %.6f)",
                risk.p_f, oracle.p_f, risk.p_f_buffered, oracle.p_f_buffered, risk.alpha, oracle.alpha,
            )

        data = RiskCalcData(
            source=source,
            report=risk,
            p_f_buffered_std_error=se,
            return_period_years=return_period_years(risk.p_f) if risk.p_f > 0 else None,
            oracle=oracle,
        )
        report = RunReport(
            message="riskcalc ok",
            runId=run_id,
            timestamp=_utc_now(),
            config=config.model_dump(mode="json"),
            data=data,
        )
        repo.write_json(report, RISKCALC_REPORT)
        return report

    # ========= verify =========
    @staticmethod
    def support_from_table(table, config: RunConfig, model: AnyModel, pe: float) -> DirectionalSupport:
        """CSV 里的支撑值 + 配置里的构造信息（N、种子）"""
        if table.grid.m != config.direction_count:
            raise SchemaMismatchError(
                f"contour CSV has {table.grid.m} directions, config asks for {config.direction_count}",
                column="theta",
            )
        return DirectionalSupport(
            C=table.C,
            Cbar=table.Cbar,
            tail_count=tail_count(config.sample_size, pe, config.min_tail_count),
            pe=pe,
            n_samples=config.sample_size,
            seed=config.seed,
            model_id=model.name,
            min_tail_count=config.min_tail_count,
        )

    async def run_verify(self, config: RunConfig, contour_path: Optional[str | Path] = None) -> RunReport:
        run_id = new_run_id()
        model = resolve_model(config.model)
        pe = resolve_pe(config)
        repo = self._repo(config.out_dir)
        path = Path(contour_path) if contour_path is not None else repo.path(CONTOUR_CSV)

        table = repo.read_contour_csv(path)
        support = self.support_from_table(table, config, model, pe)
        n_verify = config.verify_sample_size or settings.verify_sample_size
        seed = config.verify_seed if config.verify_seed is not None else config.seed + 1
        logger.info("run %s | verify %s n_verify=%d seed=%d", run_id, path, n_verify, seed)

        service = VerifyService(workers=config.workers)
        with log_stage("verify.exceedence", m=table.grid.m):
            exceedence = await service.check_exceedence(model, support, table.grid, n_verify, seed)
        with log_stage("verify.gamma", m=table.grid.m):
            gamma = await service.check_gamma_buffered(model, support, table.grid, n_verify, seed)

        passed = exceedence.passed and gamma.passed
        files = {"contour": str(path), "report": str(repo.path(VERIFY_REPORT))}
        report = RunReport(
            success=passed,
            message="verification passed" if passed else "verification failed",
            runId=run_id,
            timestamp=_utc_now(),
            config=resolved_config(config, pe, model),
            data=VerifyRunData(
                contour=str(path),
                passed=passed,
                exceedence=exceedence,
                gamma_buffered=gamma,
                files=files,
            ),
        )
        repo.write_json(report, VERIFY_REPORT)

        if not passed:
            raise VerificationFailedError(
                f"{len(exceedence.failing_directions)} exceedence and "
                f"{len(gamma.failing_directions)} buffered directions outside {exceedence.sigma_level:g} sigma",
                exceedence_failing=exceedence.failing_directions,
                gamma_failing=gamma.failing_directions,
                report=files["report"],
            )
        return report

    # ========= sample =========
    async def run_sample(self, config: SampleConfig) -> RunReport:
        run_id = new_run_id()
        model = resolve_model(config.model)
        repo = self._repo(config.out_dir)

        with log_stage("sample", model=model.name, n=config.sample_size):
            samples = await asyncio.to_thread(sample_model, model, config.sample_size, config.seed)
        path = repo.write_samples_csv(samples)

        config_echo = config.model_dump(mode="json")
        config_echo["model_id"] = model.name
        return RunReport(
            message="sample ok",
            runId=run_id,
            timestamp=_utc_now(),
            config=config_echo,
            data=SampleRunData(model_id=model.name, n=samples.n, seed=samples.seed, files={"csv": str(path)}),
        )
