# app/cli.py
"""
contours <subcommand> [options]

  contour   构造经典（和可选的缓冲）环境等值线
  riskcalc  对标量性能函数样本计算 p_f / p̄_f
  verify    用新样本校验已有的等值线 CSV
  sample    只输出联合样本

配置优先级：Settings（环境变量 / .env）< --config JSON < 命令行参数
"""
from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from pydantic import BaseModel, ValidationError

from app.core.config import settings
from app.core.errors import ContourError, UsageError, error_payload
from app.core.logging import setup_logging
from app.schemas.run_schemas import RiskCalcConfig, RunConfig, SampleConfig
from app.services.run_service import RunService

logger = logging.getLogger(__name__)


# ========= 参数定义 =========
def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=str, default=None, help="JSON document mirroring the run configuration")
    p.add_argument("--seed", type=int, default=None, help="random seed")
    p.add_argument("--samples", type=int, default=None, help="Monte Carlo sample size N")
    p.add_argument("--out-dir", type=str, default=None, help="output directory")
    p.add_argument("--log-level", type=str, default=None, help="DEBUG / INFO / WARNING")


def _add_model(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", type=str, default=None, help="preset: swell, windsea, isotropic-normal")


def _add_contour_args(p: argparse.ArgumentParser) -> None:
    _add_model(p)
    p.add_argument("--pe", type=float, default=None, help="exceedence probability per sea state")
    p.add_argument("--return-period-years", type=float, default=None, help="derive Pe from a return period")
    p.add_argument("--states-per-hour", type=float, default=None, help="sea states per hour (default 1)")
    p.add_argument("--directions", type=int, default=None, help="number of directions m")
    p.add_argument("--min-tail", type=int, default=None, help="minimum tail sample count N·Pe")
    p.add_argument("--workers", type=int, default=None, help="threads for per-direction work")
    p.add_argument("--scale-a", type=float, default=None, help="scale factor a for the buffered support")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contours", description="Classical and buffered environmental contours")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("contour", help="build contours and write CSV / JSON / SVG")
    _add_common(p)
    _add_contour_args(p)
    p.add_argument("--buffered", action="store_true", default=None, help="also build the buffered contour")
    p.add_argument("--svg", action="store_true", default=None, help="write an SVG plot")

    p = sub.add_parser("verify", help="check a contour CSV against fresh samples")
    _add_common(p)
    _add_contour_args(p)
    p.add_argument("--contour", type=str, default=None, help="contour CSV (default <out-dir>/contour.csv)")
    p.add_argument("--verify-samples", type=int, default=None, help="fresh sample size")
    p.add_argument("--verify-seed", type=int, default=None, help="fresh seed (default seed + 1)")

    p = sub.add_parser("riskcalc", help="risk measures of a scalar performance sample")
    _add_common(p)
    p.add_argument("--input", type=str, default=None, help="file with one value per line")
    p.add_argument("--normal-mean", type=float, default=None, help="synthetic normal mean")
    p.add_argument("--normal-sd", type=float, default=None, help="synthetic normal standard deviation")

    p = sub.add_parser("sample", help="write joint samples as CSV")
    _add_common(p)
    _add_model(p)

    return parser


# ========= 配置合并 =========
def _load_config_file(path: Optional[str]) -> dict[str, Any]:
    if path is None:
        return {}
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}", field="config") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"config file is not valid JSON: {e}", field="config", line=e.lineno) from None
    if not isinstance(doc, dict):
        raise UsageError("config file must hold a JSON object", field="config")
    return doc


def _flags(args: argparse.Namespace, mapping: dict[str, str]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for attr, field in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            out[field] = value
    return out


def _validate(schema: type[BaseModel], data: dict[str, Any]) -> Any:
    try:
        return schema.model_validate(data)
    except ValidationError as e:
        err = e.errors()[0]
        field = ".".join(str(x) for x in err["loc"]) or "config"
        raise UsageError(f"invalid {field}: {err['msg']}", field=field, errors=len(e.errors())) from None


def _run_defaults() -> dict[str, Any]:
    return {
        "sample_size": settings.sample_size,
        "direction_count": settings.direction_count,
        "seed": settings.seed,
        "min_tail_count": settings.min_tail_count,
        "workers": settings.workers,
        "out_dir": settings.out_dir,
    }


def resolve_run_config(args: argparse.Namespace) -> RunConfig:
    data = _run_defaults()
    data.update(_load_config_file(args.config))

    flags = _flags(args, {
        "model": "model",
        "pe": "pe",
        "samples": "sample_size",
        "directions": "direction_count",
        "seed": "seed",
        "buffered": "buffered",
        "scale_a": "scale_a",
        "min_tail": "min_tail_count",
        "workers": "workers",
        "out_dir": "out_dir",
        "svg": "svg",
        "verify_samples": "verify_sample_size",
        "verify_seed": "verify_seed",
    })
    # 命令行里的 Pe 与重现期互相覆盖
    if "pe" in flags:
        data.pop("return_period", None)
    if args.return_period_years is not None:
        data.pop("pe", None)
        data["return_period"] = {"return_period_years": args.return_period_years}
    if args.states_per_hour is not None:
        if not isinstance(data.get("return_period"), dict):
            raise UsageError("--states-per-hour needs a return period", field="states_per_hour")
        data["return_period"] = {**data["return_period"], "states_per_hour": args.states_per_hour}
    data.update(flags)
    return _validate(RunConfig, data)


def resolve_riskcalc_config(args: argparse.Namespace) -> RiskCalcConfig:
    data: dict[str, Any] = {"out_dir": settings.out_dir}
    data.update(_load_config_file(args.config))
    # 命令行给了哪种输入源，就丢掉配置文件里的另一种
    if args.input is not None:
        data.pop("normal_mean", None)
        data.pop("normal_sd", None)
    if args.normal_mean is not None or args.normal_sd is not None:
        data.pop("input", None)
    data.update(_flags(args, {
        "input": "input",
        "normal_mean": "normal_mean",
        "normal_sd": "normal_sd",
        "samples": "sample_size",
        "seed": "seed",
        "out_dir": "out_dir",
    }))
    return _validate(RiskCalcConfig, data)


def resolve_sample_config(args: argparse.Namespace) -> SampleConfig:
    data: dict[str, Any] = {
        "sample_size": settings.sample_size,
        "seed": settings.seed,
        "out_dir": settings.out_dir,
    }
    file_doc = _load_config_file(args.config)
    data.update({k: v for k, v in file_doc.items() if k in SampleConfig.model_fields})
    data.update(_flags(args, {"model": "model", "samples": "sample_size", "seed": "seed", "out_dir": "out_dir"}))
    return _validate(SampleConfig, data)


# ========= 入口 =========
async def _dispatch(args: argparse.Namespace) -> BaseModel:
    service = RunService()
    if args.command == "contour":
        return await service.run_contour(resolve_run_config(args))
    if args.command == "verify":
        return await service.run_verify(resolve_run_config(args), args.contour)
    if args.command == "riskcalc":
        return service.run_riskcalc(resolve_riskcalc_config(args))
    if args.command == "sample":
        return await service.run_sample(resolve_sample_config(args))
    raise UsageError(f"unknown command '{args.command}'", field="command")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level or settings.log_level)

    try:
        report = asyncio.run(_dispatch(args))
    except ContourError as e:
        logger.error("%s failed: %s", args.command, e.message)
        print(json.dumps(error_payload(e), ensure_ascii=False, default=str), file=sys.stderr)
        return e.exit_code

    print(json.dumps(report.model_dump(mode="json"), ensure_ascii=False, indent=2))
    return 0


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
