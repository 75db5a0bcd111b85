# scripts/run_presets.py
"""
swell 与 wind-sea 两个预置模型：25 年重现期（每小时一个海况），
经典 + 缓冲等值线及 SVG。

    uv run python scripts/run_presets.py --samples 22000000 --out-dir out/presets
"""
from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path


async def main() -> int:
    # --- resolve paths ---
    script_path = Path(__file__).resolve()
    repo_root = script_path.parents[1]  # scripts/.. = repo root

    # ensure "import app.*" works
    if str(repo_root) not in sys.path:
        sys.path.insert(0, str(repo_root))

    parser = argparse.ArgumentParser(description="Reproduce the 25-year swell and wind-sea contours")
    parser.add_argument("--samples", type=int, default=22_000_000, help="Monte Carlo sample size N")
    parser.add_argument("--directions", type=int, default=360, help="number of directions m")
    parser.add_argument("--seed", type=int, default=None, help="seed (else from settings)")
    parser.add_argument("--years", type=float, default=25.0, help="return period in years")
    parser.add_argument("--workers", type=int, default=None, help="threads (else from settings)")
    parser.add_argument("--out-dir", type=str, default="out/presets", help="output root")
    args = parser.parse_args()

    # --- imports after sys.path ready ---
    from app.core.config import settings  # noqa: E402
    from app.core.errors import ContourError, error_payload  # noqa: E402
    from app.core.logging import setup_logging  # noqa: E402
    from app.schemas.run_schemas import RunConfig  # noqa: E402
    from app.services.run_service import RunService  # noqa: E402

    setup_logging(settings.log_level)
    service = RunService()

    summary = {}
    for preset in ("swell", "windsea"):
        config = RunConfig(
            model=preset,
            return_period={"return_period_years": args.years},
            sample_size=args.samples,
            direction_count=args.directions,
            seed=args.seed or settings.seed,
            buffered=True,
            min_tail_count=settings.min_tail_count,
            workers=args.workers or settings.workers,
            out_dir=str(Path(args.out_dir) / preset),
            svg=True,
        )
        try:
            report = await service.run_contour(config)
        except ContourError as e:
            print(json.dumps(error_payload(e), ensure_ascii=False, default=str), file=sys.stderr)
            return e.exit_code

        data = report.data
        summary[preset] = {
            "pe": data.pe,
            "classical_valid": data.classical.valid,
            "buffered_valid": data.buffered.valid,
            "classical_inside_buffered": data.containment.classical_inside_buffered,
            "files": data.files,
        }
        print(f"[OK] {preset}: Pe = {data.pe:.5g}, contours in {config.out_dir}")

    print(json.dumps(summary, ensure_ascii=False, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(asyncio.run(main()))
