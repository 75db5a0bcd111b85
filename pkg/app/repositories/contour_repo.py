from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel

from app.core.errors import InputError, SchemaMismatchError
from app.models.contour_models import ContourPolygon, DirectionalSupport, DirectionGrid
from app.models.sample_models import SampleSet

logger = logging.getLogger(__name__)

CONTOUR_HEADER = [
    "theta", "ux", "uy", "C", "Cbar", "Cbar_scaled",
    "vx_classical", "vy_classical", "vx_buffered", "vy_buffered", "convex_ok",
]
SAMPLE_HEADER = ["t", "h"]

CONTOUR_CSV = "contour.csv"
CONTOUR_REPORT = "contour_report.json"
CONTOUR_SVG = "contour.svg"
VERIFY_REPORT = "verify_report.json"
RISKCALC_REPORT = "riskcalc_report.json"
SAMPLES_CSV = "samples.csv"


def _fmt(x: float) -> str:
    # 17 位有效数字，float 可以逐位读回
    return f"{x:.17g}"


@dataclass(frozen=True, eq=False)
class ContourTable:
    """从等值线 CSV 读回的内容"""
    grid: DirectionGrid
    C: np.ndarray
    Cbar: np.ndarray
    Cbar_scaled: np.ndarray
    classical: np.ndarray
    buffered: Optional[np.ndarray]
    convex_ok: np.ndarray


class ContourRepo:
    def __init__(self, out_dir: str | Path) -> None:
        self.out_dir = Path(out_dir)

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def _ensure_dir(self) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)

    # ========= 等值线 CSV =========
    def write_contour_csv(
        self,
        grid: DirectionGrid,
        support: DirectionalSupport,
        classical: ContourPolygon,
        buffered: Optional[ContourPolygon],
        scale_a: float = 1.0,
        name: str = CONTOUR_CSV,
    ) -> Path:
        self._ensure_dir()
        path = self.path(name)
        cbar_scaled = support.offsets("buffered", scale_a)
        convex_ok = classical.convexity_flags
        if buffered is not None:
            convex_ok = convex_ok & buffered.convexity_flags

        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(CONTOUR_HEADER)
            for j in range(grid.m):
                vb = ["", ""] if buffered is None else [_fmt(buffered.vertices[j, 0]), _fmt(buffered.vertices[j, 1])]
                writer.writerow([
                    _fmt(grid.angles[j]),
                    _fmt(grid.vectors[j, 0]),
                    _fmt(grid.vectors[j, 1]),
                    _fmt(support.C[j]),
                    _fmt(support.Cbar[j]),
                    _fmt(cbar_scaled[j]),
                    _fmt(classical.vertices[j, 0]),
                    _fmt(classical.vertices[j, 1]),
                    *vb,
                    "1" if convex_ok[j] else "0",
                ])
        logger.info("wrote %d contour rows to %s", grid.m, path)
        return path

    @staticmethod
    def read_contour_csv(path: str | Path) -> ContourTable:
        path = Path(path)
        if not path.exists():
            raise InputError(f"contour file not found: {path}", path=str(path))

        with path.open("r", encoding="utf-8", newline="") as f:
            reader = csv.reader(f)
            header = next(reader, [])
            for i, expected in enumerate(CONTOUR_HEADER):
                found = header[i] if i < len(header) else None
                if found != expected:
                    raise SchemaMismatchError(
                        f"contour CSV column {i + 1} should be '{expected}', found '{found}'",
                        column=expected,
                        found=found,
                    )
            if len(header) != len(CONTOUR_HEADER):
                raise SchemaMismatchError(
                    f"contour CSV has unexpected extra column '{header[len(CONTOUR_HEADER)]}'",
                    column=header[len(CONTOUR_HEADER)],
                )
            rows = list(reader)

        if not rows:
            raise SchemaMismatchError("contour CSV has no direction rows", column=CONTOUR_HEADER[0])

        def column(name: str, *, optional: bool = False) -> Optional[np.ndarray]:
            i = CONTOUR_HEADER.index(name)
            cells = [r[i] if i < len(r) else "" for r in rows]
            if optional and all(c == "" for c in cells):
                return None
            out = np.empty(len(cells))
            for line, cell in enumerate(cells, start=2):
                try:
                    out[line - 2] = float(cell)
                except ValueError:
                    raise SchemaMismatchError(
                        f"column '{name}' line {line}: cannot parse '{cell}'",
                        column=name,
                        line=line,
                    ) from None
            return out

        theta = column("theta")
        vectors = np.column_stack([column("ux"), column("uy")])
        vxb = column("vx_buffered", optional=True)
        vyb = column("vy_buffered", optional=True)
        buffered = None if vxb is None or vyb is None else np.column_stack([vxb, vyb])
        return ContourTable(
            grid=DirectionGrid.from_vectors(theta, vectors),
            C=column("C"),
            Cbar=column("Cbar"),
            Cbar_scaled=column("Cbar_scaled"),
            classical=np.column_stack([column("vx_classical"), column("vy_classical")]),
            buffered=buffered,
            convex_ok=column("convex_ok").astype(bool),
        )

    # ========= 样本 / 标量输入 =========
    def write_samples_csv(self, samples: SampleSet, name: str = SAMPLES_CSV) -> Path:
        self._ensure_dir()
        path = self.path(name)
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(SAMPLE_HEADER)
            writer.writerows([_fmt(t), _fmt(h)] for t, h in samples.rows)
        logger.info("wrote %d samples (seed=%d) to %s", samples.n, samples.seed, path)
        return path

    @staticmethod
    def read_scalar_file(path: str | Path) -> np.ndarray:
        """每行一个数；空行与 # 注释行跳过"""
        path = Path(path)
        if not path.exists():
            raise InputError(f"input file not found: {path}", path=str(path))

        values: list[float] = []
        for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            try:
                values.append(float(s.split(",")[0]))
            except ValueError:
                raise InputError(f"line {line_no}: cannot parse '{s}' as a number", line=line_no) from None
        if not values:
            raise InputError(f"no numeric values in {path}", path=str(path))
        return np.asarray(values)

    # ========= JSON 报告 =========
    def write_json(self, payload: BaseModel | dict[str, Any], name: str) -> Path:
        self._ensure_dir()
        path = self.path(name)
        data = payload.model_dump(mode="json") if isinstance(payload, BaseModel) else payload
        path.write_text(json.dumps(data, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
        return path
