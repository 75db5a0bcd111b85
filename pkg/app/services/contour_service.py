# app/services/contour_service.py
"""
经典 / 缓冲环境等值线

同一份 SampleSet 在每个方向 u_j 上投影：
- Ĉ(u)  = Y_(k)，k/N ≈ 1 − Pe
- Ĉ̄(u) = 最大的 N − k 个投影值的均值
等值线是半平面 {v : u_j'v ≤ c_j} 之交的边界，顶点取相邻两条支撑线的交点。
"""
from __future__ import annotations

import asyncio
import logging
import math

import numpy as np

from app.core.config import settings
from app.core.errors import DegenerateTailError, GeometryError, InputError, InsufficientTailError
from app.models.contour_models import ContourKind, ContourPolygon, DirectionalSupport, DirectionGrid
from app.models.sample_models import SampleSet, ScalarSample
from app.services.risk_service import order_index

logger = logging.getLogger(__name__)

# 相邻方向几乎平行时 2×2 方程组视为奇异
_SINGULAR_DET = 1e-12


def _projection(rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    # 逐元素计算，不走 BLAS，保证结果与线程数、平台 BLAS 实现无关
    return rows[:, 0] * u[0] + rows[:, 1] * u[1]


def project(samples: SampleSet, u) -> ScalarSample:
    u = np.asarray(u, dtype=float)
    return ScalarSample(np.sort(_projection(samples.rows, u)))


def _tail_split(n: int, pe: float, min_tail_count: int, direction: int | None = None) -> int:
    """返回 k（1 起始）；尾部 N − k 个点不够时报错并给出所需 N"""
    if not 0 < pe < 1:
        raise InputError(f"exceedence probability must lie in (0, 1), got {pe}", field="pe")
    k = order_index(1.0 - pe, n)
    tail_count = n - k
    if tail_count < max(min_tail_count, 1):
        required_n = math.ceil(max(min_tail_count, 1) / pe)
        details: dict = {"tail_count": tail_count, "min_tail_count": min_tail_count, "pe": pe, "n": n}
        if direction is not None:
            details["direction"] = direction
        raise InsufficientTailError(
            f"N = {n} gives only {tail_count} tail points at Pe = {pe:g}; "
            f"need N ≥ {required_n} for {min_tail_count}",
            required_n=required_n,
            **details,
        )
    return k


def tail_count(n: int, pe: float, min_tail_count: int | None = None) -> int:
    """N − k；不足 min_tail_count 时抛 InsufficientTailError"""
    mt = settings.min_tail_count if min_tail_count is None else min_tail_count
    return n - _tail_split(n, pe, mt)


def estimate_C(s: ScalarSample, pe: float, min_tail_count: int | None = None) -> float:
    mt = settings.min_tail_count if min_tail_count is None else min_tail_count
    k = _tail_split(s.n, pe, mt)
    return float(s.values[k - 1])


def estimate_Cbar(s: ScalarSample, pe: float, min_tail_count: int | None = None) -> float:
    mt = settings.min_tail_count if min_tail_count is None else min_tail_count
    k = _tail_split(s.n, pe, mt)
    return float(s.values[k:].mean())


def scale_support(cbar, a: float):
    """C̄_a(u) = a·C̄(u)"""
    if not a > 0:
        raise InputError(f"scale factor must be positive, got {a}", field="scale_a")
    if np.ndim(cbar) == 0:
        return a * float(cbar)
    return a * np.asarray(cbar, dtype=float)


def _estimate_directions(
    rows: np.ndarray,
    vectors: np.ndarray,
    indices: np.ndarray,
    k: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    对一组方向计算 (C, Cbar)。

    用 partition 代替全排序：第 k 小的值就是 Y_(k)，其后是最大的 N − k 个值；
    尾部再排序后求均值，与对完整排序样本切片求均值逐位相同。
    """
    C = np.empty(indices.size)
    Cbar = np.empty(indices.size)
    for i, j in enumerate(indices):
        y = _projection(rows, vectors[j])
        part = np.partition(y, k - 1)
        C[i] = part[k - 1]
        Cbar[i] = np.sort(part[k:]).mean()
    return indices, C, Cbar


def _assemble_support(
    samples: SampleSet,
    grid: DirectionGrid,
    pe: float,
    k: int,
    min_tail_count: int,
    C: np.ndarray,
    Cbar: np.ndarray,
) -> DirectionalSupport:
    degenerate = np.flatnonzero(~(Cbar > C))
    if degenerate.size:
        j = int(degenerate[0])
        raise DegenerateTailError(
            f"tail above C is constant in direction {j} (theta = {grid.angles[j]:.6f})",
            direction=j,
            theta=float(grid.angles[j]),
        )
    return DirectionalSupport(
        C=C,
        Cbar=Cbar,
        tail_count=samples.n - k,
        pe=pe,
        n_samples=samples.n,
        seed=samples.seed,
        model_id=samples.model_id,
        min_tail_count=min_tail_count,
    )


def build_support(
    samples: SampleSet,
    grid: DirectionGrid,
    pe: float,
    min_tail_count: int | None = None,
) -> DirectionalSupport:
    mt = settings.min_tail_count if min_tail_count is None else min_tail_count
    # 尾部大小只取决于 N 和 Pe，第一个方向不够就全部不够
    k = _tail_split(samples.n, pe, mt, direction=0)
    _, C, Cbar = _estimate_directions(samples.rows, grid.vectors, np.arange(grid.m), k)
    return _assemble_support(samples, grid, pe, k, mt, C, Cbar)


# ========= 多边形 =========
def _tolerance(offsets: np.ndarray, rel_tol: float) -> float:
    finite = offsets[np.isfinite(offsets)]
    scale = float(np.max(np.abs(finite))) if finite.size else 1.0
    return rel_tol * max(scale, 1.0) + 1e-12


def halfplane_violations(directions: np.ndarray, offsets: np.ndarray, points: np.ndarray) -> np.ndarray:
    """violations[i, j] = u_j'p_i − c_j，正值表示点 p_i 在半平面 j 之外"""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return points @ np.asarray(directions).T - np.asarray(offsets)[None, :]


def build_polygon(
    support: DirectionalSupport,
    grid: DirectionGrid,
    kind: ContourKind = "classical",
    scale_a: float = 1.0,
    rel_tol: float | None = None,
) -> ContourPolygon:
    m = grid.m
    if m < 3:
        raise GeometryError(f"need at least 3 directions to bound a polygon, got {m}", m=m)
    if support.m != m:
        raise GeometryError(
            f"support has {support.m} directions but the grid has {m}",
            support_m=support.m,
            grid_m=m,
        )

    if kind == "buffered":
        c = scale_support(support.Cbar, scale_a)
    else:
        c = np.asarray(support.C, dtype=float)

    u = grid.vectors
    u_next = np.roll(u, -1, axis=0)
    c_next = np.roll(c, -1)

    det = u[:, 0] * u_next[:, 1] - u[:, 1] * u_next[:, 0]
    singular = np.flatnonzero(np.abs(det) < _SINGULAR_DET)
    if singular.size:
        raise GeometryError(
            f"adjacent directions {int(singular[0])} and {int((singular[0] + 1) % m)} are parallel",
            vertices=[int(j) for j in singular],
        )

    # Cramer 法则解 u_j'v = c_j, u_{j+1}'v = c_{j+1}
    vx = (c * u_next[:, 1] - c_next * u[:, 1]) / det
    vy = (u[:, 0] * c_next - u_next[:, 0] * c) / det
    vertices = np.column_stack([vx, vy])

    tol = _tolerance(c, settings.convexity_tol if rel_tol is None else rel_tol)
    viol = halfplane_violations(u, c, vertices)
    flags = np.max(viol, axis=1) <= tol

    if not np.all(flags):
        logger.warning(
            "%s contour: %d of %d vertices violate other halfplanes (support not convex at this resolution)",
            kind, int(np.count_nonzero(~flags)), m,
        )

    return ContourPolygon(
        vertices=vertices,
        kind=kind,
        convexity_flags=flags,
        directions=u,
        offsets=c,
        tolerance=tol,
    )


def polygon_contains(outer: ContourPolygon, inner: ContourPolygon) -> bool:
    for name, poly in (("outer", outer), ("inner", inner)):
        if not poly.is_valid:
            raise GeometryError(
                f"{name} {poly.kind} polygon is not convex at this resolution",
                polygon=name,
                failing_vertices=poly.failing_vertices,
            )
    viol = halfplane_violations(outer.directions, outer.offsets, inner.vertices)
    return bool(np.all(viol <= outer.tolerance))


class ContourService:
    """
    方向估计并行版本（异步）

    每个线程处理一段连续的方向下标，结果按下标拼回，
    所以输出与 workers 数量无关。
    """

    def __init__(self, *, workers: int | None = None, min_tail_count: int | None = None) -> None:
        self.workers = workers or settings.workers
        self.min_tail_count = settings.min_tail_count if min_tail_count is None else min_tail_count

    async def build_support(self, samples: SampleSet, grid: DirectionGrid, pe: float) -> DirectionalSupport:
        k = _tail_split(samples.n, pe, self.min_tail_count, direction=0)
        chunks = [idx for idx in np.array_split(np.arange(grid.m), self.workers) if idx.size]

        results = await asyncio.gather(*(
            asyncio.to_thread(_estimate_directions, samples.rows, grid.vectors, idx, k)
            for idx in chunks
        ))

        C = np.empty(grid.m)
        Cbar = np.empty(grid.m)
        for idx, c_part, cbar_part in results:
            C[idx] = c_part
            Cbar[idx] = cbar_part
        return _assemble_support(samples, grid, pe, k, self.min_tail_count, C, Cbar)

    async def build_contours(
        self,
        samples: SampleSet,
        grid: DirectionGrid,
        pe: float,
        *,
        buffered: bool = True,
        scale_a: float = 1.0,
    ) -> tuple[DirectionalSupport, ContourPolygon, ContourPolygon | None]:
        support = await self.build_support(samples, grid, pe)
        classical = build_polygon(support, grid, "classical")
        buffered_poly = build_polygon(support, grid, "buffered", scale_a=scale_a) if buffered else None
        return support, classical, buffered_poly
