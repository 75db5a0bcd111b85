# app/models/contour_models.py
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from app.models.sample_models import _readonly

ContourKind = Literal["classical", "buffered"]


@dataclass(frozen=True, eq=False)
class DirectionGrid:
    """方向网格：θ_j = 2πj/m，u_j = (cos θ_j, sin θ_j)"""
    angles: np.ndarray
    vectors: np.ndarray

    def __post_init__(self) -> None:
        angles = np.asarray(self.angles, dtype=float).reshape(-1)
        vectors = np.asarray(self.vectors, dtype=float)
        if vectors.shape != (angles.size, 2):
            raise ValueError("direction vectors must be m×2 and match the angles")
        if np.any(np.diff(angles) <= 0):
            raise ValueError("direction angles must be strictly increasing")
        object.__setattr__(self, "angles", _readonly(angles))
        object.__setattr__(self, "vectors", _readonly(vectors))

    @classmethod
    def uniform(cls, m: int) -> "DirectionGrid":
        if m < 1:
            raise ValueError("direction count must be positive")
        angles = 2.0 * math.pi * np.arange(m) / m
        return cls(angles, np.column_stack([np.cos(angles), np.sin(angles)]))

    @classmethod
    def from_vectors(cls, angles, vectors) -> "DirectionGrid":
        # 从文件读回时直接用记录下来的 (ux, uy)，保证逐位一致
        return cls(np.asarray(angles, dtype=float), np.asarray(vectors, dtype=float))

    @property
    def m(self) -> int:
        return int(self.angles.size)

    def __len__(self) -> int:
        return self.m


@dataclass(frozen=True, eq=False)
class DirectionalSupport:
    """
    每个方向的支撑值：
    - C[j]   经典支撑值，u_j'V 的 (1 − Pe) 分位数
    - Cbar[j] 缓冲支撑值，超过 C[j] 部分的尾均值
    """
    C: np.ndarray
    Cbar: np.ndarray
    tail_count: int
    pe: float
    n_samples: int
    seed: int
    model_id: str
    min_tail_count: int

    def __post_init__(self) -> None:
        C = np.asarray(self.C, dtype=float).reshape(-1)
        Cbar = np.asarray(self.Cbar, dtype=float).reshape(-1)
        if C.shape != Cbar.shape:
            raise ValueError("C and Cbar must have one value per direction")
        object.__setattr__(self, "C", _readonly(C))
        object.__setattr__(self, "Cbar", _readonly(Cbar))

    @property
    def m(self) -> int:
        return int(self.C.size)

    def offsets(self, kind: ContourKind, scale_a: float = 1.0) -> np.ndarray:
        if kind == "classical":
            return self.C
        return self.Cbar * scale_a


@dataclass(frozen=True, eq=False)
class ContourPolygon:
    """
    半平面交的边界多边形
    - vertices[j] 是方向 j 与 j+1 两条支撑线的交点（末尾回绕到 0）
    - convexity_flags[j] 为 False 表示该顶点违反了其他半平面约束
    """
    vertices: np.ndarray
    kind: ContourKind
    convexity_flags: np.ndarray
    directions: np.ndarray
    offsets: np.ndarray
    tolerance: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", _readonly(np.asarray(self.vertices, dtype=float)))
        flags = np.asarray(self.convexity_flags, dtype=bool).reshape(-1).copy()
        flags.setflags(write=False)
        object.__setattr__(self, "convexity_flags", flags)
        object.__setattr__(self, "directions", _readonly(np.asarray(self.directions, dtype=float)))
        object.__setattr__(self, "offsets", _readonly(np.asarray(self.offsets, dtype=float)))

    @property
    def is_valid(self) -> bool:
        return bool(np.all(self.convexity_flags))

    @property
    def failing_vertices(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(~self.convexity_flags)]

    def __len__(self) -> int:
        return int(self.vertices.shape[0])
