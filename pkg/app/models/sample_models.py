# app/models/sample_models.py
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if arr.flags.writeable or not arr.flags.c_contiguous:
        # 调用方手里的数组可能还会被改，复制一份再冻结
        arr = np.array(arr, dtype=float, order="C")
        arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SampleSet:
    """
    环境变量样本：rows 为 N×2，列顺序 (t: 周期 s, h: 有效波高 m)
    - 创建后只读，可以在线程之间共享
    - 由 (model, n, seed) 唯一决定
    """
    rows: np.ndarray
    seed: int
    model_id: str

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != 2 or rows.shape[0] < 1:
            raise ValueError(f"SampleSet rows must be N×2 with N ≥ 1, got shape {rows.shape}")
        object.__setattr__(self, "rows", _readonly(rows))

    @property
    def n(self) -> int:
        return int(self.rows.shape[0])

    @property
    def t(self) -> np.ndarray:
        return self.rows[:, 0]

    @property
    def h(self) -> np.ndarray:
        return self.rows[:, 1]


@dataclass(frozen=True, eq=False)
class ScalarSample:
    """升序排列的一维样本（投影值或性能函数值）"""
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if values.size > 1 and np.any(values[1:] < values[:-1]):
            raise ValueError("ScalarSample values must be sorted ascending")
        object.__setattr__(self, "values", _readonly(values))

    @classmethod
    def from_values(cls, values) -> "ScalarSample":
        return cls(np.sort(np.asarray(values, dtype=float).reshape(-1)))

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.n
