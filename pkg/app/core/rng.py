"""
带种子的随机数流

每个子流是 Philox 计数器生成器，密钥取自 SeedSequence(seed) 的子序列；
子流之间互不重叠，一次运行只由种子决定。
"""
from __future__ import annotations

import numpy as np

# 子流编号固定，新增子流只能往后加
STREAM_MARGINAL = 0
STREAM_CONDITIONAL = 1
STREAM_SYNTHETIC = 2
_STREAM_COUNT = 3


def make_stream(seed: int, stream: int = 0) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be non-negative")
    if not 0 <= stream < _STREAM_COUNT:
        raise ValueError(f"unknown stream index {stream}")
    child = np.random.SeedSequence(seed).spawn(_STREAM_COUNT)[stream]
    return np.random.Generator(np.random.Philox(child))
