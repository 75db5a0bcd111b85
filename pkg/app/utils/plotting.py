"""
等值线 SVG 输出：经典等值线灰色，缓冲等值线黑色
"""
from __future__ import annotations

from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from app.models.contour_models import ContourPolygon  # noqa: E402


def _closed(poly: ContourPolygon):
    v = poly.vertices
    return list(v[:, 0]) + [v[0, 0]], list(v[:, 1]) + [v[0, 1]]


def plot_contours(
    path: str | Path,
    classical: ContourPolygon,
    buffered: Optional[ContourPolygon] = None,
    *,
    title: str = "",
    xlabel: str = "T (s)",
    ylabel: str = "H (m)",
) -> Path:
    path = Path(path)
    # 固定 id 盐值，同一输入生成同样的 SVG
    with plt.rc_context({"svg.hashsalt": "contours"}):
        fig, ax = plt.subplots(figsize=(6, 5))
        try:
            x, y = _closed(classical)
            ax.plot(x, y, color="0.6", linewidth=1.2, label="classical")
            if buffered is not None:
                x, y = _closed(buffered)
                ax.plot(x, y, color="black", linewidth=1.2, label="buffered")
            ax.set_xlabel(xlabel)
            ax.set_ylabel(ylabel)
            if title:
                ax.set_title(title)
            ax.legend(loc="upper left", frameon=False)
            ax.grid(True, linewidth=0.3, alpha=0.5)
            fig.tight_layout()
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return path
