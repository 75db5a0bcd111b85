# app/core/logging.py
"""控制台日志 + 流水线阶段计时

阶段日志沿用请求/响应的格式：进入时 ``>>> name``，退出时
``<<< name | Time: 0.123s``，异常退出也会记录。
"""
from __future__ import annotations

import logging
import time
import uuid
from contextlib import contextmanager
from typing import Iterator

PACKAGE_LOGGER = "app"

logger = logging.getLogger(f"{PACKAGE_LOGGER}.stage")


def setup_logging(level: str = "INFO") -> logging.Logger:
    root = logging.getLogger(PACKAGE_LOGGER)
    root.setLevel(level.upper())

    # 如果没有 handler，添加一个控制台输出
    if not root.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(
            "%(asctime)s | %(levelname)s | %(message)s"
        ))
        root.addHandler(handler)
    return root


def new_run_id() -> str:
    return uuid.uuid4().hex


@contextmanager
def log_stage(name: str, **fields: object) -> Iterator[None]:
    start_time = time.perf_counter()
    req_log = f">>> {name}"
    if fields:
        req_log += " | " + " ".join(f"{k}={v}" for k, v in fields.items())
    logger.info(req_log)

    status = "ok"
    try:
        yield
    except Exception:
        status = "failed"
        raise
    finally:
        duration = time.perf_counter() - start_time
        logger.info(f"<<< {name} | Status: {status} | Time: {duration:.3f}s")
