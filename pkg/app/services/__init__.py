# app/services/__init__.py
"""服务层模块"""

from .contour_service import ContourService
from .verify_service import VerifyService
from .run_service import RunService

__all__ = ["ContourService", "VerifyService", "RunService"]
