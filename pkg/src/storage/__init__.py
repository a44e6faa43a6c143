"""Storage 模块 - 本地存储管理"""
from .manager import StorageManager

__all__ = [
    "StorageManager",
]
