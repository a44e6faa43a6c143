"""Utils 模块"""
from .timing import STAGES, FrameTiming, StageTimer

__all__ = ['STAGES', 'FrameTiming', 'StageTimer']
