"""Schema 模块 - 共享类型定义"""
from .labels import LABEL_BY_NAME, NUM_LABELS, OBJECT_LABELS, SemanticLabel
from .errors import (
    AcousticMapError,
    ConfigError,
    FieldValidationError,
    FrameError,
    InputError,
    InvariantViolation,
    ParseError,
)

__all__ = [
    "SemanticLabel",
    "NUM_LABELS",
    "OBJECT_LABELS",
    "LABEL_BY_NAME",
    "AcousticMapError",
    "InputError",
    "ParseError",
    "FieldValidationError",
    "ConfigError",
    "FrameError",
    "InvariantViolation",
]
