"""
错误类型

库代码只负责抛出；退出码映射在 cli.py 中完成：
InputError -> 1，InvariantViolation / 其他异常 -> 2。
"""
from typing import Optional


class AcousticMapError(Exception):
    """所有领域错误的基类"""


class InputError(AcousticMapError, ValueError):
    """输入文件或参数不合法"""


class ParseError(InputError):
    """文件解析失败，带行号"""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        location = ""
        if path:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        elif line is not None:
            location = f"line {line}: "
        super().__init__(f"{location}{message}")


class FieldValidationError(InputError):
    """字段取值越界，带字段名"""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ConfigError(FieldValidationError):
    """配置项不合法（field 为点分路径，如 crf.iterations）"""


class FrameError(InputError):
    """某一帧无法处理，带时间戳"""

    def __init__(self, timestamp: float, message: str):
        self.timestamp = timestamp
        super().__init__(f"frame t={timestamp:.6f}: {message}")


class InvariantViolation(AcousticMapError, RuntimeError):
    """内部不变量被破坏（程序错误）"""
