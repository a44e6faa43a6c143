"""
语义标签

封闭的 9 类标签集合：8 个与室内声学相关的物体类别 + Unknown。
整数编码 0-8 固定不变，会被写入标签图、真值文件和地图快照。
"""
from enum import IntEnum
from typing import Dict, List


class SemanticLabel(IntEnum):
    """语义标签（编码稳定）"""
    WALL = 0
    FLOOR = 1
    CEILING = 2
    WINDOW = 3
    FURNITURE = 4
    DOOR = 5
    ELECTRONICS = 6
    CHAIR = 7
    UNKNOWN = 8

    @property
    def display_name(self) -> str:
        return self.name.capitalize()

    @classmethod
    def from_name(cls, name: str) -> "SemanticLabel":
        """按名称解析（大小写不敏感）。"""
        key = str(name or "").strip().upper().replace(" ", "_")
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"未知语义标签: {name!r}") from None


NUM_LABELS = len(SemanticLabel)

# 8 个物体标签，不含 Unknown
OBJECT_LABELS: List[SemanticLabel] = [label for label in SemanticLabel if label != SemanticLabel.UNKNOWN]

LABEL_BY_NAME: Dict[str, SemanticLabel] = {label.display_name: label for label in SemanticLabel}
