"""
轨迹文件

每行 "timestamp tx ty tz qx qy qz qw"，# 开头为注释。
位姿按时间戳精确匹配，不做插值。
"""
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

from schema.errors import FrameError, ParseError

from .frame import Pose

# 时间戳按微秒归一化后作为键
TIMESTAMP_DECIMALS = 6
# 文本往返会损失末位精度，超过该偏差视为坏数据
_QUAT_PARSE_TOLERANCE = 1e-6


def timestamp_key(timestamp: float) -> float:
    return round(float(timestamp), TIMESTAMP_DECIMALS)


class Trajectory:
    """时间戳 -> 位姿"""

    def __init__(self, poses: Optional[Dict[float, Pose]] = None):
        self._poses: Dict[float, Pose] = {}
        for timestamp, pose in (poses or {}).items():
            self.add(timestamp, pose)

    def add(self, timestamp: float, pose: Pose):
        self._poses[timestamp_key(timestamp)] = pose

    def lookup(self, timestamp: float) -> Pose:
        """精确匹配时间戳，缺失时抛 FrameError。"""
        pose = self._poses.get(timestamp_key(timestamp))
        if pose is None:
            raise FrameError(timestamp, "no pose with this exact timestamp in trajectory")
        return pose

    def __contains__(self, timestamp: float) -> bool:
        return timestamp_key(timestamp) in self._poses

    def __len__(self) -> int:
        return len(self._poses)

    def items(self) -> Iterator[Tuple[float, Pose]]:
        return iter(sorted(self._poses.items()))

    def timestamps(self) -> List[float]:
        return sorted(self._poses)


def _normalized_quaternion(values, path: str, line_no: int) -> Tuple[float, ...]:
    quat = np.asarray(values, dtype=np.float64)
    norm = float(np.linalg.norm(quat))
    if not np.isfinite(norm) or abs(norm - 1.0) > _QUAT_PARSE_TOLERANCE:
        raise ParseError(f"quaternion norm {norm} is not 1", path=path, line=line_no)
    return tuple(float(q) for q in quat / norm)


def load_trajectory(path: Union[str, Path]) -> Trajectory:
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"轨迹文件不存在: {file_path}")
    trajectory = Trajectory()
    for line_no, raw in enumerate(file_path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 8:
            raise ParseError(f"expected 8 values, got {len(tokens)}", path=str(file_path), line=line_no)
        try:
            values = [float(token) for token in tokens]
        except ValueError:
            raise ParseError(f"non-numeric value in {raw.strip()!r}", path=str(file_path), line=line_no) from None
        if not all(np.isfinite(values)):
            raise ParseError("non-finite value", path=str(file_path), line=line_no)
        timestamp = values[0]
        if timestamp in trajectory:
            raise ParseError(f"duplicate timestamp {timestamp}", path=str(file_path), line=line_no)
        rotation = _normalized_quaternion(values[4:8], str(file_path), line_no)
        trajectory.add(timestamp, Pose(tuple(values[1:4]), rotation))
    return trajectory


def save_trajectory(trajectory: Union[Trajectory, List[Tuple[float, Pose]]], path: Union[str, Path]) -> str:
    items = trajectory.items() if isinstance(trajectory, Trajectory) else sorted(trajectory, key=lambda item: item[0])
    lines = ["# timestamp tx ty tz qx qy qz qw"]
    for timestamp, pose in items:
        values = [timestamp, *pose.translation, *pose.rotation]
        lines.append(" ".join(repr(float(v)) for v in values))
    file_path = Path(path)
    file_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(file_path)
