"""
路径生成

航点 (x, y, yaw) 之间位置线性插值、朝向球面插值 (Slerp)，高度固定为传感器高度。
每段 frames_per_segment 帧（含两端），相邻段共享连接帧；时间戳为 帧号 / 30 s。
"""
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, List, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from pointcloud.frame import Pose
from schema.errors import FieldValidationError, ParseError

from .scene import SceneSpec

FRAME_RATE_HZ = 30.0

# 光学系 (x 右, y 下, z 前) -> 机体系 (x 前, y 左, z 上)
OPTICAL_TO_BODY = np.array([
    [0.0, 0.0, 1.0],
    [-1.0, 0.0, 0.0],
    [0.0, -1.0, 0.0],
])


@dataclass(frozen=True)
class Waypoint:
    x: float
    y: float
    yaw_deg: float = 0.0


def heading_rotation(yaw_deg: float) -> Rotation:
    return Rotation.from_euler("z", yaw_deg, degrees=True)


def sensor_pose(position: Sequence[float], heading: Rotation) -> Pose:
    """机体朝向 + 位置 -> 光学系到世界系的位姿"""
    matrix = heading.as_matrix() @ OPTICAL_TO_BODY
    return Pose.from_matrix(tuple(float(v) for v in position), matrix)


def frame_timestamp(index: int) -> float:
    return index / FRAME_RATE_HZ


def generate_trajectory(
    scene: SceneSpec,
    waypoints: Sequence[Waypoint],
    frames_per_segment: int,
    height: float = 1.08,
) -> List[Tuple[float, Pose]]:
    """返回 [(timestamp, pose), ...]"""
    if not waypoints:
        raise FieldValidationError("trajectory.waypoints", "at least one waypoint required")
    if frames_per_segment < 1 or (len(waypoints) > 1 and frames_per_segment < 2):
        raise FieldValidationError("trajectory.frames_per_segment", f"too small: {frames_per_segment}")
    for index, wp in enumerate(waypoints):
        if not scene.contains((wp.x, wp.y, height)):
            raise FieldValidationError(f"trajectory.waypoints[{index}]", f"({wp.x}, {wp.y}, {height}) is outside the room")

    poses: List[Pose] = []
    if len(waypoints) == 1:
        wp = waypoints[0]
        pose = sensor_pose((wp.x, wp.y, height), heading_rotation(wp.yaw_deg))
        poses = [pose] * frames_per_segment
    else:
        fractions = np.linspace(0.0, 1.0, frames_per_segment)
        for index, (a, b) in enumerate(zip(waypoints[:-1], waypoints[1:])):
            slerp = Slerp([0.0, 1.0], Rotation.concatenate([heading_rotation(a.yaw_deg), heading_rotation(b.yaw_deg)]))
            # 除第一段外跳过起点（与上一段终点重合）
            for f in fractions if index == 0 else fractions[1:]:
                position = (a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f, height)
                poses.append(sensor_pose(position, slerp([f])[0]))

    return [(frame_timestamp(i), pose) for i, pose in enumerate(poses)]


def parse_waypoints(data: Any) -> List[Waypoint]:
    """[[x, y, yaw_deg], ...] 或 [{"x":.., "y":.., "yaw_deg":..}, ...]"""
    if not isinstance(data, list):
        raise FieldValidationError("trajectory.waypoints", "expected a list")
    waypoints = []
    for index, item in enumerate(data):
        try:
            if isinstance(item, dict):
                wp = Waypoint(float(item["x"]), float(item["y"]), float(item.get("yaw_deg", 0.0)))
            else:
                wp = Waypoint(*(float(v) for v in item))
        except (KeyError, TypeError, ValueError):
            raise FieldValidationError(f"trajectory.waypoints[{index}]", f"bad waypoint {item!r}") from None
        if not all(math.isfinite(v) for v in (wp.x, wp.y, wp.yaw_deg)):
            raise FieldValidationError(f"trajectory.waypoints[{index}]", "non-finite value")
        waypoints.append(wp)
    return waypoints


def load_waypoints(path: Union[str, Path]) -> Tuple[List[Waypoint], int]:
    """航点文件: {"waypoints": [...], "frames_per_segment": n}"""
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"航点文件不存在: {file_path}")
    try:
        data = json.loads(file_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, path=str(file_path), line=e.lineno) from None
    if not isinstance(data, dict):
        raise FieldValidationError("trajectory", "expected an object")
    return parse_waypoints(data.get("waypoints")), int(data.get("frames_per_segment", 10))


def loop_waypoints(scene: SceneSpec, margin: float = 1.0, turns: int = 1) -> List[Waypoint]:
    """沿房间内侧绕圈，朝向房间中心"""
    ex, ey, _ = scene.extents
    corners = [(margin, margin), (ex - margin, margin), (ex - margin, ey - margin), (margin, ey - margin)]
    cx, cy = ex / 2, ey / 2
    points = corners * turns + [corners[0]]
    return [Waypoint(x, y, math.degrees(math.atan2(cy - y, cx - x))) for x, y in points]
