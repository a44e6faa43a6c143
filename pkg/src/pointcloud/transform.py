"""刚体变换：传感器系 -> 世界系"""
import numpy as np

from .frame import PointCloudFrame


def transform_points(xyz: np.ndarray, rotation_matrix: np.ndarray, translation) -> np.ndarray:
    return np.asarray(xyz, dtype=np.float64) @ np.asarray(rotation_matrix).T + np.asarray(translation, dtype=np.float64)


def to_world(frame: PointCloudFrame) -> PointCloudFrame:
    """p -> R·p + t，颜色不变。已在世界系的帧原样返回。"""
    if frame.in_world:
        return frame
    world = transform_points(frame.xyz, frame.pose.rotation_matrix(), frame.pose.translation)
    return PointCloudFrame(world, frame.rgb, frame.pose, frame.timestamp, True, frame.source, frame.dropped)
