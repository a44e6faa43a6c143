"""
点云帧与位姿

帧在解析后视为不可变值：数组被设为只读，可在线程间共享。
传感器坐标系为光学系：x 向右，y 向下，z 朝前（深度）。
"""
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from schema.errors import FieldValidationError

QUATERNION_TOLERANCE = 1e-9


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Pose:
    """传感器位姿：平移 (m) + 单位四元数 (qx, qy, qz, qw)"""
    translation: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    rotation: Tuple[float, float, float, float] = (0.0, 0.0, 0.0, 1.0)

    def __post_init__(self):
        translation = tuple(float(v) for v in self.translation)
        rotation = tuple(float(v) for v in self.rotation)
        if len(translation) != 3 or not all(np.isfinite(translation)):
            raise FieldValidationError("pose.translation", f"expected 3 finite values, got {self.translation}")
        if len(rotation) != 4 or not all(np.isfinite(rotation)):
            raise FieldValidationError("pose.rotation", f"expected 4 finite values, got {self.rotation}")
        norm = float(np.linalg.norm(rotation))
        if abs(norm - 1.0) > QUATERNION_TOLERANCE:
            raise FieldValidationError("pose.rotation", f"quaternion norm {norm!r} is not 1")
        object.__setattr__(self, "translation", translation)
        object.__setattr__(self, "rotation", rotation)

    @classmethod
    def identity(cls) -> "Pose":
        return cls()

    @classmethod
    def from_rotation(cls, translation, rotation: Rotation) -> "Pose":
        quat = rotation.as_quat()
        quat = quat / np.linalg.norm(quat)
        return cls(tuple(translation), tuple(float(q) for q in quat))

    @classmethod
    def from_matrix(cls, translation, matrix: np.ndarray) -> "Pose":
        return cls.from_rotation(translation, Rotation.from_matrix(matrix))

    @property
    def origin(self) -> np.ndarray:
        return np.asarray(self.translation, dtype=np.float64)

    def as_rotation(self) -> Rotation:
        return Rotation.from_quat(self.rotation)

    def rotation_matrix(self) -> np.ndarray:
        return self.as_rotation().as_matrix()


@dataclass(frozen=True)
class PointCloudFrame:
    """带位姿的彩色点云帧"""
    xyz: np.ndarray                     # (N, 3) float64，米
    rgb: np.ndarray                     # (N, 3) uint8
    pose: Pose = field(default_factory=Pose)
    timestamp: float = 0.0              # 单调递增秒
    in_world: bool = False              # xyz 是否已变换到世界坐标系
    source: Optional[str] = None        # 来源文件（用于报错定位）
    dropped: int = 0                    # 解析时丢弃的无效点数

    def __post_init__(self):
        xyz = np.array(self.xyz, dtype=np.float64).reshape(-1, 3)
        rgb = np.array(self.rgb, dtype=np.uint8).reshape(-1, 3)
        if xyz.shape[0] != rgb.shape[0]:
            raise FieldValidationError("frame.rgb", f"{rgb.shape[0]} colors for {xyz.shape[0]} points")
        object.__setattr__(self, "xyz", _readonly(xyz))
        object.__setattr__(self, "rgb", _readonly(rgb))
        object.__setattr__(self, "timestamp", float(self.timestamp))

    def __len__(self) -> int:
        return int(self.xyz.shape[0])

    @property
    def empty(self) -> bool:
        return len(self) == 0

    def with_pose(self, pose: Pose) -> "PointCloudFrame":
        return PointCloudFrame(self.xyz, self.rgb, pose, self.timestamp, self.in_world, self.source, self.dropped)


def valid_point_mask(xyz: np.ndarray) -> np.ndarray:
    """可投影点：坐标有限且 z > 0。"""
    xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
    return np.isfinite(xyz).all(axis=1) & (xyz[:, 2] > 0.0)
