"""
相机模型

像平面位于距传感器 F（像素）处。点坐标先按 meters_to_pixels 换算到像素单位，
横纵坐标再平移到主点 (X_c, Y_c)，然后代入透视投影公式。
"""
from dataclasses import dataclass
from typing import Any, Dict, Tuple

import numpy as np

from schema.errors import FieldValidationError


@dataclass(frozen=True)
class CameraModel:
    """针孔相机（默认 Kinect 级内参）"""
    focal: float = 525.0                # F，像素
    width: int = 640
    height: int = 480
    cx: float = 319.5                   # 主点 X_c，像素
    cy: float = 239.5                   # 主点 Y_c，像素
    meters_to_pixels: float = 1000.0    # 传感器平面尺度

    def __post_init__(self):
        if not self.focal > 0:
            raise FieldValidationError("camera.focal", f"must be > 0, got {self.focal}")
        if int(self.width) <= 0 or int(self.height) <= 0:
            raise FieldValidationError("camera.width", f"image size must be positive, got {self.width}x{self.height}")
        if not (0.0 <= self.cx < self.width) or not (0.0 <= self.cy < self.height):
            raise FieldValidationError("camera.cx", f"principal point ({self.cx}, {self.cy}) outside the image")
        if not self.meters_to_pixels > 0:
            raise FieldValidationError("camera.meters_to_pixels", f"must be > 0, got {self.meters_to_pixels}")

    @property
    def shape(self) -> Tuple[int, int]:
        return (int(self.height), int(self.width))

    def to_pixel_units(self, xyz: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """传感器系米制坐标 -> 像平面像素单位 (X, Y, Z)。"""
        xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
        scale = self.meters_to_pixels
        return xyz[:, 0] * scale + self.cx, xyz[:, 1] * scale + self.cy, xyz[:, 2] * scale

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CameraModel":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__ if k in data})
