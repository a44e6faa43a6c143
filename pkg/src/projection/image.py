"""重建图像：颜色 + 深度 + 点/像素对应关系 + 空洞标记"""
from dataclasses import dataclass, replace

import numpy as np

NO_POINT = -1


@dataclass(frozen=True)
class ReconstructedImage:
    """
    由点云透视投影得到的图像
    - color: (H, W, 3) uint8
    - depth: (H, W) float64，空像素为 NaN
    - point_index: (H, W) int64，占据该像素的源点下标，无则为 -1
    - hole: (H, W) bool，填洞前与 point_index == -1 等价；填洞后已填像素清除标记
    - point_pixel: (N, 2) int64，每个源点投影到的 (row, col)，越界为 (-1, -1)
    """
    color: np.ndarray
    depth: np.ndarray
    point_index: np.ndarray
    hole: np.ndarray
    point_pixel: np.ndarray
    out_of_bounds: int = 0

    @property
    def height(self) -> int:
        return int(self.color.shape[0])

    @property
    def width(self) -> int:
        return int(self.color.shape[1])

    @property
    def shape(self):
        return (self.height, self.width)

    @property
    def observed(self) -> np.ndarray:
        """有点对应的像素"""
        return self.point_index != NO_POINT

    @property
    def hole_count(self) -> int:
        return int(self.hole.sum())

    def with_color(self, color: np.ndarray, hole: np.ndarray) -> "ReconstructedImage":
        return replace(self, color=color, hole=hole)
