"""
透视投影

X' = (X - X_c) * (F / Z) + X_c
Y' = (Y - Y_c) * (F / Z) + Y_c
（X, Y, Z 为像素单位）。多个点落到同一像素时深度最小者占据该像素。
"""
from typing import Tuple

import numpy as np
from loguru import logger

from pointcloud.frame import PointCloudFrame

from .camera import CameraModel
from .image import NO_POINT, ReconstructedImage


def perspective_project(x: np.ndarray, y: np.ndarray, z: np.ndarray, cam: CameraModel) -> Tuple[np.ndarray, np.ndarray]:
    """像素单位坐标的透视投影（未取整）。"""
    ratio = cam.focal / np.asarray(z, dtype=np.float64)
    x_proj = (np.asarray(x, dtype=np.float64) - cam.cx) * ratio + cam.cx
    y_proj = (np.asarray(y, dtype=np.float64) - cam.cy) * ratio + cam.cy
    return x_proj, y_proj


def round_half_away(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def project_points(xyz: np.ndarray, cam: CameraModel) -> np.ndarray:
    """
    传感器系点 -> 像素 (row, col)，越界或 z <= 0 记为 (-1, -1)。
    """
    xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
    pixels = np.full((xyz.shape[0], 2), NO_POINT, dtype=np.int64)
    if xyz.shape[0] == 0:
        return pixels
    x, y, z = cam.to_pixel_units(xyz)
    front = np.isfinite(xyz).all(axis=1) & (z > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_proj, y_proj = perspective_project(x, y, np.where(front, z, 1.0), cam)
    cols = round_half_away(x_proj)
    rows = round_half_away(y_proj)
    inside = front & (cols >= 0) & (cols < cam.width) & (rows >= 0) & (rows < cam.height)
    pixels[inside, 0] = rows[inside].astype(np.int64)
    pixels[inside, 1] = cols[inside].astype(np.int64)
    return pixels


def project_frame(frame: PointCloudFrame, cam: CameraModel) -> ReconstructedImage:
    """把一帧点云投影成图像，并保留点与像素的对应关系。"""
    height, width = cam.shape
    color = np.zeros((height, width, 3), dtype=np.uint8)
    depth = np.full((height, width), np.nan, dtype=np.float64)
    point_index = np.full((height, width), NO_POINT, dtype=np.int64)

    pixels = project_points(frame.xyz, cam)
    inside = pixels[:, 0] >= 0
    out_of_bounds = int((~inside).sum())
    if out_of_bounds:
        logger.debug("frame t={}: {} of {} points projected out of bounds", frame.timestamp, out_of_bounds, len(frame))

    candidates = np.flatnonzero(inside)
    if candidates.size:
        linear = pixels[candidates, 0] * width + pixels[candidates, 1]
        z = frame.xyz[candidates, 2]
        # 按 (像素, 深度, 下标) 排序，每个像素取第一个即最近点
        order = np.lexsort((candidates, z, linear))
        sorted_linear = linear[order]
        _, first = np.unique(sorted_linear, return_index=True)
        winners = candidates[order[first]]
        winner_pixels = sorted_linear[first]
        rows, cols = np.divmod(winner_pixels, width)
        point_index[rows, cols] = winners
        depth[rows, cols] = frame.xyz[winners, 2]
        color[rows, cols] = frame.rgb[winners]

    hole = point_index == NO_POINT
    pixels.setflags(write=False)
    return ReconstructedImage(
        color=color,
        depth=depth,
        point_index=point_index,
        hole=hole,
        point_pixel=pixels,
        out_of_bounds=out_of_bounds,
    )
