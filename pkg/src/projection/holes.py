"""
空洞填充（均值滤波）

每轮对所有“窗口内至少有一个非空洞像素”的空洞，同时（Jacobi 式）赋予
窗口内非空洞像素的算术平均色；已填像素在下一轮参与计算。
非空洞像素从不修改，已填像素的 point_index 仍为 -1。
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import ndimage

from schema.errors import FieldValidationError

from .image import ReconstructedImage


@dataclass
class FillReport:
    """填洞统计"""
    iterations: int = 0
    filled: int = 0
    remaining_holes: int = 0
    fillable_remaining: bool = False


def _neighbor_sums(color: np.ndarray, known: np.ndarray, kernel: int) -> Tuple[np.ndarray, np.ndarray]:
    weights = np.ones((kernel, kernel), dtype=np.int64)
    counts = ndimage.correlate(known.astype(np.int64), weights, mode="constant", cval=0)
    masked = color.astype(np.int64) * known[..., None]
    sums = np.stack(
        [ndimage.correlate(masked[..., c], weights, mode="constant", cval=0) for c in range(color.shape[2])],
        axis=2,
    )
    return sums, counts


def fill_holes_report(img: ReconstructedImage, kernel: int = 5, max_iters: int = 8) -> Tuple[ReconstructedImage, FillReport]:
    if int(kernel) < 3 or int(kernel) % 2 == 0:
        raise FieldValidationError("holes.kernel", f"must be odd and >= 3, got {kernel}")
    if int(max_iters) < 0:
        raise FieldValidationError("holes.max_iters", f"must be >= 0, got {max_iters}")

    color = img.color.copy()
    hole = img.hole.copy()
    report = FillReport()
    while True:
        known = ~hole
        sums, counts = _neighbor_sums(color, known, kernel)
        fillable = hole & (counts > 0)
        if not fillable.any() or report.iterations >= max_iters:
            report.fillable_remaining = bool(fillable.any())
            break
        n = counts[fillable][:, None]
        # 整数四舍五入：floor(sum / n + 0.5)
        color[fillable] = ((2 * sums[fillable] + n) // (2 * n)).astype(np.uint8)
        hole[fillable] = False
        report.iterations += 1
        report.filled += int(fillable.sum())

    report.remaining_holes = int(hole.sum())
    return img.with_color(color, hole), report


def fill_holes(img: ReconstructedImage, kernel: int = 5, max_iters: int = 8) -> ReconstructedImage:
    """均值滤波填洞，返回新图像。"""
    filled, _ = fill_holes_report(img, kernel, max_iters)
    return filled
