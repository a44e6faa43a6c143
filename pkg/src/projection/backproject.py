"""像素标签回传到点：占据像素的点、被遮挡的点都取其投影像素的标签，越界点为 Unknown。"""
import numpy as np

from pointcloud.frame import PointCloudFrame
from schema.errors import FieldValidationError
from schema.labels import SemanticLabel
from segmentation.label_field import LabelField

from .image import ReconstructedImage


def backproject_labels(img: ReconstructedImage, labels: LabelField, frame: PointCloudFrame) -> np.ndarray:
    """返回 (N,) int64 的 SemanticLabel 编码。"""
    if labels.shape != img.shape:
        raise FieldValidationError("labels", f"label field {labels.shape} does not match image {img.shape}")
    if img.point_pixel.shape[0] != len(frame):
        raise FieldValidationError(
            "frame", f"image was projected from {img.point_pixel.shape[0]} points, frame has {len(frame)}"
        )
    result = np.full(len(frame), int(SemanticLabel.UNKNOWN), dtype=np.int64)
    inside = img.point_pixel[:, 0] >= 0
    result[inside] = labels.argmax_at(img.point_pixel[inside, 0], img.point_pixel[inside, 1])
    return result
