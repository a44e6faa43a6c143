"""Projection 模块 - 点云到图像的透视投影、填洞与标签回传"""
from .backproject import backproject_labels
from .camera import CameraModel
from .debug import dump_reconstructed_image, load_correspondence, save_correspondence
from .holes import FillReport, fill_holes, fill_holes_report
from .image import NO_POINT, ReconstructedImage
from .project import perspective_project, project_frame, project_points, round_half_away

__all__ = [
    "CameraModel",
    "ReconstructedImage",
    "NO_POINT",
    "perspective_project",
    "project_points",
    "project_frame",
    "round_half_away",
    "FillReport",
    "fill_holes",
    "fill_holes_report",
    "backproject_labels",
    "dump_reconstructed_image",
    "save_correspondence",
    "load_correspondence",
]
