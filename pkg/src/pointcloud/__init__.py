"""Pointcloud 模块 - 点云帧、位姿、文件格式与坐标变换"""
from .frame import PointCloudFrame, Pose, valid_point_mask
from .frame_io import CloudFormat, parse_frame, peek_timestamp, write_frame
from .pcd import read_pcd, write_pcd
from .ply import read_ply, write_ply
from .trajectory import Trajectory, load_trajectory, save_trajectory, timestamp_key
from .transform import to_world, transform_points

__all__ = [
    "PointCloudFrame",
    "Pose",
    "valid_point_mask",
    "CloudFormat",
    "parse_frame",
    "peek_timestamp",
    "write_frame",
    "read_ply",
    "write_ply",
    "read_pcd",
    "write_pcd",
    "Trajectory",
    "load_trajectory",
    "save_trajectory",
    "timestamp_key",
    "to_world",
    "transform_points",
]
