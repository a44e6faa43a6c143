"""Synthetic 模块 - 合成房间、路径与 Kinect 类点云"""
from .dataset import SyntheticDataset, frame_stem, load_dataset, load_truth, save_truth, write_dataset
from .noise import corrupt_labels
from .render import ray_directions, render_frame
from .scene import SceneBox, SceneSpec, SensorSpec, load_scene, load_sensor
from .trajectory import (
    FRAME_RATE_HZ,
    OPTICAL_TO_BODY,
    Waypoint,
    frame_timestamp,
    generate_trajectory,
    load_waypoints,
    loop_waypoints,
    parse_waypoints,
    sensor_pose,
)

__all__ = [
    "SceneBox",
    "SceneSpec",
    "SensorSpec",
    "load_scene",
    "load_sensor",
    "render_frame",
    "ray_directions",
    "corrupt_labels",
    "Waypoint",
    "FRAME_RATE_HZ",
    "OPTICAL_TO_BODY",
    "frame_timestamp",
    "sensor_pose",
    "generate_trajectory",
    "parse_waypoints",
    "load_waypoints",
    "loop_waypoints",
    "SyntheticDataset",
    "frame_stem",
    "write_dataset",
    "load_dataset",
    "save_truth",
    "load_truth",
]
