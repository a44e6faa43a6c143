"""
合成深度相机

在视场内按规则网格发射射线，与房间内表面及物体盒子求交（slab 法，全部向量化），
返回传感器光学系下的彩色点及每点真值标签。同一 seed 结果逐位一致。
"""
import math
from typing import Sequence, Tuple, Union

import numpy as np

from pointcloud.frame import PointCloudFrame, Pose
from schema.errors import FieldValidationError
from schema.labels import SemanticLabel

from .scene import SceneSpec, SensorSpec

SeedLike = Union[int, Sequence[int], np.random.SeedSequence]


def ray_directions(sensor: SensorSpec) -> np.ndarray:
    """光学系单位射线方向 (N, 3)，按行优先排列。"""
    rows, cols = sensor.ray_grid()
    tan_h = math.tan(math.radians(sensor.hfov_deg) / 2)
    tan_v = math.tan(math.radians(sensor.vfov_deg) / 2)
    u = ((np.arange(cols) + 0.5) / cols * 2.0 - 1.0) * tan_h
    v = ((np.arange(rows) + 0.5) / rows * 2.0 - 1.0) * tan_v
    uu, vv = np.meshgrid(u, v)
    directions = np.stack([uu.ravel(), vv.ravel(), np.ones(uu.size)], axis=1)
    return directions / np.linalg.norm(directions, axis=1, keepdims=True)


def _room_exit(origin: np.ndarray, directions: np.ndarray, extents: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """射线离开房间的距离和所在轴"""
    with np.errstate(divide="ignore", invalid="ignore"):
        bound = np.where(directions > 0, extents, 0.0)
        t = np.where(directions != 0, (bound - origin) / directions, np.inf)
    axis = np.argmin(t, axis=1)
    return t[np.arange(t.shape[0]), axis], axis


def _box_entry(origin: np.ndarray, directions: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """每条射线最近的盒子入射距离及盒子下标（无交点为 inf / -1）"""
    n = directions.shape[0]
    if lower.shape[0] == 0:
        return np.full(n, np.inf), np.full(n, -1, dtype=np.int64)

    d = directions[:, None, :]
    parallel = d == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (lower[None] - origin) / d
        t2 = (upper[None] - origin) / d
    inside_slab = (origin >= lower) & (origin <= upper)
    t_lo = np.where(parallel, np.where(inside_slab[None], -np.inf, np.inf), np.minimum(t1, t2))
    t_hi = np.where(parallel, np.where(inside_slab[None], np.inf, -np.inf), np.maximum(t1, t2))
    near = t_lo.max(axis=2)
    far = t_hi.min(axis=2)
    near = np.where((near <= far) & (near > 0), near, np.inf)
    best = np.argmin(near, axis=1)
    t = near[np.arange(n), best]
    return t, np.where(np.isfinite(t), best, -1)


def render_frame(
    scene: SceneSpec,
    sensor: SensorSpec,
    pose: Pose,
    seed: SeedLike = 0,
    timestamp: float = 0.0,
) -> Tuple[PointCloudFrame, np.ndarray]:
    """
    渲染一帧
    Returns:
        (frame, labels)：frame.xyz 在光学系下，labels 为每点真值 (uint8)
    """
    origin = pose.origin
    if not scene.contains(origin):
        raise FieldValidationError("pose.translation", f"sensor at {tuple(origin)} is outside the room")
    rng = np.random.default_rng(seed)

    local = ray_directions(sensor)
    world = local @ pose.rotation_matrix().T
    n = local.shape[0]

    extents = np.asarray(scene.extents, dtype=np.float64)
    t_room, axis = _room_exit(origin, world, extents)
    lower, upper = scene.box_arrays()
    t_box, box = _box_entry(origin, world, lower, upper)
    on_box = t_box < t_room
    distance = np.where(on_box, t_box, t_room)

    labels = np.full(n, int(SemanticLabel.WALL), dtype=np.uint8)
    colors = np.tile(np.asarray(scene.wall_color, dtype=np.uint8), (n, 1))
    upward = world[np.arange(n), 2] > 0
    floor = (axis == 2) & ~upward
    ceiling = (axis == 2) & upward
    labels[floor] = SemanticLabel.FLOOR
    labels[ceiling] = SemanticLabel.CEILING
    colors[floor] = scene.floor_color
    colors[ceiling] = scene.ceiling_color
    if scene.boxes:
        box_labels = np.array([int(b.label) for b in scene.boxes], dtype=np.uint8)
        box_colors = np.array([b.color for b in scene.boxes], dtype=np.uint8)
        labels[on_box] = box_labels[box[on_box]]
        colors[on_box] = box_colors[box[on_box]]

    # 噪声与丢点的随机数对所有射线都抽取，保证结果只依赖 seed
    sigma = sensor.depth_noise + sensor.depth_noise_proportional * distance
    noisy = distance + rng.standard_normal(n) * sigma
    keep = distance <= sensor.max_range
    if scene.boxes:
        dropout = np.array([b.dropout for b in scene.boxes], dtype=np.float64)
        draws = rng.random(n)
        keep &= ~(on_box & (draws < dropout[np.where(on_box, box, 0)]))
    keep &= noisy > 0

    xyz = local[keep] * noisy[keep, None]
    frame = PointCloudFrame(xyz=xyz, rgb=colors[keep], pose=pose, timestamp=timestamp, source="synthetic")
    return frame, labels[keep]
