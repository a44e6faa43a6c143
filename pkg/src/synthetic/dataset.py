"""
合成数据集读写

目录结构：
    scene.json / sensor.json     场景与传感器配置副本
    trajectory.txt               每帧一行 "timestamp tx ty tz qx qy qz qw"
    frames/frame_000000.ply      二进制 PLY，头部带 timestamp / pose 注释
    labels/frame_000000.u8       每点真值标签，顺序与 PLY 顶点一致
"""
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from pointcloud import Pose, Trajectory, load_trajectory, save_trajectory, write_frame
from schema.errors import FieldValidationError, ParseError

from .render import render_frame
from .scene import SceneSpec, SensorSpec, load_scene, load_sensor, save_json

FRAMES_DIR = "frames"
LABELS_DIR = "labels"
TRAJECTORY_FILE = "trajectory.txt"
SCENE_FILE = "scene.json"
SENSOR_FILE = "sensor.json"


def frame_stem(index: int) -> str:
    return f"frame_{index:06d}"


def save_truth(labels: np.ndarray, path: Union[str, Path]) -> str:
    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    file_path.write_bytes(np.asarray(labels, dtype=np.uint8).tobytes())
    return str(file_path)


def load_truth(path: Union[str, Path], count: Optional[int] = None) -> np.ndarray:
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"真值文件不存在: {file_path}")
    labels = np.frombuffer(file_path.read_bytes(), dtype=np.uint8).copy()
    if count is not None and labels.shape[0] != count:
        raise ParseError(f"{labels.shape[0]} labels for {count} points", path=str(file_path))
    return labels


@dataclass
class SyntheticDataset:
    """已写出的合成数据集"""
    directory: Path
    scene: SceneSpec
    sensor: SensorSpec
    trajectory: Trajectory
    stems: List[str]

    def frame_path(self, stem: str) -> Path:
        return self.directory / FRAMES_DIR / f"{stem}.ply"

    def truth_path(self, stem: str) -> Path:
        return self.directory / LABELS_DIR / f"{stem}.u8"

    def __len__(self) -> int:
        return len(self.stems)


def write_dataset(
    directory: Union[str, Path],
    scene: SceneSpec,
    sensor: SensorSpec,
    poses: Sequence[Tuple[float, Pose]],
    seed: int = 0,
    binary: bool = True,
) -> SyntheticDataset:
    """渲染全部位姿并写出数据集；第 i 帧使用种子 (seed, i)。"""
    if not poses:
        raise FieldValidationError("trajectory", "empty trajectory: nothing to simulate")
    root = Path(directory)
    (root / FRAMES_DIR).mkdir(parents=True, exist_ok=True)
    (root / LABELS_DIR).mkdir(parents=True, exist_ok=True)
    save_json(scene.to_dict(), root / SCENE_FILE)
    save_json(sensor.to_dict(), root / SENSOR_FILE)
    save_trajectory(list(poses), root / TRAJECTORY_FILE)

    stems = []
    total = 0
    for index, (timestamp, pose) in enumerate(poses):
        frame, labels = render_frame(scene, sensor, pose, seed=(seed, index), timestamp=timestamp)
        stem = frame_stem(index)
        write_frame(frame, root / FRAMES_DIR / f"{stem}.ply", binary=binary)
        save_truth(labels, root / LABELS_DIR / f"{stem}.u8")
        stems.append(stem)
        total += len(frame)
    logger.info(f"simulate: {len(stems)} frames, {total} points -> {root}")
    return load_dataset(root)


def load_dataset(directory: Union[str, Path]) -> SyntheticDataset:
    root = Path(directory)
    if not (root / TRAJECTORY_FILE).exists():
        raise FileNotFoundError(f"数据集缺少 {TRAJECTORY_FILE}: {root}")
    scene = load_scene(root / SCENE_FILE) if (root / SCENE_FILE).exists() else SceneSpec()
    sensor = load_sensor(root / SENSOR_FILE) if (root / SENSOR_FILE).exists() else SensorSpec()
    stems = sorted(p.stem for p in (root / FRAMES_DIR).glob("*.ply")) if (root / FRAMES_DIR).exists() else []
    return SyntheticDataset(
        directory=root,
        scene=scene,
        sensor=sensor,
        trajectory=load_trajectory(root / TRAJECTORY_FILE),
        stems=stems,
    )
