"""
帧来源

FrameTask 只描述一帧（序号、名称、时间戳），真正的解析在 load() 中进行，
以便在工作线程里提前准备。任务按 (timestamp, stem) 排序。
"""
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from pointcloud import PointCloudFrame, Trajectory, load_trajectory, parse_frame, peek_timestamp
from schema.errors import FrameError
from synthetic.dataset import FRAMES_DIR, LABELS_DIR, SENSOR_FILE, TRAJECTORY_FILE, load_truth
from synthetic.scene import SensorSpec, load_sensor

CLOUD_SUFFIXES = (".ply", ".pcd")

Loaded = Tuple[PointCloudFrame, Optional[np.ndarray]]


@dataclass(frozen=True)
class FrameTask:
    index: int
    stem: str
    timestamp: float
    loader: Callable[[], Loaded]

    def load(self) -> Loaded:
        """返回 (frame, 每点真值标签或 None)"""
        return self.loader()


class FrameSource:
    """帧来源基类"""
    sensor: Optional[SensorSpec] = None

    def tasks(self) -> List[FrameTask]:
        raise NotImplementedError

    def __iter__(self) -> Iterator[FrameTask]:
        return iter(self.tasks())

    def __len__(self) -> int:
        return len(self.tasks())


class DirectorySource(FrameSource):
    """
    目录中的 PLY/PCD 帧 + 轨迹文件
    truth_dir 下若有 <stem>.u8 则作为真值标签（oracle 标签源需要）。
    """

    def __init__(self, frames_dir: Union[str, Path], trajectory: Optional[Trajectory] = None,
                 truth_dir: Optional[Union[str, Path]] = None, sensor: Optional[SensorSpec] = None,
                 strict: bool = False):
        self.frames_dir = Path(frames_dir)
        if not self.frames_dir.is_dir():
            raise FileNotFoundError(f"帧目录不存在: {self.frames_dir}")
        self.trajectory = trajectory
        self.truth_dir = Path(truth_dir) if truth_dir else None
        self.sensor = sensor
        self.strict = strict
        self._tasks: Optional[List[FrameTask]] = None

    def _loader(self, path: Path, stem: str) -> Callable[[], Loaded]:
        def load() -> Loaded:
            frame = parse_frame(path, trajectory=self.trajectory, strict=self.strict)
            truth = None
            truth_path = self.truth_dir / f"{stem}.u8" if self.truth_dir else None
            if truth_path is not None and truth_path.exists():
                if frame.dropped:
                    raise FrameError(frame.timestamp, f"{path}: truth labels cannot be aligned after dropping points")
                truth = load_truth(truth_path, count=len(frame))
            return frame, truth
        return load

    def tasks(self) -> List[FrameTask]:
        if self._tasks is None:
            paths = sorted(p for p in self.frames_dir.iterdir() if p.suffix.lower() in CLOUD_SUFFIXES)
            entries = []
            for path in paths:
                timestamp = peek_timestamp(path)
                entries.append((math.inf if timestamp is None else timestamp, path.stem, path))
            entries.sort(key=lambda item: (item[0], item[1]))
            self._tasks = [
                FrameTask(index, stem, timestamp, self._loader(path, stem))
                for index, (timestamp, stem, path) in enumerate(entries)
            ]
            logger.debug(f"{self.frames_dir}: {len(self._tasks)} frames")
        return self._tasks


class MemorySource(FrameSource):
    """内存中的帧（测试与 bench 用）"""

    def __init__(self, frames: Sequence[Loaded], sensor: Optional[SensorSpec] = None):
        ordered = sorted(enumerate(frames), key=lambda item: (item[1][0].timestamp, item[0]))
        self._tasks = [
            FrameTask(index, f"frame_{index:06d}", frame.timestamp, (lambda f=frame, t=truth: (f, t)))
            for index, (_, (frame, truth)) in enumerate(ordered)
        ]
        self.sensor = sensor

    def tasks(self) -> List[FrameTask]:
        return self._tasks


def open_source(path: Union[str, Path], trajectory: Optional[Union[str, Path]] = None,
                strict: bool = False) -> FrameSource:
    """
    path 为合成数据集目录（含 trajectory.txt 与 frames/）或纯帧目录；
    trajectory 缺省时在数据集目录中查找，仍没有则使用帧头中的位姿。
    """
    root = Path(path)
    if not root.exists():
        raise FileNotFoundError(f"帧来源不存在: {root}")
    if (root / FRAMES_DIR).is_dir():
        trajectory_path = Path(trajectory) if trajectory else root / TRAJECTORY_FILE
        sensor = load_sensor(root / SENSOR_FILE) if (root / SENSOR_FILE).exists() else None
        return DirectorySource(
            root / FRAMES_DIR,
            trajectory=load_trajectory(trajectory_path) if trajectory_path.exists() else None,
            truth_dir=root / LABELS_DIR,
            sensor=sensor,
            strict=strict,
        )
    return DirectorySource(root, trajectory=load_trajectory(trajectory) if trajectory else None, strict=strict)
