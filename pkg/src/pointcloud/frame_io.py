"""
帧解析入口

parse_frame 读取 PLY/PCD，附上位姿与时间戳，并丢弃无法投影的点
（非有限坐标或 z <= 0），丢弃数量记录在帧上并输出警告。
"""
from enum import Enum
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from loguru import logger

from schema.errors import FrameError, ParseError

from .frame import PointCloudFrame, Pose, valid_point_mask
from .pcd import read_pcd, write_pcd
from .ply import read_ply, write_ply
from .trajectory import Trajectory, timestamp_key


class CloudFormat(Enum):
    PLY = "ply"
    PCD = "pcd"

    @classmethod
    def from_path(cls, path: Union[str, Path]) -> "CloudFormat":
        suffix = Path(path).suffix.lower().lstrip(".")
        try:
            return cls(suffix)
        except ValueError:
            raise ParseError(f"unknown point cloud extension {suffix!r}", path=str(path)) from None


def _header_value(comments: List[str], key: str) -> Optional[List[str]]:
    for comment in comments:
        tokens = comment.split()
        if tokens and tokens[0] == key:
            return tokens[1:]
    return None


def _header_timestamp(comments: List[str], path: str) -> Optional[float]:
    values = _header_value(comments, "timestamp")
    if values is None:
        return None
    try:
        return float(values[0])
    except (IndexError, ValueError):
        raise ParseError("malformed timestamp comment", path=path) from None


def _header_pose(comments: List[str], path: str) -> Optional[Pose]:
    values = _header_value(comments, "pose")
    if values is None:
        return None
    try:
        numbers = [float(v) for v in values]
    except ValueError:
        raise ParseError("malformed pose comment", path=path) from None
    if len(numbers) != 7:
        raise ParseError("pose comment needs 'tx ty tz qx qy qz qw'", path=path)
    quat = np.asarray(numbers[3:], dtype=np.float64)
    return Pose(tuple(numbers[:3]), tuple(quat / np.linalg.norm(quat)))


def parse_frame(
    path: Union[str, Path],
    fmt: Optional[CloudFormat] = None,
    trajectory: Optional[Trajectory] = None,
    timestamp: Optional[float] = None,
    strict: bool = False,
) -> PointCloudFrame:
    """
    读取一帧点云
    :param fmt: 文件格式，缺省按扩展名判断
    :param trajectory: 轨迹；给出时位姿必须按时间戳精确匹配
    :param timestamp: 覆盖头部注释中的时间戳
    :param strict: True 时遇到非有限坐标直接报错，而不是丢弃
    """
    file_path = Path(path)
    where = str(file_path)
    fmt = fmt or CloudFormat.from_path(file_path)

    if fmt is CloudFormat.PLY:
        data = read_ply(file_path)
        header_pose = _header_pose(data.comments, where)
    else:
        data = read_pcd(file_path)
        tx, ty, tz, qw, qx, qy, qz = data.viewpoint
        quat = np.array([qx, qy, qz, qw], dtype=np.float64)
        header_pose = Pose((tx, ty, tz), tuple(quat / np.linalg.norm(quat)))
        if _header_value(data.comments, "pose") is not None:
            header_pose = _header_pose(data.comments, where)

    if data.rgb is None:
        raise ParseError("color required: point cloud has no red/green/blue (or rgb) fields", path=where)

    if timestamp is None:
        timestamp = _header_timestamp(data.comments, where)
    if timestamp is None:
        if trajectory is not None:
            raise ParseError("timestamp comment required to look up the pose", path=where)
        timestamp = 0.0

    if trajectory is not None:
        if timestamp not in trajectory:
            raise FrameError(timestamp, f"{where}: no pose with this exact timestamp in trajectory")
        pose = trajectory.lookup(timestamp)
    elif header_pose is not None:
        pose = header_pose
    else:
        pose = Pose.identity()

    xyz, rgb = data.xyz, data.rgb
    finite = np.isfinite(xyz).all(axis=1)
    if strict and not finite.all():
        raise ParseError(f"{int((~finite).sum())} points with NaN/inf coordinates", path=where)
    keep = valid_point_mask(xyz)
    dropped = int((~keep).sum())
    if dropped:
        logger.warning(
            "{}: dropped {} of {} points (non-finite or z <= 0)", where, dropped, xyz.shape[0]
        )
    return PointCloudFrame(
        xyz=xyz[keep],
        rgb=rgb[keep],
        pose=pose,
        timestamp=timestamp_key(timestamp),
        source=where,
        dropped=dropped,
    )


def frame_comments(frame: PointCloudFrame) -> List[str]:
    pose = frame.pose
    return [
        f"timestamp {frame.timestamp!r}",
        "pose " + " ".join(repr(float(v)) for v in (*pose.translation, *pose.rotation)),
    ]


def write_frame(frame: PointCloudFrame, path: Union[str, Path], binary: bool = True) -> str:
    """按扩展名写出帧，并在头部记录时间戳与位姿。"""
    fmt = CloudFormat.from_path(path)
    if fmt is CloudFormat.PLY:
        return write_ply(path, frame.xyz, frame.rgb, binary=binary, comments=frame_comments(frame))
    pose = frame.pose
    qx, qy, qz, qw = pose.rotation
    return write_pcd(
        path,
        frame.xyz,
        frame.rgb,
        binary=binary,
        viewpoint=(*pose.translation, qw, qx, qy, qz),
        comments=(f"timestamp {frame.timestamp!r}",),
    )


def peek_timestamp(path: Union[str, Path]) -> Optional[float]:
    """只读文件头取 timestamp 注释（用于排序），没有则返回 None。"""
    file_path = Path(path)
    fmt = CloudFormat.from_path(file_path)
    comments: List[str] = []
    with open(file_path, "rb") as f:
        for raw in f:
            line = raw.decode("ascii", errors="replace").strip()
            if fmt is CloudFormat.PLY:
                if line == "end_header":
                    break
                if line.startswith("comment "):
                    comments.append(line[len("comment "):])
            else:
                if line.startswith("DATA"):
                    break
                if line.startswith("#"):
                    comments.append(line.lstrip("#").strip())
    timestamp = _header_timestamp(comments, str(file_path))
    return None if timestamp is None else timestamp_key(timestamp)
