"""
合成场景与传感器描述

房间为 [0, ex] x [0, ey] x [0, ez] 的轴对齐盒子，z 轴向上；
六个内表面固定为 Wall x4 / Floor / Ceiling，家具等物体为房间内的轴对齐盒子。
"""
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np

from materials.database import RGB, default_data_dir, format_hex_color, parse_hex_color
from schema.errors import FieldValidationError, ParseError
from schema.labels import SemanticLabel

Vec3 = Tuple[float, float, float]

DEFAULT_ROOM: Vec3 = (6.7, 6.8, 2.5)
DEFAULT_FACE_COLORS: Dict[str, RGB] = {
    "wall": (216, 212, 200),
    "floor": (120, 104, 88),
    "ceiling": (240, 240, 236),
}


def _vec3(value: Any, name: str) -> Vec3:
    try:
        x, y, z = (float(v) for v in value)
    except (TypeError, ValueError):
        raise FieldValidationError(name, f"expected 3 numbers, got {value!r}") from None
    if not all(math.isfinite(v) for v in (x, y, z)):
        raise FieldValidationError(name, "non-finite value")
    return (x, y, z)


@dataclass(frozen=True)
class SceneBox:
    """带标签的轴对齐盒子"""
    label: SemanticLabel
    lower: Vec3
    upper: Vec3
    color: RGB
    dropout: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.label == SemanticLabel.UNKNOWN:
            raise FieldValidationError(f"boxes.{self.name or '?'}.label", "Unknown is not a scene label")
        if not all(lo < hi for lo, hi in zip(self.lower, self.upper)):
            raise FieldValidationError(f"boxes.{self.name or '?'}", f"empty box {self.lower} .. {self.upper}")
        if not 0.0 <= self.dropout < 1.0:
            raise FieldValidationError(f"boxes.{self.name or '?'}.dropout", f"must lie in [0, 1), got {self.dropout}")

    def contains(self, point) -> bool:
        return all(lo <= p <= hi for p, lo, hi in zip(point, self.lower, self.upper))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "label": self.label.display_name,
            "min": list(self.lower),
            "max": list(self.upper),
            "color": format_hex_color(self.color),
            "dropout": self.dropout,
        }


@dataclass(frozen=True)
class SceneSpec:
    extents: Vec3 = DEFAULT_ROOM
    boxes: Tuple[SceneBox, ...] = ()
    wall_color: RGB = DEFAULT_FACE_COLORS["wall"]
    floor_color: RGB = DEFAULT_FACE_COLORS["floor"]
    ceiling_color: RGB = DEFAULT_FACE_COLORS["ceiling"]

    def __post_init__(self):
        if not all(e > 0 for e in self.extents):
            raise FieldValidationError("scene.extents", f"must be positive, got {self.extents}")
        for index, box in enumerate(self.boxes):
            inside = all(0.0 <= lo and hi <= e for lo, hi, e in zip(box.lower, box.upper, self.extents))
            if not inside:
                raise FieldValidationError(f"scene.boxes[{index}]", f"box {box.name!r} leaves the room")

    def contains(self, point) -> bool:
        """严格位于房间内部。"""
        return all(0.0 < p < e for p, e in zip(point, self.extents))

    def box_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        lower = np.array([b.lower for b in self.boxes], dtype=np.float64).reshape(-1, 3)
        upper = np.array([b.upper for b in self.boxes], dtype=np.float64).reshape(-1, 3)
        return lower, upper

    def to_dict(self) -> Dict[str, Any]:
        return {
            "extents": list(self.extents),
            "colors": {
                "wall": format_hex_color(self.wall_color),
                "floor": format_hex_color(self.floor_color),
                "ceiling": format_hex_color(self.ceiling_color),
            },
            "boxes": [b.to_dict() for b in self.boxes],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SceneSpec":
        if not isinstance(data, dict):
            raise FieldValidationError("scene", "expected an object")
        colors = data.get("colors", {}) or {}
        boxes = []
        for index, record in enumerate(data.get("boxes", []) or []):
            prefix = f"scene.boxes[{index}]"
            try:
                label = SemanticLabel.from_name(record["label"])
            except KeyError:
                raise FieldValidationError(f"{prefix}.label", "missing") from None
            except ValueError as e:
                raise FieldValidationError(f"{prefix}.label", str(e)) from None
            boxes.append(SceneBox(
                label=label,
                lower=_vec3(record.get("min"), f"{prefix}.min"),
                upper=_vec3(record.get("max"), f"{prefix}.max"),
                color=parse_hex_color(record.get("color", "#808080"), f"{prefix}.color"),
                dropout=float(record.get("dropout", 0.0)),
                name=str(record.get("name", "")),
            ))

        def face(key: str) -> RGB:
            value = colors.get(key)
            return DEFAULT_FACE_COLORS[key] if value is None else parse_hex_color(value, f"scene.colors.{key}")

        return cls(
            extents=_vec3(data.get("extents", DEFAULT_ROOM), "scene.extents"),
            boxes=tuple(boxes),
            wall_color=face("wall"),
            floor_color=face("floor"),
            ceiling_color=face("ceiling"),
        )

    @classmethod
    def office(cls) -> "SceneSpec":
        """内置办公室场景 (6.7 x 6.8 x 2.5 m)"""
        return load_scene(default_data_dir() / "scene_office.json")


@dataclass(frozen=True)
class SensorSpec:
    """Kinect 类深度相机"""
    points_per_frame: int = 30000
    height: float = 1.08
    hfov_deg: float = 57.0
    vfov_deg: float = 43.0
    max_range: float = 8.0
    depth_noise: float = 0.01
    depth_noise_proportional: float = 0.0
    label_noise: float = 0.0

    def __post_init__(self):
        if self.points_per_frame <= 0:
            raise FieldValidationError("sensor.points_per_frame", f"must be > 0, got {self.points_per_frame}")
        if not self.height > 0:
            raise FieldValidationError("sensor.height", f"must be > 0, got {self.height}")
        for name in ("hfov_deg", "vfov_deg"):
            value = getattr(self, name)
            if not 0.0 <= value < 180.0:
                raise FieldValidationError(f"sensor.{name}", f"must lie in [0, 180), got {value}")
        if not self.max_range > 0:
            raise FieldValidationError("sensor.max_range", f"must be > 0, got {self.max_range}")
        if self.depth_noise < 0 or self.depth_noise_proportional < 0:
            raise FieldValidationError("sensor.depth_noise", "noise stddev must be >= 0")
        if not 0.0 <= self.label_noise < 0.5:
            raise FieldValidationError("sensor.label_noise", f"must lie in [0, 0.5), got {self.label_noise}")

    def ray_grid(self) -> Tuple[int, int]:
        """(rows, cols)，rows * cols 约等于 points_per_frame。"""
        tan_h = math.tan(math.radians(self.hfov_deg) / 2)
        tan_v = math.tan(math.radians(self.vfov_deg) / 2)
        n = self.points_per_frame
        if tan_h == 0 and tan_v == 0:
            return 1, 1
        if tan_v == 0:
            return 1, n
        if tan_h == 0:
            return n, 1
        cols = max(1, int(round(math.sqrt(n * tan_h / tan_v))))
        rows = max(1, int(round(n / cols)))
        return rows, cols

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SensorSpec":
        if not isinstance(data, dict):
            raise FieldValidationError("sensor", "expected an object")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise FieldValidationError(f"sensor.{sorted(unknown)[0]}", "unknown field")
        values = dict(data)
        if "points_per_frame" in values:
            values["points_per_frame"] = int(values["points_per_frame"])
        return cls(**values)

    @classmethod
    def kinect(cls) -> "SensorSpec":
        return load_sensor(default_data_dir() / "sensor_kinect.json")


def _read_json(path: Union[str, Path]) -> Any:
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"配置文件不存在: {file_path}")
    try:
        return json.loads(file_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, path=str(file_path), line=e.lineno) from None


def load_scene(path: Union[str, Path]) -> SceneSpec:
    return SceneSpec.from_dict(_read_json(path))


def load_sensor(path: Union[str, Path]) -> SensorSpec:
    return SensorSpec.from_dict(_read_json(path))


def save_json(data: Dict[str, Any], path: Union[str, Path]) -> str:
    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    file_path.write_text(json.dumps(data, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    return str(file_path)
