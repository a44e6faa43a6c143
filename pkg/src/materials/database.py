"""
声学材料数据库

每种材料带 6 个倍频程吸声系数 (125 Hz - 4 kHz) 和一个显示颜色。
数值来自外部文献表格，随仓库以 data/materials.json 形式发布，每条记录注明出处。
"""
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from schema.errors import FieldValidationError, ParseError

OCTAVE_BANDS_HZ: Tuple[int, ...] = (125, 250, 500, 1000, 2000, 4000)
UNKNOWN_MATERIAL_NAME = "Unknown"

RGB = Tuple[int, int, int]


def default_data_dir() -> Path:
    """仓库内置数据目录。"""
    return Path(__file__).resolve().parents[2] / "data"


def parse_hex_color(value: str, field: str = "color") -> RGB:
    text = str(value or "").strip()
    if text.startswith("#"):
        text = text[1:]
    if len(text) != 6:
        raise FieldValidationError(field, f"expected #rrggbb, got {value!r}")
    try:
        return (int(text[0:2], 16), int(text[2:4], 16), int(text[4:6], 16))
    except ValueError:
        raise FieldValidationError(field, f"expected #rrggbb, got {value!r}") from None


def format_hex_color(rgb: Sequence[int]) -> str:
    return "#{:02x}{:02x}{:02x}".format(*(int(c) for c in rgb))


@dataclass(frozen=True)
class AcousticMaterial:
    """声学材料"""
    id: int
    name: str
    absorption: Tuple[float, ...]       # 与 OCTAVE_BANDS_HZ 一一对应
    display_color: RGB
    provenance: str = ""

    def absorption_at(self, band_hz: int) -> float:
        return self.absorption[OCTAVE_BANDS_HZ.index(band_hz)]

    def to_record(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "name": self.name,
            "absorption": list(self.absorption),
            "color": format_hex_color(self.display_color),
            "provenance": self.provenance,
        }


def _material_from_record(record: Any, index: int) -> AcousticMaterial:
    prefix = f"materials[{index}]"
    if not isinstance(record, dict):
        raise FieldValidationError(prefix, "record must be an object")
    for key in ("id", "name", "absorption", "color"):
        if key not in record:
            raise FieldValidationError(f"{prefix}.{key}", "missing")

    material_id = record["id"]
    if isinstance(material_id, bool) or not isinstance(material_id, int):
        raise FieldValidationError(f"{prefix}.id", f"expected integer, got {material_id!r}")

    name = str(record["name"]).strip()
    if not name:
        raise FieldValidationError(f"{prefix}.name", "empty name")

    absorption = record["absorption"]
    if not isinstance(absorption, list) or len(absorption) != len(OCTAVE_BANDS_HZ):
        raise FieldValidationError(
            f"{prefix}.absorption",
            f"expected {len(OCTAVE_BANDS_HZ)} coefficients for bands {list(OCTAVE_BANDS_HZ)}",
        )
    coefficients: List[float] = []
    for band, value in zip(OCTAVE_BANDS_HZ, absorption):
        field = f"{prefix}.absorption[{band}Hz]"
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise FieldValidationError(field, f"expected number, got {value!r}")
        coefficient = float(value)
        if not math.isfinite(coefficient) or coefficient < 0.0 or coefficient > 1.0:
            raise FieldValidationError(field, f"coefficient {coefficient} outside [0, 1]")
        coefficients.append(coefficient)

    return AcousticMaterial(
        id=material_id,
        name=name,
        absorption=tuple(coefficients),
        display_color=parse_hex_color(record["color"], f"{prefix}.color"),
        provenance=str(record.get("provenance", "")),
    )


def validate_materials(materials: Sequence[AcousticMaterial]) -> None:
    """校验整库不变量：id 唯一且稠密、名称唯一、颜色两两不同。"""
    ids = sorted(m.id for m in materials)
    if ids != list(range(len(materials))):
        raise FieldValidationError("materials.id", f"ids must be unique and dense 0..{len(materials) - 1}, got {ids}")

    names = [m.name for m in materials]
    if len(set(names)) != len(names):
        raise FieldValidationError("materials.name", "duplicate material name")

    colors = [m.display_color for m in materials]
    if len(set(colors)) != len(colors):
        raise FieldValidationError("materials.color", "display colors must be pairwise distinct")


def parse_material_database(text: str, path: Optional[str] = None) -> List[AcousticMaterial]:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path=path, line=exc.lineno) from None

    if not isinstance(payload, dict) or not isinstance(payload.get("materials"), list):
        raise FieldValidationError("materials", "top level must be an object with a 'materials' list")

    bands = payload.get("bands_hz", list(OCTAVE_BANDS_HZ))
    if list(bands) != list(OCTAVE_BANDS_HZ):
        raise FieldValidationError("bands_hz", f"expected {list(OCTAVE_BANDS_HZ)}, got {bands}")

    materials = [_material_from_record(record, i) for i, record in enumerate(payload["materials"])]
    validate_materials(materials)
    return sorted(materials, key=lambda m: m.id)


def load_material_database(path: Union[str, Path]) -> List[AcousticMaterial]:
    """读取并校验材料数据库文件。"""
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"材料数据库不存在: {file_path}")
    return parse_material_database(file_path.read_text(encoding="utf-8"), path=str(file_path))


def dump_material_database(materials: Sequence[AcousticMaterial], path: Union[str, Path]) -> str:
    """写出材料数据库，一行一条记录（load 后再 dump 结果不变）。"""
    validate_materials(materials)
    rows = [json.dumps(m.to_record(), ensure_ascii=False) for m in sorted(materials, key=lambda m: m.id)]
    text = (
        "{\n"
        f'  "bands_hz": {json.dumps(list(OCTAVE_BANDS_HZ))},\n'
        '  "materials": [\n    '
        + ",\n    ".join(rows)
        + "\n  ]\n}\n"
    )
    file_path = Path(path)
    file_path.write_text(text, encoding="utf-8")
    return str(file_path)


class MaterialDatabase:
    """只读材料库（加载后不可变，可跨线程共享）"""

    def __init__(self, materials: Sequence[AcousticMaterial]):
        validate_materials(materials)
        self._materials: Tuple[AcousticMaterial, ...] = tuple(sorted(materials, key=lambda m: m.id))
        self._by_name: Dict[str, AcousticMaterial] = {m.name.lower(): m for m in self._materials}
        unknown = self._by_name.get(UNKNOWN_MATERIAL_NAME.lower())
        if unknown is None:
            raise FieldValidationError("materials.name", f"reserved material {UNKNOWN_MATERIAL_NAME!r} missing")
        self.unknown_id = unknown.id

    @classmethod
    def load(cls, path: Union[str, Path]) -> "MaterialDatabase":
        return cls(load_material_database(path))

    @classmethod
    def default(cls) -> "MaterialDatabase":
        return cls.load(default_data_dir() / "materials.json")

    @property
    def materials(self) -> Tuple[AcousticMaterial, ...]:
        return self._materials

    def __len__(self) -> int:
        return len(self._materials)

    def __iter__(self):
        return iter(self._materials)

    def get(self, material_id: int) -> AcousticMaterial:
        if isinstance(material_id, bool) or not 0 <= int(material_id) < len(self._materials):
            raise KeyError(f"未知材料 id: {material_id}")
        return self._materials[int(material_id)]

    def by_name(self, name: str) -> AcousticMaterial:
        material = self._by_name.get(str(name).strip().lower())
        if material is None:
            raise KeyError(f"未知材料名称: {name!r}")
        return material

    def palette_color(self, material_id: int) -> RGB:
        return self.get(material_id).display_color

    def palette_array(self):
        """(N, 3) uint8 调色板，按 id 索引。"""
        return np.array([m.display_color for m in self._materials], dtype=np.uint8)


def palette_color(material_id: int, materials: Union[MaterialDatabase, Sequence[AcousticMaterial]]) -> RGB:
    """材料 id -> 显示颜色；未知 id 抛 KeyError。"""
    database = materials if isinstance(materials, MaterialDatabase) else MaterialDatabase(materials)
    return database.palette_color(material_id)
