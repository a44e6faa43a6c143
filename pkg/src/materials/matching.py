"""
标签 -> 材料 匹配表

文件语法（另见 README）：每个语义标签一行 "label = material-name"，
9 个标签必须全部出现且只出现一次。
"""
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Dict, Mapping, Optional, Union

import numpy as np

from schema.errors import FieldValidationError, ParseError
from schema.labels import NUM_LABELS, SemanticLabel

from .database import MaterialDatabase, default_data_dir


@dataclass(frozen=True)
class MatchingTable:
    """全映射 SemanticLabel -> 材料 id"""
    mapping: Mapping[SemanticLabel, int]

    def __post_init__(self):
        missing = [label.display_name for label in SemanticLabel if label not in self.mapping]
        if missing:
            raise FieldValidationError("matching_table", f"labels without a material: {missing}")
        object.__setattr__(self, "mapping", MappingProxyType(dict(self.mapping)))

    def lookup(self, label: SemanticLabel) -> int:
        return self.mapping[SemanticLabel(label)]

    def as_array(self) -> np.ndarray:
        """按标签编码索引的材料 id 数组，用于批量查表。"""
        return np.array([self.mapping[label] for label in SemanticLabel], dtype=np.int64)


def lookup_material(label: SemanticLabel, table: MatchingTable) -> int:
    return table.lookup(label)


def parse_matching_table(text: str, database: MaterialDatabase, path: Optional[str] = None) -> MatchingTable:
    mapping: Dict[SemanticLabel, int] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'label = material', got {raw.strip()!r}", path=path, line=line_no)
        label_text, material_text = (part.strip() for part in line.split("=", 1))
        try:
            label = SemanticLabel.from_name(label_text)
        except ValueError as exc:
            raise ParseError(str(exc), path=path, line=line_no) from None
        if label in mapping:
            raise ParseError(f"duplicate label {label.display_name}", path=path, line=line_no)
        try:
            mapping[label] = database.by_name(material_text).id
        except KeyError as exc:
            raise ParseError(str(exc.args[0]), path=path, line=line_no) from None

    if len(mapping) != NUM_LABELS:
        missing = [label.display_name for label in SemanticLabel if label not in mapping]
        raise FieldValidationError("matching_table", f"table must cover all {NUM_LABELS} labels, missing {missing}")
    return MatchingTable(mapping)


def load_matching_table(path: Union[str, Path], database: MaterialDatabase) -> MatchingTable:
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"匹配表不存在: {file_path}")
    return parse_matching_table(file_path.read_text(encoding="utf-8"), database, path=str(file_path))


def default_matching_table(database: MaterialDatabase) -> MatchingTable:
    return load_matching_table(default_data_dir() / "matching_table.txt", database)


def dump_matching_table(table: MatchingTable, database: MaterialDatabase, path: Union[str, Path]) -> str:
    lines = [f"{label.display_name} = {database.get(table.lookup(label)).name}" for label in SemanticLabel]
    file_path = Path(path)
    file_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(file_path)
