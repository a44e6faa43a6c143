"""Materials 模块 - 声学材料库与标签匹配表"""
from .database import (
    OCTAVE_BANDS_HZ,
    AcousticMaterial,
    MaterialDatabase,
    default_data_dir,
    dump_material_database,
    load_material_database,
    palette_color,
)
from .matching import (
    MatchingTable,
    default_matching_table,
    dump_matching_table,
    load_matching_table,
    lookup_material,
)

__all__ = [
    "OCTAVE_BANDS_HZ",
    "AcousticMaterial",
    "MaterialDatabase",
    "default_data_dir",
    "load_material_database",
    "dump_material_database",
    "palette_color",
    "MatchingTable",
    "lookup_material",
    "load_matching_table",
    "dump_matching_table",
    "default_matching_table",
]
