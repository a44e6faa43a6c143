"""Voxelmap 模块 - 带材料直方图的稀疏占据栅格"""
from .export import ExportMode, absorption_table, export_absorption, export_map, material_colors
from .grid import GridParams, InsertStats, Occupancy, OccupancyGrid, VoxelCell, logistic, logit
from .keys import VoxelKey, key_centers, pack_keys, unpack_keys, world_to_key, world_to_keys
from .raycast import traverse_rays
from .snapshot import load_snapshot, save_snapshot, snapshot_bytes
from .stats import MapStats, map_stats

__all__ = [
    "GridParams",
    "OccupancyGrid",
    "VoxelCell",
    "Occupancy",
    "InsertStats",
    "logit",
    "logistic",
    "VoxelKey",
    "world_to_key",
    "world_to_keys",
    "key_centers",
    "pack_keys",
    "unpack_keys",
    "traverse_rays",
    "save_snapshot",
    "load_snapshot",
    "snapshot_bytes",
    "ExportMode",
    "export_map",
    "export_absorption",
    "absorption_table",
    "material_colors",
    "MapStats",
    "map_stats",
]
