"""
地图导出

- color / material：每个占据体素一个 PLY 顶点（体素中心）
- absorption：每个占据体素一行 CSV（键、中心、材料名、六个倍频带吸声系数）
"""
from enum import Enum
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
from loguru import logger

from materials import OCTAVE_BANDS_HZ, MaterialDatabase
from pointcloud import write_ply

from .grid import OccupancyGrid


class ExportMode(str, Enum):
    COLOR = "color"
    MATERIAL = "material"
    ABSORPTION = "absorption"


def material_colors(materials: np.ndarray, database: MaterialDatabase) -> np.ndarray:
    """材料 id -> 调色板颜色；-1（无材料）用 Unknown 的灰色。"""
    palette = database.palette_array()
    ids = np.where(materials < 0, database.unknown_id, materials)
    return palette[ids]


def export_map(grid: OccupancyGrid, mode: Union[str, ExportMode], path: Union[str, Path],
               database: Optional[MaterialDatabase] = None, binary: bool = True) -> str:
    mode = ExportMode(mode)
    if mode is ExportMode.ABSORPTION:
        return export_absorption(grid, database or MaterialDatabase.default(), path)

    occupied = grid.occupied_mask()
    centers = grid.centers()[occupied]
    if mode is ExportMode.COLOR:
        colors = np.clip(np.floor(grid.color_means()[occupied] + 0.5), 0, 255).astype(np.uint8)
    else:
        database = database or MaterialDatabase.default()
        colors = material_colors(grid.materials()[occupied], database)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_ply(path, centers, colors, binary=binary,
              comments=[f"acoustic-map {mode.value}", f"resolution {grid.params.resolution!r}"])
    logger.debug(f"export {mode.value}: {centers.shape[0]} cells -> {path}")
    return str(path)


def absorption_table(grid: OccupancyGrid, database: MaterialDatabase) -> pd.DataFrame:
    occupied = grid.occupied_mask()
    keys = grid.keys()[occupied]
    centers = grid.centers()[occupied]
    materials = grid.materials()[occupied]
    ids = np.where(materials < 0, database.unknown_id, materials)

    table = pd.DataFrame({
        "i": keys[:, 0], "j": keys[:, 1], "k": keys[:, 2],
        "x": centers[:, 0], "y": centers[:, 1], "z": centers[:, 2],
        "material": [database.get(m).name for m in ids.tolist()],
    })
    absorption = np.array([m.absorption for m in database.materials], dtype=np.float64).reshape(-1, len(OCTAVE_BANDS_HZ))
    for band, column in zip(OCTAVE_BANDS_HZ, absorption[ids].T):
        table[f"alpha_{band}"] = column
    return table.sort_values(["i", "j", "k"], kind="stable").reset_index(drop=True)


def export_absorption(grid: OccupancyGrid, database: MaterialDatabase, path: Union[str, Path]) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = absorption_table(grid, database)
    table.to_csv(path, index=False, float_format="%.6g")
    logger.debug(f"export absorption: {len(table)} cells -> {path}")
    return str(path)
