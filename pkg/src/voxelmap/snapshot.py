"""
地图快照（小端二进制）

头部: magic "AMAP" | u16 version | f8 resolution, l_hit, l_miss, l_min, l_max, p_occ
      | u16 num_materials | u16 unknown_material | u8 carve | f8 max_range | u8[3] pad | u64 cells
体素（按键升序）: i4 i j k | f4 log_odds | u1 r g b | u4 color_count | u4 histogram[num_materials]

直方图、颜色计数与键无损保存；log-odds 存为 f4，颜色均值四舍五入到 u8。
读回的地图继续插入时，log-odds 与颜色均值会和从未保存过的地图有微小偏差，
占据判定在阈值附近可能不同。
"""
import struct
from pathlib import Path
from typing import Union

import numpy as np
from loguru import logger

from schema.errors import ParseError

from .grid import GridParams, OccupancyGrid
from .keys import pack_keys

MAGIC = b"AMAP"
VERSION = 1
_HEADER = struct.Struct("<4sH6dHHBd3xQ")


def _cell_dtype(num_materials: int) -> np.dtype:
    return np.dtype([
        ("key", "<i4", (3,)),
        ("log_odds", "<f4"),
        ("color", "u1", (3,)),
        ("count", "<u4"),
        ("histogram", "<u4", (num_materials,)),
    ])


def snapshot_bytes(grid: OccupancyGrid) -> bytes:
    p = grid.params
    keys = grid.keys()
    order = np.argsort(pack_keys(keys), kind="stable") if len(grid) else np.empty(0, dtype=np.int64)
    records = np.zeros(len(grid), dtype=_cell_dtype(grid.num_materials))
    records["key"] = keys[order]
    records["log_odds"] = grid.log_odds()[order]
    colors = np.clip(np.floor(grid.color_means()[order] + 0.5), 0, 255)
    records["color"] = colors.astype(np.uint8)
    records["count"] = grid.color_counts()[order]
    records["histogram"] = grid.histograms()[order]
    header = _HEADER.pack(
        MAGIC, VERSION, p.resolution, p.l_hit, p.l_miss, p.l_min, p.l_max, p.p_occ,
        grid.num_materials, grid.unknown_material, int(p.carve_free_space), p.max_range, len(grid),
    )
    return header + records.tobytes()


def save_snapshot(grid: OccupancyGrid, path: Union[str, Path]) -> Path:
    """写入快照；同一地图总是得到相同字节。"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(snapshot_bytes(grid))
    logger.debug(f"snapshot: {len(grid)} cells -> {path}")
    return path


def load_snapshot(path: Union[str, Path]) -> OccupancyGrid:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise ParseError("truncated snapshot header", path=str(path))
    (magic, version, resolution, l_hit, l_miss, l_min, l_max, p_occ,
     num_materials, unknown_material, carve, max_range, cells) = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}", path=str(path))
    if version != VERSION:
        raise ParseError(f"unsupported snapshot version {version}", path=str(path))
    dtype = _cell_dtype(num_materials)
    expected = _HEADER.size + cells * dtype.itemsize
    if len(data) != expected:
        raise ParseError(f"snapshot size {len(data)} != expected {expected}", path=str(path))

    params = GridParams(resolution=resolution, l_hit=l_hit, l_miss=l_miss, l_min=l_min, l_max=l_max,
                        p_occ=p_occ, carve_free_space=bool(carve), max_range=max_range)
    grid = OccupancyGrid(params, num_materials=num_materials, unknown_material=unknown_material)
    records = np.frombuffer(data, dtype=dtype, count=cells, offset=_HEADER.size) if cells else np.zeros(0, dtype=dtype)
    grid.restore(
        keys=records["key"].astype(np.int64),
        log_odds=records["log_odds"].astype(np.float64),
        color_mean=records["color"].astype(np.float64),
        color_count=records["count"].astype(np.int64),
        histogram=records["histogram"].astype(np.int64),
    )
    return grid
