"""地图统计"""
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from materials import MaterialDatabase

from .grid import OccupancyGrid


@dataclass
class MapStats:
    cells: int = 0
    occupied: int = 0
    free: int = 0
    unlabeled_occupied: int = 0
    material_counts: Dict[str, int] = field(default_factory=dict)
    memory_bytes: int = 0
    bounds_min: Optional[Tuple[float, float, float]] = None
    bounds_max: Optional[Tuple[float, float, float]] = None
    resolution: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def format(self) -> str:
        lines = [
            f"resolution: {self.resolution}",
            f"cells: {self.cells}",
            f"occupied: {self.occupied}",
            f"free: {self.free}",
            f"occupied without material: {self.unlabeled_occupied}",
            f"memory: {self.memory_bytes / 1024:.1f} KiB",
        ]
        if self.bounds_min is not None:
            lo = ", ".join(f"{v:.3f}" for v in self.bounds_min)
            hi = ", ".join(f"{v:.3f}" for v in self.bounds_max)
            lines.append(f"bounds: [{lo}] .. [{hi}]")
        lines.append("materials:")
        lines += [f"  {name}: {count}" for name, count in self.material_counts.items()]
        return "\n".join(lines)


def map_stats(grid: OccupancyGrid, database: Optional[MaterialDatabase] = None) -> MapStats:
    """
    占据/空闲体素数、各材料体素数、内存占用与包围盒
    包围盒取全部已知体素（含空闲）的外边界。
    """
    database = database or MaterialDatabase.default()
    occupied = grid.occupied_mask()
    materials = grid.materials()
    counts = np.bincount(materials[materials >= 0], minlength=len(database))

    stats = MapStats(
        cells=len(grid),
        occupied=int(occupied.sum()),
        free=int(len(grid) - occupied.sum()),
        unlabeled_occupied=int((occupied & (materials < 0)).sum()),
        material_counts={m.name: int(counts[m.id]) for m in database.materials},
        memory_bytes=grid.memory_bytes(),
        resolution=grid.params.resolution,
    )
    if len(grid):
        keys = grid.keys()
        res = grid.params.resolution
        stats.bounds_min = tuple(float(v) for v in keys.min(axis=0) * res)
        stats.bounds_max = tuple(float(v) for v in (keys.max(axis=0) + 1) * res)
    return stats
