"""
占据栅格

稀疏索引：升序的打包 VoxelKey 与对应行号两列数组，按 searchsorted 查找；
行号索引列式数组（log-odds、颜色均值与计数、材料直方图）。
同一时刻只允许一个写者；两次插入之间可以并发只读查询。
"""
import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from schema.errors import FieldValidationError

from .keys import VoxelKey, key_centers, pack_keys, unpack_keys, world_to_keys
from .raycast import traverse_rays

_INITIAL_CAPACITY = 1024


def logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def logistic(l: float) -> float:
    return 1.0 / (1.0 + math.exp(-l))


class Occupancy(Enum):
    OCCUPIED = "occupied"
    FREE = "free"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class GridParams:
    """栅格常数"""
    resolution: float = 0.1
    l_hit: float = 0.85
    l_miss: float = -0.4
    l_min: float = -2.0
    l_max: float = 3.5
    p_occ: float = 0.97
    carve_free_space: bool = True
    max_range: float = 8.0

    def __post_init__(self):
        if not self.resolution > 0:
            raise FieldValidationError("grid.resolution", f"must be > 0, got {self.resolution}")
        if not self.l_hit > 0:
            raise FieldValidationError("grid.l_hit", f"must be > 0, got {self.l_hit}")
        if not self.l_miss < 0:
            raise FieldValidationError("grid.l_miss", f"must be < 0, got {self.l_miss}")
        if not self.l_min < 0 < self.l_max:
            raise FieldValidationError("grid.l_min", f"need l_min < 0 < l_max, got [{self.l_min}, {self.l_max}]")
        if not 0.0 < self.p_occ < 1.0:
            raise FieldValidationError("grid.p_occ", f"must lie in (0, 1), got {self.p_occ}")
        if not self.max_range > 0:
            raise FieldValidationError("grid.max_range", f"must be > 0, got {self.max_range}")

    @property
    def occupancy_threshold(self) -> float:
        """log-odds 阈值 logit(p_occ)"""
        return logit(self.p_occ)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GridParams":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__ if k in data})


@dataclass(frozen=True)
class VoxelCell:
    """单个体素的只读视图"""
    key: VoxelKey
    log_odds: float
    color_mean: Tuple[float, float, float]
    color_count: int
    histogram: Tuple[int, ...]

    @property
    def probability(self) -> float:
        return logistic(self.log_odds)

    @property
    def observations(self) -> int:
        return int(sum(self.histogram))


@dataclass
class InsertStats:
    """单帧插入统计"""
    points: int = 0
    hit_cells: int = 0
    miss_cells: int = 0
    new_cells: int = 0


class OccupancyGrid:
    """带颜色与材料直方图的占据栅格"""

    def __init__(self, params: Optional[GridParams] = None, num_materials: int = 9, unknown_material: int = 8):
        if not 0 <= unknown_material < num_materials:
            raise FieldValidationError("grid.unknown_material", f"{unknown_material} not in 0..{num_materials - 1}")
        self.params = params or GridParams()
        self.num_materials = int(num_materials)
        self.unknown_material = int(unknown_material)
        self._index_keys = np.empty(0, dtype=np.int64)
        self._index_rows = np.empty(0, dtype=np.int64)
        self._size = 0
        self._allocate(_INITIAL_CAPACITY)

    # ==================== 存储 ====================

    def _allocate(self, capacity: int):
        self._keys = np.zeros((capacity, 3), dtype=np.int64)
        self._log_odds = np.zeros(capacity, dtype=np.float64)
        self._color_mean = np.zeros((capacity, 3), dtype=np.float64)
        self._color_count = np.zeros(capacity, dtype=np.int64)
        self._histogram = np.zeros((capacity, self.num_materials), dtype=np.int64)

    def _grow(self, needed: int):
        capacity = self._keys.shape[0]
        if needed <= capacity:
            return
        new_capacity = max(needed, capacity * 2)
        old = (self._keys, self._log_odds, self._color_mean, self._color_count, self._histogram)
        self._allocate(new_capacity)
        n = self._size
        self._keys[:n], self._log_odds[:n], self._color_mean[:n], self._color_count[:n], self._histogram[:n] = (
            a[:n] for a in old
        )

    def _lookup(self, packed: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """打包键 -> (行号, 插入位置)，缺失键行号为 -1。"""
        positions = np.searchsorted(self._index_keys, packed)
        rows = np.full(packed.shape[0], -1, dtype=np.int64)
        inside = positions < self._index_keys.shape[0]
        found = np.zeros(packed.shape[0], dtype=bool)
        found[inside] = self._index_keys[positions[inside]] == packed[inside]
        rows[found] = self._index_rows[positions[found]]
        return rows, positions

    def _rows(self, packed: np.ndarray, create: bool = True) -> np.ndarray:
        """打包键（升序且唯一）-> 行号；create=False 时缺失键返回 -1。"""
        rows, positions = self._lookup(packed)
        missing = rows < 0
        if create and missing.any():
            new_packed = packed[missing]
            count = new_packed.shape[0]
            self._grow(self._size + count)
            new_rows = np.arange(self._size, self._size + count, dtype=np.int64)
            self._keys[new_rows] = unpack_keys(new_packed)
            self._index_keys = np.insert(self._index_keys, positions[missing], new_packed)
            self._index_rows = np.insert(self._index_rows, positions[missing], new_rows)
            rows[missing] = new_rows
            self._size += count
        return rows

    def __len__(self) -> int:
        return self._size

    def __contains__(self, key) -> bool:
        return self._row_of(key) >= 0

    # ==================== 更新 ====================

    def _clamp(self, values: np.ndarray) -> np.ndarray:
        return np.clip(values, self.params.l_min, self.params.l_max)

    def insert_labeled_frame(self, xyz: np.ndarray, rgb: np.ndarray, materials: np.ndarray, origin) -> InsertStats:
        """
        插入一帧世界坐标系下带颜色和材料的点
        - 端点体素：log-odds += l_hit，颜色滑动平均，直方图[材料] += 1
        - 射线经过的体素（不含端点）：log-odds += l_miss
        同一帧内每个体素至多一次命中、一次未命中更新，命中优先。
        """
        xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
        rgb = np.asarray(rgb, dtype=np.float64).reshape(-1, 3)
        materials = np.asarray(materials, dtype=np.int64).reshape(-1)
        origin = np.asarray(origin, dtype=np.float64).reshape(3)
        if not (xyz.shape[0] == rgb.shape[0] == materials.shape[0]):
            raise FieldValidationError("points", "xyz, rgb and materials lengths differ")
        if not np.isfinite(xyz).all():
            raise FieldValidationError("points", "non-finite point coordinates")
        if not np.isfinite(origin).all():
            raise FieldValidationError("origin", "non-finite sensor origin")
        if materials.size and (materials.min() < 0 or materials.max() >= self.num_materials):
            raise FieldValidationError("materials", f"material ids must lie in 0..{self.num_materials - 1}")

        stats = InsertStats(points=int(xyz.shape[0]))
        if xyz.shape[0] == 0:
            return stats
        before = self._size

        packed = pack_keys(world_to_keys(xyz, self.params.resolution))
        hit_keys, inverse = np.unique(packed, return_inverse=True)
        inverse = inverse.reshape(-1)
        hit_rows = self._rows(hit_keys)
        self._log_odds[hit_rows] = self._clamp(self._log_odds[hit_rows] + self.params.l_hit)

        counts = np.bincount(inverse, minlength=hit_keys.shape[0])
        sums = np.stack([np.bincount(inverse, weights=rgb[:, c], minlength=hit_keys.shape[0]) for c in range(3)], axis=1)
        old_counts = self._color_count[hit_rows]
        new_counts = old_counts + counts
        self._color_mean[hit_rows] = (self._color_mean[hit_rows] * old_counts[:, None] + sums) / new_counts[:, None]
        self._color_count[hit_rows] = new_counts
        m = self.num_materials
        frame_hist = np.bincount(inverse * m + materials, minlength=hit_keys.shape[0] * m).reshape(-1, m)
        self._histogram[hit_rows] += frame_hist
        stats.hit_cells = int(hit_keys.shape[0])

        if self.params.carve_free_space:
            traversed = traverse_rays(origin, xyz, self.params.resolution, self.params.max_range)
            # 两者都升序唯一：命中优先，剔除本帧命中的体素
            at = np.searchsorted(hit_keys, traversed)
            is_hit = np.zeros(traversed.shape[0], dtype=bool)
            inside = at < hit_keys.shape[0]
            is_hit[inside] = hit_keys[at[inside]] == traversed[inside]
            miss_keys = traversed[~is_hit]
            if miss_keys.size:
                miss_rows = self._rows(miss_keys)
                self._log_odds[miss_rows] = self._clamp(self._log_odds[miss_rows] + self.params.l_miss)
            stats.miss_cells = int(miss_keys.shape[0])

        stats.new_cells = self._size - before
        return stats

    # ==================== 查询 ====================

    def _row_of(self, key) -> int:
        return int(self._lookup(pack_keys(np.asarray(key)))[0][0])

    def cell(self, key) -> Optional[VoxelCell]:
        row = self._row_of(key)
        if row < 0:
            return None
        return VoxelCell(
            key=VoxelKey(*(int(v) for v in self._keys[row])),
            log_odds=float(self._log_odds[row]),
            color_mean=tuple(float(v) for v in self._color_mean[row]),
            color_count=int(self._color_count[row]),
            histogram=tuple(int(v) for v in self._histogram[row]),
        )

    def _materials_of(self, histograms: np.ndarray) -> np.ndarray:
        """直方图 -> 材料 id；已知材料优先，并列取最小 id；全空为 -1。"""
        known = histograms.copy()
        known[:, self.unknown_material] = -1
        best = np.argmax(known, axis=1)
        has_known = known.max(axis=1, initial=-1) > 0
        has_unknown = histograms[:, self.unknown_material] > 0
        return np.where(has_known, best, np.where(has_unknown, self.unknown_material, -1))

    def query_occupancy(self, key) -> Occupancy:
        row = self._row_of(key)
        if row < 0:
            return Occupancy.UNKNOWN
        if self._log_odds[row] >= self.params.occupancy_threshold:
            return Occupancy.OCCUPIED
        return Occupancy.FREE

    def query_material(self, key) -> Optional[int]:
        row = self._row_of(key)
        if row < 0 or self._log_odds[row] < self.params.occupancy_threshold:
            return None
        material = int(self._materials_of(self._histogram[row:row + 1])[0])
        return None if material < 0 else material

    # ==================== 批量视图 ====================

    def keys(self) -> np.ndarray:
        return self._keys[:self._size].copy()

    def log_odds(self) -> np.ndarray:
        return self._log_odds[:self._size].copy()

    def color_means(self) -> np.ndarray:
        return self._color_mean[:self._size].copy()

    def color_counts(self) -> np.ndarray:
        return self._color_count[:self._size].copy()

    def histograms(self) -> np.ndarray:
        return self._histogram[:self._size].copy()

    def occupied_mask(self) -> np.ndarray:
        return self._log_odds[:self._size] >= self.params.occupancy_threshold

    def materials(self) -> np.ndarray:
        """每个体素的材料 id（未占据或无观测为 -1）。"""
        result = self._materials_of(self._histogram[:self._size])
        return np.where(self.occupied_mask(), result, -1)

    def centers(self) -> np.ndarray:
        return key_centers(self._keys[:self._size], self.params.resolution)

    def memory_bytes(self) -> int:
        arrays = (self._keys, self._log_odds, self._color_mean, self._color_count, self._histogram,
                  self._index_keys, self._index_rows)
        return int(sum(a.nbytes for a in arrays))

    # ==================== 快照恢复 ====================

    def restore(self, keys: np.ndarray, log_odds: np.ndarray, color_mean: np.ndarray,
                color_count: np.ndarray, histogram: np.ndarray):
        """用快照数据重建（覆盖现有内容）。"""
        n = int(keys.shape[0])
        self._allocate(max(_INITIAL_CAPACITY, n))
        self._keys[:n] = keys
        self._log_odds[:n] = log_odds
        self._color_mean[:n] = color_mean
        self._color_count[:n] = color_count
        self._histogram[:n] = histogram
        self._size = n
        packed = pack_keys(keys) if n else np.empty(0, dtype=np.int64)
        order = np.argsort(packed, kind="stable")
        self._index_keys = packed[order]
        self._index_rows = np.arange(n, dtype=np.int64)[order]
