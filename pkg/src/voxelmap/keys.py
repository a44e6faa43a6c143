"""
体素键

VoxelKey (i, j, k) = floor(world / resolution)，[0, res) 对应下标 0。
批量处理时把键打包成单个 int64（每轴 21 位，带偏移），便于 np.unique 去重。
"""
from typing import NamedTuple

import numpy as np

_BITS = 21
_OFFSET = 1 << (_BITS - 1)
_MASK = (1 << _BITS) - 1
KEY_LIMIT = _OFFSET
# 某轴下标加一时打包键的增量
PACKED_STRIDES = (1 << (2 * _BITS), 1 << _BITS, 1)


class VoxelKey(NamedTuple):
    i: int
    j: int
    k: int


def world_to_keys(xyz: np.ndarray, resolution: float) -> np.ndarray:
    return np.floor(np.asarray(xyz, dtype=np.float64).reshape(-1, 3) / resolution).astype(np.int64)


def world_to_key(point, resolution: float) -> VoxelKey:
    i, j, k = world_to_keys(np.asarray(point, dtype=np.float64), resolution)[0]
    return VoxelKey(int(i), int(j), int(k))


def key_centers(keys: np.ndarray, resolution: float) -> np.ndarray:
    return (np.asarray(keys, dtype=np.float64).reshape(-1, 3) + 0.5) * resolution


def pack_keys(keys: np.ndarray) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.int64).reshape(-1, 3)
    if keys.size and (np.abs(keys).max() >= KEY_LIMIT):
        raise ValueError(f"voxel key outside the addressable range ±{KEY_LIMIT}")
    shifted = keys + _OFFSET
    return (shifted[:, 0] << (2 * _BITS)) | (shifted[:, 1] << _BITS) | shifted[:, 2]


def unpack_keys(packed: np.ndarray) -> np.ndarray:
    packed = np.asarray(packed, dtype=np.int64).reshape(-1)
    keys = np.stack([(packed >> (2 * _BITS)) & _MASK, (packed >> _BITS) & _MASK, packed & _MASK], axis=1)
    return keys - _OFFSET
