"""
三维体素射线遍历（Amanatides-Woo DDA，所有射线同步步进）

返回射线 origin -> 端点 经过的所有体素，不含端点所在体素。
超过 max_range 的射线只遍历到 max_range 处。

每步只沿一个轴移动一格，所以：
- 体素可以用一个整数下标表示，步进时只加减该轴的步长；
- 经过的体素都落在起点、终点体素的包围盒内（外扩一格），去重在包围盒上的稠密标记数组里完成。
包围盒过大时改用打包键作下标，最后 np.unique 去重。
"""
from typing import List, Optional

import numpy as np

from .keys import PACKED_STRIDES, pack_keys

_T_EPS = 1e-9
# 稠密标记数组上限（字节）
MAX_MARK_CELLS = 1 << 26
# 存活射线比例低于该值时压缩数组
_COMPACT_RATIO = 0.5


def traverse_rays(origin: np.ndarray, endpoints: np.ndarray, resolution: float,
                  max_range: Optional[float] = None) -> np.ndarray:
    """返回经过体素的打包键，升序且唯一。"""
    endpoints = np.asarray(endpoints, dtype=np.float64).reshape(-1, 3)
    if endpoints.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    origin = np.asarray(origin, dtype=np.float64).reshape(3)
    start = np.broadcast_to(origin / resolution, endpoints.shape)
    stop = endpoints / resolution

    if max_range is not None and max_range > 0:
        length = np.linalg.norm(endpoints - origin, axis=1)
        far = length > max_range
        if far.any():
            stop = stop.copy()
            scale = (max_range / length[far])[:, None]
            stop[far] = start[far] + (stop[far] - start[far]) * scale

    direction = stop - start
    cell = np.floor(start).astype(np.int64)
    end = np.floor(stop).astype(np.int64)
    step = np.sign(direction).astype(np.int64)

    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(direction != 0, 1.0 / direction, np.inf)
        t_delta = np.abs(inv)
        boundary = np.where(step > 0, cell + 1, cell).astype(np.float64)
        t_max = np.where(step != 0, (boundary - start) * inv, np.inf)

    active = (cell != end).any(axis=1)
    if not active.any():
        return np.empty(0, dtype=np.int64)
    cell, end, step, t_max, t_delta = cell[active], end[active], step[active], t_max[active], t_delta[active]

    lower = np.minimum(cell.min(axis=0), end.min(axis=0)) - 1
    upper = np.maximum(cell.max(axis=0), end.max(axis=0)) + 1
    extent = upper - lower + 1
    dense = int(np.prod(extent)) <= MAX_MARK_CELLS
    if dense:
        strides = np.array([extent[1] * extent[2], extent[2], 1], dtype=np.int64)
        index = (cell - lower) @ strides
        last = (end - lower) @ strides
        marks = np.zeros(int(np.prod(extent)), dtype=bool)
    else:
        strides = np.array(PACKED_STRIDES, dtype=np.int64)
        index = pack_keys(cell)
        last = pack_keys(end)
    visited: List[np.ndarray] = []

    inc_x, inc_y, inc_z = (np.ascontiguousarray(step[:, a] * strides[a]) for a in range(3))
    tx, ty, tz = (np.ascontiguousarray(t_max[:, a]) for a in range(3))
    dx, dy, dz = (np.ascontiguousarray(t_delta[:, a]) for a in range(3))
    live = np.ones(index.shape[0], dtype=bool)
    alive = index.shape[0]

    while alive:
        current = index[live] if alive < index.shape[0] else index
        if dense:
            marks[current] = True
        else:
            visited.append(current.copy())

        # 与 argmin 一致：并列时 x 优先于 y，y 优先于 z
        on_x = (tx <= ty) & (tx <= tz)
        on_y = ~on_x & (ty <= tz)
        on_z = ~(on_x | on_y)
        crossing = np.minimum(np.minimum(tx, ty), tz)
        np.add(index, inc_x, out=index, where=on_x)
        np.add(index, inc_y, out=index, where=on_y)
        np.add(index, inc_z, out=index, where=on_z)
        np.add(tx, dx, out=tx, where=on_x)
        np.add(ty, dy, out=ty, where=on_y)
        np.add(tz, dz, out=tz, where=on_z)

        live &= (index != last) & (crossing <= 1.0 + _T_EPS)
        alive = int(np.count_nonzero(live))
        if alive and alive < _COMPACT_RATIO * index.shape[0]:
            keep = live
            index, last = index[keep], last[keep]
            inc_x, inc_y, inc_z = inc_x[keep], inc_y[keep], inc_z[keep]
            tx, ty, tz, dx, dy, dz = tx[keep], ty[keep], tz[keep], dx[keep], dy[keep], dz[keep]
            live = np.ones(alive, dtype=bool)

    if dense:
        keys = np.stack(np.unravel_index(np.flatnonzero(marks), tuple(int(v) for v in extent)), axis=1) + lower
        return pack_keys(keys)
    return np.unique(np.concatenate(visited))
