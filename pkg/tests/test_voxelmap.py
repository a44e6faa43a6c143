import os
import sys

import numpy as np
import pandas as pd
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "../src")))

from materials import MaterialDatabase
from pointcloud import read_ply
from schema.errors import FieldValidationError, ParseError
from voxelmap import (
    GridParams,
    Occupancy,
    OccupancyGrid,
    VoxelKey,
    export_absorption,
    export_map,
    load_snapshot,
    map_stats,
    pack_keys,
    save_snapshot,
    snapshot_bytes,
    traverse_rays,
    unpack_keys,
    world_to_key,
    world_to_keys,
)
from voxelmap import raycast

CONCRETE, WOOD, CARPET, UNKNOWN = 0, 4, 7, 8
ORIGIN = (0.05, 0.05, 0.05)


def _labeled_grid(**overrides):
    """阈值 0、不做射线雕刻：一次命中即占据"""
    params = dict(p_occ=0.5, carve_free_space=False)
    params.update(overrides)
    return OccupancyGrid(GridParams(**params))


def _insert(grid, points, materials, origin=ORIGIN, rgb=None):
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if rgb is None:
        rgb = np.zeros((points.shape[0], 3))
    return grid.insert_labeled_frame(points, rgb, np.asarray(materials), origin)


def _cells(packed):
    return {tuple(k) for k in unpack_keys(packed).tolist()}


def test_traversal_along_an_axis():
    packed = traverse_rays(np.array(ORIGIN), np.array([[0.25, 0.05, 0.05]]), 0.1)
    assert _cells(packed) == {(0, 0, 0), (1, 0, 0)}


def test_traversal_of_a_diagonal_ray():
    packed = traverse_rays(np.array(ORIGIN), np.array([[0.35, 0.25, 0.05]]), 0.1)
    cells = _cells(packed)

    assert len(packed) == 5
    assert (0, 0, 0) in cells
    assert (3, 2, 0) not in cells


def _reference_traversal(origin, endpoint, resolution):
    """逐条射线的标量 DDA"""
    start = np.asarray(origin, dtype=np.float64) / resolution
    stop = np.asarray(endpoint, dtype=np.float64) / resolution
    direction = stop - start
    cell = np.floor(start).astype(np.int64)
    end = np.floor(stop).astype(np.int64)
    step = np.sign(direction).astype(np.int64)
    t_max = np.full(3, np.inf)
    t_delta = np.full(3, np.inf)
    for a in range(3):
        if direction[a] != 0:
            boundary = cell[a] + 1 if step[a] > 0 else cell[a]
            t_max[a] = (boundary - start[a]) * (1.0 / direction[a])
            t_delta[a] = abs(1.0 / direction[a])
    cells = set()
    while (cell != end).any():
        cells.add(tuple(cell.tolist()))
        axis = int(np.argmin(t_max))
        crossing = t_max[axis]
        cell[axis] += step[axis]
        t_max[axis] += t_delta[axis]
        if crossing > 1.0 + 1e-9:
            break
    return cells


def test_traversal_matches_scalar_reference():
    rng = np.random.default_rng(3)
    origin = np.array([1.23, 0.71, 1.05])
    endpoints = origin + rng.uniform(-2.0, 2.0, (300, 3))

    packed = traverse_rays(origin, endpoints, 0.1)
    expected = set()
    for endpoint in endpoints:
        expected |= _reference_traversal(origin, endpoint, 0.1)

    assert _cells(packed) == expected
    assert (np.diff(packed) > 0).all()


@pytest.mark.parametrize("max_range", [None, 1.5])
def test_dense_and_packed_traversal_agree(monkeypatch, max_range):
    rng = np.random.default_rng(4)
    origin = np.array([-0.37, 2.11, 0.52])
    endpoints = origin + rng.uniform(-3.0, 3.0, (2000, 3))

    dense = traverse_rays(origin, endpoints, 0.1, max_range=max_range)
    monkeypatch.setattr(raycast, "MAX_MARK_CELLS", 0)
    packed = traverse_rays(origin, endpoints, 0.1, max_range=max_range)

    assert np.array_equal(dense, packed)
    assert (np.diff(packed) > 0).all()


def test_world_to_key_floors_each_axis():
    assert world_to_key((0.05, -0.05, 1.0), 0.1) == VoxelKey(0, -1, 10)
    assert world_to_keys(np.array([[0.19, 0.2, -0.21]]), 0.1).tolist() == [[1, 2, -3]]


def test_single_ray_updates():
    grid = OccupancyGrid()
    stats = _insert(grid, [[0.25, 0.05, 0.05]], [CONCRETE])

    assert stats.hit_cells == 1 and stats.miss_cells == 2 and stats.new_cells == 3
    assert grid.cell((0, 0, 0)).log_odds == pytest.approx(-0.4)
    assert grid.cell((1, 0, 0)).log_odds == pytest.approx(-0.4)
    assert grid.cell((2, 0, 0)).log_odds == pytest.approx(0.85)
    assert grid.cell((2, 0, 0)).histogram[CONCRETE] == 1
    assert grid.cell((1, 0, 0)).observations == 0


def test_hit_wins_over_miss_within_a_frame():
    grid = OccupancyGrid()
    _insert(grid, [[0.15, 0.05, 0.05], [0.25, 0.05, 0.05]], [CONCRETE, CONCRETE])
    assert grid.cell((1, 0, 0)).log_odds == pytest.approx(0.85)
    assert grid.cell((0, 0, 0)).log_odds == pytest.approx(-0.4)


def test_hit_then_miss_cancels_with_symmetric_updates():
    grid = OccupancyGrid(GridParams(l_hit=0.4, l_miss=-0.4))
    _insert(grid, [[0.15, 0.05, 0.05]], [CONCRETE])
    _insert(grid, [[0.25, 0.05, 0.05]], [CONCRETE])
    assert grid.cell((1, 0, 0)).log_odds == 0.0


def test_log_odds_are_clamped():
    grid = OccupancyGrid()
    for _ in range(10):
        _insert(grid, [[0.25, 0.05, 0.05]], [CONCRETE])

    assert grid.cell((2, 0, 0)).log_odds == 3.5
    assert grid.cell((0, 0, 0)).log_odds == -2.0
    assert grid.query_occupancy((2, 0, 0)) is Occupancy.OCCUPIED
    assert grid.query_occupancy((0, 0, 0)) is Occupancy.FREE
    assert grid.query_occupancy((5, 5, 5)) is Occupancy.UNKNOWN
    assert grid.query_material((0, 0, 0)) is None


def test_default_threshold_needs_several_hits():
    grid = OccupancyGrid()
    _insert(grid, [[0.25, 0.05, 0.05]], [CONCRETE])
    assert grid.query_occupancy((2, 0, 0)) is Occupancy.FREE
    for _ in range(4):
        _insert(grid, [[0.25, 0.05, 0.05]], [CONCRETE])
    assert grid.query_occupancy((2, 0, 0)) is Occupancy.OCCUPIED


def test_carving_stops_at_max_range():
    grid = OccupancyGrid(GridParams(max_range=8.0))
    stats = _insert(grid, [[20.05, 0.05, 0.05]], [CONCRETE])

    assert stats.miss_cells == 80
    assert grid.cell((79, 0, 0)) is not None
    assert grid.cell((80, 0, 0)) is None
    assert grid.cell((200, 0, 0)).log_odds == pytest.approx(0.85)


def test_color_running_mean():
    grid = _labeled_grid()
    _insert(grid, [[0.05, 0.05, 0.05]] * 2, [WOOD, WOOD], rgb=[[10, 20, 30], [20, 40, 60]])
    _insert(grid, [[0.05, 0.05, 0.05]], [WOOD], rgb=[[30, 60, 90]])

    cell = grid.cell((0, 0, 0))
    assert cell.color_mean == pytest.approx((20.0, 40.0, 60.0))
    assert cell.color_count == 3


@pytest.mark.parametrize("counts, expected", [
    ({WOOD: 5, CONCRETE: 2}, WOOD),
    ({WOOD: 3, CONCRETE: 3}, CONCRETE),
    ({UNKNOWN: 10, CARPET: 1}, CARPET),
    ({UNKNOWN: 4}, UNKNOWN),
])
def test_query_material_mode(counts, expected):
    grid = _labeled_grid()
    materials = [m for m, n in counts.items() for _ in range(n)]
    _insert(grid, [[0.05, 0.05, 0.05]] * len(materials), materials)
    assert grid.query_material(VoxelKey(0, 0, 0)) == expected


def test_material_of_unseen_cell_is_none():
    assert _labeled_grid().query_material((1, 2, 3)) is None


def test_materials_match_brute_force_mode():
    rng = np.random.default_rng(0)
    n = 200
    histograms = rng.integers(0, 4, (n, 9)) * (rng.random((n, 9)) < 0.4)
    histograms[:5] = 0
    grid = _labeled_grid()
    grid.restore(
        keys=np.column_stack([np.arange(n), np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64)]),
        log_odds=np.ones(n), color_mean=np.zeros((n, 3)), color_count=np.zeros(n, dtype=np.int64),
        histogram=histograms,
    )

    for row, histogram in enumerate(histograms.tolist()):
        known = histogram[:UNKNOWN]
        if max(known) > 0:
            expected = known.index(max(known))
        elif histogram[UNKNOWN] > 0:
            expected = UNKNOWN
        else:
            expected = -1
        assert grid.materials()[row] == expected


def _random_frames(rng):
    """1-4 帧，挤在 6x6x6 个体素里的随机点、颜色与材料"""
    n_materials = int(rng.integers(1, 10))
    frames = []
    for _ in range(int(rng.integers(1, 5))):
        n = int(rng.integers(1, 2500))
        frames.append((rng.uniform(0.0, 0.6, (n, 3)), rng.integers(0, n_materials, n), rng.integers(0, 256, (n, 3))))
    return frames


def _brute_force_mode(histogram):
    known = list(histogram[:UNKNOWN])
    if max(known) > 0:
        return known.index(max(known))
    return UNKNOWN if histogram[UNKNOWN] > 0 else None


def _sorted_by_key(grid, values):
    return values[np.argsort(pack_keys(grid.keys()))]


def test_randomized_insertions_match_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(200):
        frames = _random_frames(rng)
        grid = _labeled_grid()
        expected = {}
        for points, materials, rgb in frames:
            _insert(grid, points, materials, rgb=rgb)
            for key, material in zip(world_to_keys(points, 0.1).tolist(), materials.tolist()):
                expected.setdefault(tuple(key), [0] * 9)[material] += 1

        assert len(grid) == len(expected)
        assert int(grid.histograms().sum()) == sum(len(points) for points, _, _ in frames)
        for key, histogram in expected.items():
            assert grid.cell(key).histogram == tuple(histogram)
            assert grid.query_material(key) == _brute_force_mode(histogram)


def test_histograms_are_conserved_with_carving():
    rng = np.random.default_rng(8)
    grid = OccupancyGrid(GridParams(p_occ=0.7))
    inserted = 0
    for points, materials, rgb in _random_frames(rng) + _random_frames(rng):
        stats = _insert(grid, points, materials, origin=(1.55, 1.55, 1.55), rgb=rgb)
        inserted += stats.points
        assert int(grid.histograms().sum()) == inserted
    assert int(grid.color_counts().sum()) == inserted


@pytest.mark.parametrize("seed", [11, 12, 13])
def test_insertion_order_does_not_change_materials(seed):
    rng = np.random.default_rng(seed)
    frames = _random_frames(rng)
    forward = _labeled_grid()
    for points, materials, rgb in frames:
        _insert(forward, points, materials, rgb=rgb)

    shuffled = _labeled_grid()
    for index in rng.permutation(len(frames)):
        points, materials, rgb = frames[index]
        order = rng.permutation(len(points))
        _insert(shuffled, points[order], materials[order], rgb=rgb[order])

    assert np.array_equal(_sorted_by_key(forward, forward.keys()), _sorted_by_key(shuffled, shuffled.keys()))
    assert np.array_equal(_sorted_by_key(forward, forward.histograms()), _sorted_by_key(shuffled, shuffled.histograms()))
    assert np.array_equal(_sorted_by_key(forward, forward.materials()), _sorted_by_key(shuffled, shuffled.materials()))
    assert np.allclose(_sorted_by_key(forward, forward.color_means()), _sorted_by_key(shuffled, shuffled.color_means()))


@pytest.mark.parametrize("seed", [21, 22, 23])
def test_color_means_match_exact_sums(seed):
    rng = np.random.default_rng(seed)
    frames = _random_frames(rng)
    grid = _labeled_grid()
    for points, materials, rgb in frames:
        _insert(grid, points, materials, rgb=rgb)

    points = np.concatenate([f[0] for f in frames])
    rgb = np.concatenate([f[2] for f in frames]).astype(np.float64)
    keys, inverse = np.unique(pack_keys(world_to_keys(points, 0.1)), return_inverse=True)
    inverse = inverse.reshape(-1)
    counts = np.bincount(inverse)
    exact = np.stack([np.bincount(inverse, weights=rgb[:, c]) for c in range(3)], axis=1) / counts[:, None]

    assert np.array_equal(_sorted_by_key(grid, pack_keys(grid.keys())), keys)
    assert np.array_equal(_sorted_by_key(grid, grid.color_counts()), counts)
    assert np.abs(_sorted_by_key(grid, grid.color_means()) - exact).max() <= 0.5


def test_rejects_bad_material_ids_and_points():
    grid = OccupancyGrid()
    with pytest.raises(FieldValidationError):
        _insert(grid, [[0.05, 0.05, 0.05]], [9])
    with pytest.raises(FieldValidationError):
        _insert(grid, [[np.nan, 0.05, 0.05]], [CONCRETE])
    with pytest.raises(FieldValidationError):
        GridParams(l_miss=0.2)


def _busy_grid(seed=1):
    rng = np.random.default_rng(seed)
    grid = OccupancyGrid(GridParams(p_occ=0.7))
    for _ in range(3):
        points = rng.uniform(0.0, 3.0, (500, 3))
        _insert(grid, points, rng.integers(0, 9, 500), origin=(1.5, 1.5, 1.5), rgb=rng.integers(0, 256, (500, 3)))
    return grid


def test_snapshot_round_trip_is_byte_exact(tmp_path):
    grid = _busy_grid()
    path = save_snapshot(grid, tmp_path / "map.amap")
    loaded = load_snapshot(path)

    assert len(loaded) == len(grid)
    assert loaded.params == grid.params
    assert snapshot_bytes(loaded) == snapshot_bytes(grid)
    assert path.read_bytes() == snapshot_bytes(grid)
    for key in grid.keys()[:50].tolist():
        assert loaded.query_material(key) == grid.query_material(key)
        assert loaded.query_occupancy(key) is grid.query_occupancy(key)


def test_inserting_after_reload_stays_close(tmp_path):
    grid = _busy_grid()
    loaded = load_snapshot(save_snapshot(grid, tmp_path / "map.amap"))
    rng = np.random.default_rng(5)
    points = rng.uniform(0.0, 3.0, (500, 3))
    materials, rgb = rng.integers(0, 9, 500), rng.integers(0, 256, (500, 3))
    for target in (grid, loaded):
        _insert(target, points, materials, origin=(1.5, 1.5, 1.5), rgb=rgb)

    assert np.array_equal(_sorted_by_key(grid, grid.keys()), _sorted_by_key(loaded, loaded.keys()))
    assert np.array_equal(_sorted_by_key(grid, grid.histograms()), _sorted_by_key(loaded, loaded.histograms()))
    assert np.abs(_sorted_by_key(grid, grid.log_odds()) - _sorted_by_key(loaded, loaded.log_odds())).max() < 1e-5
    assert np.abs(_sorted_by_key(grid, grid.color_means()) - _sorted_by_key(loaded, loaded.color_means())).max() <= 0.5


def test_empty_snapshot_round_trip(tmp_path):
    loaded = load_snapshot(save_snapshot(OccupancyGrid(), tmp_path / "empty.amap"))
    assert len(loaded) == 0


def test_corrupt_snapshots_are_rejected(tmp_path):
    data = snapshot_bytes(_busy_grid())

    bad_magic = tmp_path / "magic.amap"
    bad_magic.write_bytes(b"XMAP" + data[4:])
    with pytest.raises(ParseError):
        load_snapshot(bad_magic)

    truncated = tmp_path / "short.amap"
    truncated.write_bytes(data[:-3])
    with pytest.raises(ParseError):
        load_snapshot(truncated)


def test_export_of_empty_map(tmp_path):
    path = export_map(OccupancyGrid(), "material", tmp_path / "empty.ply")
    ply = read_ply(path)
    assert ply.xyz.shape == (0, 3)
    assert "acoustic-map material" in ply.comments


def test_material_export_uses_palette_and_centers(tmp_path):
    db = MaterialDatabase.default()
    grid = _labeled_grid()
    _insert(grid, [[0.05, 0.05, 0.05]], [CONCRETE], rgb=[[9, 9, 9]])

    material = read_ply(export_map(grid, "material", tmp_path / "m.ply", db))
    assert material.rgb.tolist() == [list(db.get(CONCRETE).display_color)]
    assert np.allclose(material.xyz, [[0.05, 0.05, 0.05]], atol=1e-7)

    color = read_ply(export_map(grid, "color", tmp_path / "c.ply", db, binary=False))
    assert color.rgb.tolist() == [[9, 9, 9]]


def test_absorption_export(tmp_path):
    db = MaterialDatabase.default()
    grid = _labeled_grid()
    _insert(grid, [[0.05, 0.05, 0.05], [0.35, 0.05, 0.05]], [WOOD, CONCRETE])

    table = pd.read_csv(export_absorption(grid, db, tmp_path / "alpha.csv"))
    assert list(table.columns[:7]) == ["i", "j", "k", "x", "y", "z", "material"]
    assert table["material"].tolist() == ["Wood", "Concrete"]
    assert table.loc[1, "alpha_500"] == pytest.approx(db.get(CONCRETE).absorption_at(500), rel=1e-5)


def test_stats_count_each_material():
    db = MaterialDatabase.default()
    grid = _labeled_grid()
    points = [[m * 0.1 + 0.05, 0.05, 0.05] for m in range(9)]
    _insert(grid, points, list(range(9)))
    stats = map_stats(grid, db)

    assert stats.cells == 9 and stats.occupied == 9 and stats.free == 0
    assert stats.unlabeled_occupied == 0
    assert set(stats.material_counts.values()) == {1}
    assert stats.bounds_min == pytest.approx((0.0, 0.0, 0.0))
    assert stats.bounds_max == pytest.approx((0.9, 0.1, 0.1))
    assert stats.memory_bytes > 0
    assert "Concrete: 1" in stats.format()


def test_stats_of_empty_map():
    stats = map_stats(OccupancyGrid())
    assert stats.cells == 0
    assert stats.bounds_min is None and stats.bounds_max is None
    assert sum(stats.material_counts.values()) == 0
