import os
import sys

import numpy as np
import pandas as pd
import pytest
from loguru import logger

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "../src")))

from config import PipelineConfig
from materials import MaterialDatabase, default_matching_table
from pipeline import (
    DirectorySource,
    LabelSource,
    MapBuilder,
    MemorySource,
    NoisyOracleLabels,
    OracleLabels,
    bench_fingerprint,
    open_source,
    oracle_label_image,
    run_bench,
)
from pointcloud import Pose, Trajectory, to_world, write_frame
from projection import backproject_labels, fill_holes_report, project_frame
from schema.errors import FrameError
from segmentation import LabelField, unary_from_labels
from synthetic import (
    SceneSpec,
    SensorSpec,
    Waypoint,
    generate_trajectory,
    loop_waypoints,
    render_frame,
    sensor_pose,
    write_dataset,
)
from synthetic.trajectory import heading_rotation
from voxelmap import Occupancy, OccupancyGrid, VoxelKey, pack_keys, snapshot_bytes, unpack_keys, world_to_keys

CONCRETE = 0
# 房间 x 方向止于体素中心，避免墙面正好落在体素边界上
WALL_ROOM = SceneSpec(extents=(3.95, 4.0, 3.0))


def _config(*overrides):
    config = PipelineConfig()
    config.apply_overrides(["crf.enabled=false", "holes.max_iters=0", *overrides])
    return config.validate()


def _render(scene, sensor, poses, seed=0):
    return [render_frame(scene, sensor, pose, seed=(seed, i), timestamp=t) for i, (t, pose) in enumerate(poses)]


def _wall_frames(count=3, points=5000):
    pose = sensor_pose((2.0, 2.0, 1.5), heading_rotation(0.0))
    sensor = SensorSpec(points_per_frame=points, depth_noise=0.0)
    return _render(WALL_ROOM, sensor, [(i / 30.0, pose) for i in range(count)])


def _office_frames(count, points, seed=0, label_noise=0.0):
    scene = SceneSpec.office()
    sensor = SensorSpec(points_per_frame=points, depth_noise=0.0, label_noise=label_noise)
    poses = generate_trajectory(scene, loop_waypoints(scene), 26)[:count]
    return _render(scene, sensor, poses, seed), sensor


class WallLabels(LabelSource):
    """每个像素都标成 Wall"""

    def labels_for(self, task, img, truth):
        return LabelField.one_hot(np.zeros(img.shape, dtype=np.int64))


def test_wall_scene_maps_to_concrete():
    builder = MapBuilder(_config("grid.p_occ=0.5"))
    result = builder.build(MemorySource(_wall_frames()))
    grid = result.grid
    occupied = grid.occupied_mask()

    assert result.frames == 3
    assert occupied.sum() > 0
    assert (grid.materials()[occupied] == CONCRETE).all()
    assert np.allclose(grid.centers()[occupied][:, 0], 3.95, atol=0.051)


def test_zero_frames_give_an_empty_map():
    result = MapBuilder(_config()).build(MemorySource([]))
    assert result.frames == 0
    assert len(result.grid) == 0


def test_missing_pose_names_the_frame(tmp_path):
    (frame, _), (second, _) = _wall_frames(count=2, points=500)
    write_frame(frame, tmp_path / "frame_000000.ply")
    write_frame(second, tmp_path / "frame_000001.ply")
    trajectory = Trajectory({0.0: frame.pose})
    builder = MapBuilder(_config("runtime.single_threaded=true"), labels=WallLabels())

    with pytest.raises(FrameError) as exc:
        builder.build(DirectorySource(tmp_path, trajectory=trajectory))
    assert "t=0.033333" in str(exc.value)


def test_single_and_multi_threaded_runs_are_identical():
    frames, sensor = _office_frames(8, 3000, label_noise=0.2)
    single = MapBuilder(_config("labels.source=noisy_oracle", "runtime.single_threaded=true"))
    multi = MapBuilder(_config("labels.source=noisy_oracle", "runtime.workers=4", "runtime.lookahead=3"))

    a = single.build(MemorySource(frames, sensor))
    b = multi.build(MemorySource(frames, sensor))
    assert a.timestamps == b.timestamps
    assert snapshot_bytes(a.grid) == snapshot_bytes(b.grid)


def test_repeated_runs_are_deterministic():
    frames, sensor = _office_frames(4, 2000, label_noise=0.2)
    builder = MapBuilder(_config("labels.source=noisy_oracle"))
    first = builder.build(MemorySource(frames, sensor)).grid
    second = builder.build(MemorySource(frames, sensor)).grid
    assert snapshot_bytes(first) == snapshot_bytes(second)


def test_manual_stage_chain_matches_builder():
    frames, _ = _office_frames(3, 2000)
    config = _config("runtime.single_threaded=true")
    db = MaterialDatabase.default()
    material_of_label = default_matching_table(db).as_array()

    grid = OccupancyGrid(config.grid.params())
    camera = config.camera.model()
    for frame, truth in frames:
        img = project_frame(frame, camera)
        fill_holes_report(img, config.holes.kernel, config.holes.max_iters)
        hard = LabelField.one_hot(oracle_label_image(img, truth))
        unary = unary_from_labels(hard, config.crf.confidence)
        materials = material_of_label[backproject_labels(img, unary, frame)]
        world = to_world(frame)
        grid.insert_labeled_frame(world.xyz, world.rgb, materials, frame.pose.origin)

    built = MapBuilder(config, database=db).build(MemorySource(frames)).grid
    assert snapshot_bytes(built) == snapshot_bytes(grid)


def _true_materials(frames, resolution):
    """渲染真值 -> 每个体素的材料：众数（并列取小编号）与不同材料数"""
    material_of_label = default_matching_table(MaterialDatabase.default()).as_array()
    keys, materials = [], []
    for frame, truth in frames:
        keys.append(pack_keys(world_to_keys(to_world(frame).xyz, resolution)))
        materials.append(material_of_label[truth])
    points = pd.DataFrame({"key": np.concatenate(keys), "material": np.concatenate(materials)})
    counts = points.groupby(["key", "material"]).size().reset_index(name="n")
    mode = counts.sort_values(["key", "n", "material"], ascending=[True, False, True]).drop_duplicates("key")
    return pd.DataFrame({
        "material": mode.set_index("key")["material"],
        "distinct": counts.groupby("key").size(),
    })


def _grid_table(grid):
    return pd.DataFrame({
        "material": grid.materials(),
        "occupied": grid.occupied_mask(),
        "observations": grid.histograms().sum(axis=1),
    }, index=pack_keys(grid.keys()))


@pytest.mark.slow
def test_noisy_labels_recover_the_true_material():
    frames, sensor = _office_frames(100, 30000, label_noise=0.3)
    config = _config("runtime.workers=4")
    grid = MapBuilder(config, labels=NoisyOracleLabels(0.3, seed=11)).build(MemorySource(frames, sensor)).grid

    cells = _grid_table(grid).join(_true_materials(frames, config.grid.resolution), rsuffix="_true", how="inner")
    well_seen = cells[cells["occupied"] & (cells["observations"] >= 20)]
    assert len(well_seen) >= 200

    agreement = (well_seen["material"] == well_seen["material_true"]).mean()
    assert agreement >= 0.97


def test_clean_labels_are_exact_on_single_surface_cells():
    frames, sensor = _office_frames(10, 5000)
    config = _config()
    grid = MapBuilder(config).build(MemorySource(frames, sensor)).grid

    truth = _true_materials(frames, config.grid.resolution)
    single = truth[truth["distinct"] == 1]
    checked = 0
    for packed, expected in single["material"].items():
        key = VoxelKey(*unpack_keys(np.array([packed]))[0].tolist())
        if grid.query_occupancy(key) is Occupancy.OCCUPIED:
            assert grid.query_material(key) == expected
            checked += 1
    assert checked > 0


def test_dataset_directory_round_trip(tmp_path):
    scene = SceneSpec.office()
    sensor = SensorSpec(points_per_frame=1500)
    poses = generate_trajectory(scene, [Waypoint(2.0, 3.0, 0.0), Waypoint(3.0, 3.0, 30.0)], 3)
    write_dataset(tmp_path / "sim", scene, sensor, poses, seed=2)

    seen = []
    source = open_source(tmp_path / "sim")
    result = MapBuilder(_config()).build(source, on_frame=lambda item: seen.append(item.task.stem))

    assert result.frames == 3
    assert seen == ["frame_000000", "frame_000001", "frame_000002"]
    assert result.timestamps == pytest.approx([0.0, 1 / 30, 2 / 30])
    assert len(result.grid) > 0


def test_crf_refinement_keeps_a_uniform_scene():
    config = _config(
        "crf.enabled=true", "crf.downsample=4", "crf.iterations=5", "grid.p_occ=0.5",
        "camera.width=160", "camera.height=120", "camera.focal=131.25", "camera.cx=79.5", "camera.cy=59.5",
    )
    grid = MapBuilder(config).build(MemorySource(_wall_frames(count=2, points=3000))).grid
    occupied = grid.occupied_mask()

    assert occupied.sum() > 0
    assert (grid.materials()[occupied] == CONCRETE).all()


def test_bench_reports_every_frame():
    frames, sensor = _office_frames(50, 500)
    builder = MapBuilder(_config("runtime.workers=3"))
    report = run_bench(builder, MemorySource(frames, sensor), frames=40)

    assert report.samples == 40
    assert "insert" in report.summary().index
    assert len(report.insert_path_ms()) == 40
    assert report.to_dict()["insert_path"]["median_ms"] > 0
    assert not report.crf_enabled
    assert builder.config.runtime.single_threaded is False

    again = run_bench(builder, MemorySource(frames, sensor), frames=40)
    assert bench_fingerprint(report) == bench_fingerprint(again)
    assert "insert path" in report.format()


def test_short_bench_warns():
    frames, sensor = _office_frames(3, 500)
    messages = []
    handler = logger.add(messages.append, level="WARNING", format="{message}")
    try:
        run_bench(MapBuilder(_config()), MemorySource(frames, sensor))
    finally:
        logger.remove(handler)
    assert any("only 3 frames" in message for message in messages)


@pytest.mark.slow
def test_insert_path_throughput():
    frames, sensor = _office_frames(50, 30000)
    report = run_bench(MapBuilder(_config()), MemorySource(frames, sensor))

    assert report.samples == 50
    median = report.to_dict()["insert_path"]["median_ms"]
    print(report.format())
    assert median < 100.0


def test_pose_is_taken_from_the_frame():
    (frame, truth), = _wall_frames(count=1, points=500)
    moved = frame.with_pose(Pose(tuple(np.asarray(frame.pose.translation) + [0.0, 0.5, 0.0]), frame.pose.rotation))
    a = MapBuilder(_config()).build(MemorySource([(frame, truth)])).grid
    b = MapBuilder(_config()).build(MemorySource([(moved, truth)])).grid

    shift = np.round((b.centers().mean(axis=0) - a.centers().mean(axis=0)) / 0.1).astype(int)
    assert shift.tolist() == [0, 5, 0]
