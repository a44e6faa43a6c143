import json
import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "../src")))

from pointcloud import parse_frame, to_world
from schema.errors import FieldValidationError
from schema.labels import SemanticLabel
from synthetic import (
    SceneSpec,
    SensorSpec,
    Waypoint,
    corrupt_labels,
    generate_trajectory,
    load_truth,
    load_waypoints,
    loop_waypoints,
    render_frame,
    sensor_pose,
    write_dataset,
)
from synthetic.trajectory import heading_rotation

TOL = 1e-6


def _sensor(**overrides):
    values = dict(points_per_frame=3000, depth_noise=0.0)
    values.update(overrides)
    return SensorSpec(**values)


def test_flat_wall_at_two_meters():
    scene = SceneSpec(extents=(4.0, 4.0, 3.0))
    pose = sensor_pose((2.0, 2.0, 1.5), heading_rotation(0.0))
    frame, labels = render_frame(scene, _sensor(points_per_frame=1200, hfov_deg=40.0, vfov_deg=30.0), pose)

    assert len(frame) > 1000
    assert np.allclose(frame.xyz[:, 2], 2.0, atol=1e-9)
    assert (labels == int(SemanticLabel.WALL)).all()
    assert np.allclose(to_world(frame).xyz[:, 0], 4.0, atol=1e-9)


def test_zero_field_of_view_gives_at_most_one_point():
    scene = SceneSpec()
    pose = sensor_pose((3.0, 3.0, 1.08), heading_rotation(30.0))
    frame, labels = render_frame(scene, _sensor(hfov_deg=0.0, vfov_deg=0.0), pose)
    assert len(frame) <= 1
    assert labels.shape == (len(frame),)


def test_rendering_is_deterministic_per_seed():
    scene = SceneSpec.office()
    pose = sensor_pose((3.3, 3.0, 1.08), heading_rotation(200.0))
    sensor = _sensor(depth_noise=0.01)

    a, labels_a = render_frame(scene, sensor, pose, seed=(4, 2))
    b, labels_b = render_frame(scene, sensor, pose, seed=(4, 2))
    c, _ = render_frame(scene, sensor, pose, seed=(4, 3))

    assert np.array_equal(a.xyz, b.xyz)
    assert np.array_equal(a.rgb, b.rgb)
    assert np.array_equal(labels_a, labels_b)
    assert not (len(a) == len(c) and np.array_equal(a.xyz, c.xyz))


@pytest.mark.parametrize("yaw", [0.0, 45.0, 135.0, 260.0])
def test_points_lie_on_surfaces_with_matching_labels(yaw):
    scene = SceneSpec.office()
    pose = sensor_pose((3.3, 3.0, 1.08), heading_rotation(yaw))
    frame, labels = render_frame(scene, _sensor(), pose)
    world = to_world(frame).xyz
    ex, ey, ez = scene.extents

    # 每个点都必须落在与其标签一致的表面上
    on_surface = np.zeros(len(frame), dtype=bool)
    wall = labels == int(SemanticLabel.WALL)
    near_wall = ((np.abs(world[:, 0]) < TOL) | (np.abs(world[:, 0] - ex) < TOL)
                 | (np.abs(world[:, 1]) < TOL) | (np.abs(world[:, 1] - ey) < TOL))
    on_surface |= wall & near_wall
    on_surface |= (labels == int(SemanticLabel.FLOOR)) & (np.abs(world[:, 2]) < TOL)
    on_surface |= (labels == int(SemanticLabel.CEILING)) & (np.abs(world[:, 2] - ez) < TOL)
    for box in scene.boxes:
        lower = np.asarray(box.lower)
        upper = np.asarray(box.upper)
        inside = ((world >= lower - TOL) & (world <= upper + TOL)).all(axis=1)
        face = ((np.abs(world - lower) < TOL) | (np.abs(world - upper) < TOL)).any(axis=1)
        on_surface |= (labels == int(box.label)) & inside & face

    assert len(frame) > 1000
    assert on_surface.all()
    assert not (labels == int(SemanticLabel.UNKNOWN)).any()


def test_sensor_outside_room_is_rejected():
    with pytest.raises(FieldValidationError):
        render_frame(SceneSpec(), _sensor(), sensor_pose((10.0, 1.0, 1.0), heading_rotation(0.0)))


def test_sensor_spec_validation():
    with pytest.raises(FieldValidationError):
        SensorSpec(label_noise=0.5)
    with pytest.raises(FieldValidationError):
        SensorSpec.from_dict({"points": 10})
    assert SensorSpec.kinect() == SensorSpec()


def test_corrupt_labels_statistics():
    labels = np.zeros(100000, dtype=np.uint8)
    noisy = corrupt_labels(labels, 0.3, seed=1)
    flipped = noisy != 0

    assert abs(flipped.mean() - 0.3) < 0.01
    assert not (noisy == int(SemanticLabel.UNKNOWN)).any()
    for label in range(1, 8):
        assert abs((noisy == label).mean() - 0.3 / 7) < 0.005


def test_corrupt_labels_edge_cases():
    labels = np.random.default_rng(2).integers(0, 9, 1000).astype(np.uint8)
    assert np.array_equal(corrupt_labels(labels, 0.0, seed=3), labels)
    assert np.array_equal(corrupt_labels(labels, 0.2, seed=3), corrupt_labels(labels, 0.2, seed=3))

    unknown = np.full(500, int(SemanticLabel.UNKNOWN), dtype=np.uint8)
    replaced = corrupt_labels(unknown, 1.0, seed=4)
    assert replaced.max() < int(SemanticLabel.UNKNOWN)

    always = corrupt_labels(labels, 1.0, seed=5)
    objects = labels < 8
    assert (always[objects] != labels[objects]).all()
    with pytest.raises(FieldValidationError):
        corrupt_labels(labels, 1.5)


def test_trajectory_interpolates_position_and_heading():
    poses = generate_trajectory(SceneSpec(), [Waypoint(1.0, 1.0, 0.0), Waypoint(3.0, 1.0, 90.0)], 3)

    assert [t for t, _ in poses] == pytest.approx([0.0, 1 / 30, 2 / 30])
    _, middle = poses[1]
    assert middle.translation == pytest.approx((2.0, 1.0, 1.08))
    forward = middle.rotation_matrix() @ np.array([0.0, 0.0, 1.0])
    angle = math.radians(45.0)
    assert np.allclose(forward, [math.cos(angle), math.sin(angle), 0.0], atol=1e-9)


def test_segments_share_their_joint_frame():
    waypoints = [Waypoint(1.0, 1.0, 0.0), Waypoint(2.0, 1.0, 0.0), Waypoint(2.0, 2.0, 90.0)]
    poses = generate_trajectory(SceneSpec(), waypoints, 4)

    assert len(poses) == 7
    assert poses[3][1].translation == pytest.approx((2.0, 1.0, 1.08))
    assert poses[-1][1].translation == pytest.approx((2.0, 2.0, 1.08))


def test_trajectory_validation():
    with pytest.raises(FieldValidationError):
        generate_trajectory(SceneSpec(), [Waypoint(1.0, 1.0), Waypoint(9.0, 1.0)], 5)
    with pytest.raises(FieldValidationError):
        generate_trajectory(SceneSpec(), [Waypoint(1.0, 1.0), Waypoint(2.0, 1.0)], 1)
    with pytest.raises(FieldValidationError):
        generate_trajectory(SceneSpec(), [], 5)


def test_waypoint_file_and_loop(tmp_path):
    path = tmp_path / "waypoints.json"
    path.write_text(json.dumps({
        "waypoints": [[1.0, 1.0, 0.0], {"x": 2.0, "y": 1.5, "yaw_deg": 30.0}],
        "frames_per_segment": 6,
    }), encoding="utf-8")
    waypoints, frames = load_waypoints(path)

    assert frames == 6
    assert waypoints == [Waypoint(1.0, 1.0, 0.0), Waypoint(2.0, 1.5, 30.0)]

    loop = loop_waypoints(SceneSpec())
    assert [w.x for w in loop] == pytest.approx([1.0, 5.7, 5.7, 1.0, 1.0])
    assert [w.y for w in loop] == pytest.approx([1.0, 1.0, 5.8, 5.8, 1.0])


def test_dataset_writer(tmp_path):
    scene = SceneSpec.office()
    sensor = _sensor(points_per_frame=500, depth_noise=0.005)
    poses = generate_trajectory(scene, [Waypoint(2.0, 3.0, 0.0), Waypoint(3.0, 3.0, 20.0)], 3)
    dataset = write_dataset(tmp_path / "sim", scene, sensor, poses, seed=7)

    assert len(dataset) == 3
    assert dataset.scene == scene
    assert dataset.sensor == sensor
    assert len(dataset.trajectory) == 3

    stem = dataset.stems[1]
    frame = parse_frame(dataset.frame_path(stem), trajectory=dataset.trajectory)
    truth = load_truth(dataset.truth_path(stem), count=len(frame))
    expected, expected_labels = render_frame(scene, sensor, poses[1][1], seed=(7, 1))

    assert np.allclose(frame.xyz, expected.xyz, atol=1e-5)
    assert np.array_equal(truth, expected_labels)
    assert frame.timestamp == pytest.approx(1 / 30, abs=1e-6)


def test_dataset_writer_rejects_empty_trajectory(tmp_path):
    with pytest.raises(FieldValidationError):
        write_dataset(tmp_path / "sim", SceneSpec(), _sensor(), [])
