import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "../src")))

from pointcloud import PointCloudFrame
from projection import (
    NO_POINT,
    CameraModel,
    ReconstructedImage,
    backproject_labels,
    dump_reconstructed_image,
    fill_holes,
    fill_holes_report,
    load_correspondence,
    perspective_project,
    project_frame,
    project_points,
    round_half_away,
)
from schema.errors import FieldValidationError
from schema.labels import SemanticLabel
from segmentation import LabelField

# 8x6 小相机：Z = 1 m 时 F/Z = 1，x 米 -> 列 10x + 4
SMALL = CameraModel(focal=10.0, width=8, height=6, cx=4.0, cy=3.0, meters_to_pixels=10.0)


def _frame(xyz, rgb=None):
    xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
    if rgb is None:
        rgb = np.full((xyz.shape[0], 3), 50, dtype=np.uint8)
    return PointCloudFrame(xyz, rgb)


def _image(color, hole):
    """直接构造重建图像（填洞测试用）"""
    color = np.asarray(color, dtype=np.uint8)
    hole = np.asarray(hole, dtype=bool)
    index = np.where(hole, NO_POINT, np.arange(hole.size).reshape(hole.shape))
    depth = np.where(hole, np.nan, 1.0)
    return ReconstructedImage(color=color, depth=depth, point_index=index, hole=hole,
                              point_pixel=np.empty((0, 2), dtype=np.int64))


def _labels(shape, default=SemanticLabel.UNKNOWN, **pixels):
    ids = np.full(shape, int(default), dtype=np.int64)
    for (row, col), label in pixels.get("at", {}).items():
        ids[row, col] = int(label)
    return LabelField.one_hot(ids)


def test_unit_ratio_projection_is_identity():
    cam = CameraModel(focal=100.0, width=640, height=480, cx=0.0, cy=0.0)
    rng = np.random.default_rng(0)
    x = rng.uniform(-500, 500, 1000)
    y = rng.uniform(-500, 500, 1000)
    z = np.full(1000, 100.0)

    x_proj, y_proj = perspective_project(x, y, z, cam)
    assert np.abs(x_proj - x).max() < 1e-9
    assert np.abs(y_proj - y).max() < 1e-9


def test_half_ratio_projection_by_hand():
    cam = CameraModel(focal=100.0, width=640, height=480, cx=320.0, cy=240.0)
    x_proj, y_proj = perspective_project(np.array([322.0]), np.array([240.0]), np.array([200.0]), cam)
    assert x_proj[0] == pytest.approx(321.0, abs=1e-12)
    assert y_proj[0] == pytest.approx(240.0, abs=1e-12)


def test_projection_is_linear_in_offset():
    cam = CameraModel()
    rng = np.random.default_rng(1)
    dx = rng.uniform(-300, 300, 200)
    z = rng.uniform(500, 5000, 200)
    k = rng.uniform(0.1, 3.0, 200)

    base, _ = perspective_project(cam.cx + dx, np.full(200, cam.cy), z, cam)
    scaled, _ = perspective_project(cam.cx + k * dx, np.full(200, cam.cy), z, cam)
    assert np.allclose(scaled - cam.cx, k * (base - cam.cx), atol=1e-9)


def test_round_half_away_from_zero():
    assert round_half_away(np.array([0.5, 1.5, 2.5, -0.5, 2.49])).tolist() == [1.0, 2.0, 3.0, -1.0, 2.0]


def test_nearest_point_owns_the_pixel():
    frame = _frame([[0.0, 0.0, 2.0], [0.0, 0.0, 1.0]], [[10, 10, 10], [200, 0, 0]])
    img = project_frame(frame, CameraModel())

    row, col = img.point_pixel[0]
    assert tuple(img.point_pixel[1]) == (row, col)
    assert img.point_index[row, col] == 1
    assert img.depth[row, col] == 1.0
    assert img.color[row, col].tolist() == [200, 0, 0]
    assert img.hole_count == 640 * 480 - 1


def test_out_of_bounds_points_are_counted():
    img = project_frame(_frame([[10.0, 0.0, 1.0], [0.0, 0.0, 1.0]]), CameraModel())
    assert img.out_of_bounds == 1
    assert img.point_pixel[0].tolist() == [NO_POINT, NO_POINT]
    assert (~img.hole).sum() == 1


def test_stored_depth_is_minimum_per_pixel():
    rng = np.random.default_rng(2)
    xyz = np.column_stack([rng.uniform(-0.2, 0.2, 5000), rng.uniform(-0.2, 0.2, 5000), rng.uniform(0.5, 3.0, 5000)])
    cam = CameraModel(focal=50.0, width=64, height=48, cx=31.5, cy=23.5)
    img = project_frame(_frame(xyz), cam)

    pixels = project_points(xyz, cam)
    inside = pixels[:, 0] >= 0
    linear = pixels[inside, 0] * cam.width + pixels[inside, 1]
    minimum = np.full(cam.width * cam.height, np.inf)
    np.minimum.at(minimum, linear, xyz[inside, 2])

    owned = img.observed.ravel()
    assert np.array_equal(img.depth.ravel()[owned], minimum[owned])
    assert np.isinf(minimum[~owned]).all()


def test_empty_frame_is_all_holes():
    img = project_frame(_frame(np.empty((0, 3))), SMALL)
    assert img.hole.all()
    assert img.out_of_bounds == 0


def test_fill_without_holes_is_identity():
    rng = np.random.default_rng(3)
    img = _image(rng.integers(0, 256, (5, 6, 3)), np.zeros((5, 6), dtype=bool))
    filled, report = fill_holes_report(img)

    assert np.array_equal(filled.color, img.color)
    assert report.filled == 0
    assert report.iterations == 0


def test_single_hole_in_constant_neighbourhood():
    hole = np.zeros((3, 3), dtype=bool)
    hole[1, 1] = True
    color = np.full((3, 3, 3), 100, dtype=np.uint8)
    color[1, 1] = 0
    filled = fill_holes(_image(color, hole), kernel=3)

    assert filled.color[1, 1].tolist() == [100, 100, 100]
    assert not filled.hole.any()
    assert filled.point_index[1, 1] == NO_POINT


def test_hole_between_black_and_white_gets_the_mean():
    color = np.array([[[0, 0, 0], [7, 7, 7], [200, 200, 200]]], dtype=np.uint8)
    hole = np.array([[False, True, False]])
    filled = fill_holes(_image(color, hole), kernel=3)
    assert filled.color[0, 1].tolist() == [100, 100, 100]


def test_random_holes_are_all_filled_and_nothing_else_changes():
    rng = np.random.default_rng(4)
    color = rng.integers(0, 256, (64, 64, 3))
    hole = rng.random((64, 64)) < 0.1
    img = _image(color, hole)
    filled, report = fill_holes_report(img, kernel=5, max_iters=100)

    assert not report.fillable_remaining
    assert report.remaining_holes == 0
    assert report.filled == int(hole.sum())
    assert np.array_equal(filled.color[~hole], img.color[~hole])
    assert np.array_equal(filled.point_index, img.point_index)

    again, second = fill_holes_report(filled, kernel=5, max_iters=100)
    assert second.filled == 0
    assert np.array_equal(again.color, filled.color)


def test_fill_respects_iteration_limit():
    hole = np.ones((1, 9), dtype=bool)
    hole[0, 0] = False
    color = np.zeros((1, 9, 3), dtype=np.uint8)
    color[0, 0] = 90
    filled, report = fill_holes_report(_image(color, hole), kernel=3, max_iters=2)

    assert report.iterations == 2
    assert report.filled == 2
    assert report.fillable_remaining
    assert filled.hole[0, 3:].all()


def test_fill_rejects_even_kernel():
    img = _image(np.zeros((3, 3, 3)), np.zeros((3, 3), dtype=bool))
    with pytest.raises(FieldValidationError):
        fill_holes(img, kernel=4)


def test_backproject_single_point():
    frame = _frame([[0.0, 0.0, 1.0]])
    img = project_frame(frame, SMALL)
    labels = _labels(SMALL.shape, at={(3, 4): SemanticLabel.WALL})

    assert img.point_index[3, 4] == 0
    assert backproject_labels(img, labels, frame).tolist() == [int(SemanticLabel.WALL)]


def test_occluded_point_takes_the_pixel_label():
    frame = _frame([[0.0, 0.0, 1.0], [0.0, 0.0, 2.0]])
    img = project_frame(frame, SMALL)
    labels = _labels(SMALL.shape, at={(3, 4): SemanticLabel.FURNITURE})

    result = backproject_labels(img, labels, frame)
    assert result.tolist() == [int(SemanticLabel.FURNITURE)] * 2


def test_out_of_bounds_point_is_unknown():
    frame = _frame([[5.0, 0.0, 1.0]])
    img = project_frame(frame, SMALL)
    labels = _labels(SMALL.shape, default=SemanticLabel.WALL)
    assert backproject_labels(img, labels, frame).tolist() == [int(SemanticLabel.UNKNOWN)]


def test_backproject_dimension_mismatch():
    frame = _frame([[0.0, 0.0, 1.0]])
    img = project_frame(frame, SMALL)
    with pytest.raises(FieldValidationError):
        backproject_labels(img, _labels((2, 2)), frame)


def test_one_point_per_pixel_is_a_bijection():
    rows, cols = np.meshgrid(np.arange(SMALL.height), np.arange(SMALL.width), indexing="ij")
    xyz = np.column_stack([(cols.ravel() - SMALL.cx) / 10.0, (rows.ravel() - SMALL.cy) / 10.0,
                           np.ones(rows.size)])
    order = np.random.default_rng(5).permutation(rows.size)
    frame = _frame(xyz[order])
    img = project_frame(frame, SMALL)

    assert img.hole_count == 0
    assert sorted(img.point_index.ravel().tolist()) == list(range(rows.size))
    ids = np.random.default_rng(6).integers(0, 8, SMALL.shape)
    result = backproject_labels(img, LabelField.one_hot(ids), frame)
    assert np.array_equal(result, ids[img.point_pixel[:, 0], img.point_pixel[:, 1]])
    assert np.array_equal(img.point_index[img.point_pixel[:, 0], img.point_pixel[:, 1]], np.arange(rows.size))


def test_debug_dump_writes_correspondence(tmp_path):
    frame = _frame([[0.0, 0.0, 1.0], [0.1, 0.0, 1.0]])
    img = project_frame(frame, SMALL)
    paths = dump_reconstructed_image(img, tmp_path, "frame_000000")

    for path in paths.values():
        assert os.path.exists(path)
    table = load_correspondence(paths["index"], SMALL.height, SMALL.width)
    assert np.array_equal(table, img.point_index)
