"""
单帧处理

prepare()：解析 -> 投影 -> 填洞 -> 标签 -> 一元项 -> (CRF) -> 回传 -> 查材料 -> 世界系
只读共享对象（相机、材料表、CRF），可在多个线程中并发调用；
insert() 写地图，只能由单个线程调用。
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from loguru import logger

from materials import MatchingTable
from pointcloud import to_world
from projection import backproject_labels, dump_reconstructed_image, fill_holes_report, project_frame
from segmentation import DenseCRF, LabelField, save_label_map, save_probability_tensor, unary_from_labels
from utils.timing import FrameTiming
from voxelmap import InsertStats, OccupancyGrid

from .labels import LabelSource
from .sources import FrameTask


@dataclass
class PreparedFrame:
    """等待插入地图的一帧"""
    task: FrameTask
    xyz: np.ndarray             # 世界系 (N, 3)
    rgb: np.ndarray             # (N, 3) uint8
    materials: np.ndarray       # (N,) 材料 id
    origin: np.ndarray          # 传感器位置
    timing: FrameTiming
    holes_filled: int = 0
    out_of_bounds: int = 0

    @property
    def timestamp(self) -> float:
        return self.task.timestamp


class FrameProcessor:

    def __init__(self, config, labels: LabelSource, matching: MatchingTable,
                 debug_dir: Optional[Path] = None):
        self.camera = config.camera.model()
        self.hole_kernel = config.holes.kernel
        self.hole_iters = config.holes.max_iters
        crf_params = config.crf.params()
        self.confidence = crf_params.confidence
        self.crf: Optional[DenseCRF] = None
        if config.crf.enabled:
            self.crf = DenseCRF(crf_params, config.crf.downsample, config.crf.kernel_cache_mb * 1024 * 1024)
        self.labels = labels
        self.material_of_label = matching.as_array()
        self.debug_dir = debug_dir

    def refine(self, unary: LabelField, colors: np.ndarray) -> LabelField:
        return unary if self.crf is None else self.crf(unary, colors)

    def prepare(self, task: FrameTask) -> PreparedFrame:
        timing = FrameTiming(task.timestamp)
        with timing.measure("parse"):
            frame, truth = task.load()
        timing.timestamp = frame.timestamp

        with timing.measure("project"):
            img = project_frame(frame, self.camera)
        with timing.measure("fill_holes"):
            filled, report = fill_holes_report(img, self.hole_kernel, self.hole_iters)
        with timing.measure("labels"):
            hard = self.labels.labels_for(task, img, truth)
        with timing.measure("unary"):
            unary = unary_from_labels(hard, self.confidence)
        with timing.measure("crf"):
            refined = self.refine(unary, filled.color)
        with timing.measure("backproject"):
            point_labels = backproject_labels(img, refined, frame)
        with timing.measure("materials"):
            materials = self.material_of_label[point_labels]
        with timing.measure("to_world"):
            world = to_world(frame)

        if img.out_of_bounds:
            logger.warning(f"{task.stem}: {img.out_of_bounds} points projected outside the image")
        if self.debug_dir is not None:
            self._dump(task.stem, filled, hard, refined)

        return PreparedFrame(
            task=task,
            xyz=world.xyz,
            rgb=world.rgb,
            materials=materials,
            origin=frame.pose.origin,
            timing=timing,
            holes_filled=report.filled,
            out_of_bounds=img.out_of_bounds,
        )

    def insert(self, grid: OccupancyGrid, prepared: PreparedFrame) -> InsertStats:
        with prepared.timing.measure("insert"):
            stats = grid.insert_labeled_frame(prepared.xyz, prepared.rgb, prepared.materials, prepared.origin)
        logger.debug(
            "{} t={:.6f}: {} points, {} hit / {} miss cells, {:.1f} ms",
            prepared.task.stem, prepared.timestamp, stats.points, stats.hit_cells, stats.miss_cells,
            prepared.timing.total * 1000.0,
        )
        return stats

    def _dump(self, stem: str, img, hard: LabelField, refined: LabelField):
        directory = self.debug_dir / stem
        directory.mkdir(parents=True, exist_ok=True)
        dump_reconstructed_image(img, directory, stem)
        save_label_map(hard.argmax(), directory / f"{stem}_labels.png")
        save_label_map(refined.argmax(), directory / f"{stem}_refined.png")
        save_probability_tensor(refined, directory / f"{stem}_refined.lblf")
