"""
Acoustic Map - 统一入口

提供简洁的 API 使用所有功能：合成数据、建图、导出、统计、性能测试与单图 CRF 精炼。
"""
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from PIL import Image

from config import PipelineConfig, load_config
from materials import MatchingTable, MaterialDatabase, load_matching_table
from pipeline import BenchReport, BuildResult, MapBuilder, open_source, run_bench
from pointcloud import Pose
from schema.errors import ParseError
from segmentation import (
    LabelField,
    densecrf_refine,
    load_ade20k_remap,
    load_label_map,
    save_label_map,
    unary_from_labels,
)
from storage import StorageManager
from synthetic import (
    SceneSpec,
    SensorSpec,
    SyntheticDataset,
    Waypoint,
    generate_trajectory,
    loop_waypoints,
    write_dataset,
)
from voxelmap import ExportMode, MapStats, OccupancyGrid, export_map, load_snapshot, map_stats, save_snapshot

PathLike = Union[str, Path]


class AcousticMapper:
    """Acoustic Map 统一入口"""

    def __init__(self, config: Optional[PipelineConfig] = None, run_name: str = "map",
                 output_dir: Optional[str] = None):
        self.config = (config or load_config()).validate()
        self.run_name = run_name
        self.storage = StorageManager(output_dir or self.config.runtime.output_dir)
        self.database = MaterialDatabase.load(self.config.materials.database_path())
        self.matching: MatchingTable = load_matching_table(self.config.materials.matching_table_path(), self.database)

    def builder(self) -> MapBuilder:
        debug_dir = Path(self.storage.debug_dir(self.run_name)) if self.config.runtime.debug_dump else None
        return MapBuilder(self.config, self.database, self.matching, debug_dir=debug_dir)

    # ==================== 合成数据 ====================

    def simulate(
        self,
        out_dir: PathLike,
        scene: Optional[SceneSpec] = None,
        sensor: Optional[SensorSpec] = None,
        waypoints: Optional[Sequence[Waypoint]] = None,
        frames_per_segment: int = 10,
        seed: int = 0,
    ) -> SyntheticDataset:
        """渲染一条路径上的帧并写出数据集（缺省为办公室场景绕一圈）"""
        scene = scene or SceneSpec.office()
        sensor = sensor or SensorSpec.kinect()
        waypoints = list(waypoints) if waypoints is not None else loop_waypoints(scene)
        poses: List[Tuple[float, Pose]] = generate_trajectory(scene, waypoints, frames_per_segment, sensor.height)
        return write_dataset(out_dir, scene, sensor, poses, seed=seed)

    # ==================== 建图 ====================

    def build_map(self, source: PathLike, trajectory: Optional[PathLike] = None) -> BuildResult:
        """融合全部帧，写出快照、两种 PLY、吸声表、统计与耗时"""
        frames = open_source(source, trajectory)
        result = self.builder().build(frames)
        self.save_outputs(result.grid)
        self.storage.save_timing(self.run_name, result.timer.table())
        self.storage.save_config(self.run_name, self.config.to_dict())
        return result

    def save_outputs(self, grid: OccupancyGrid) -> dict:
        paths = {"snapshot": str(save_snapshot(grid, self.storage.snapshot_path(self.run_name)))}
        for mode in ExportMode:
            paths[mode.value] = export_map(grid, mode, self.storage.export_path(self.run_name, mode.value), self.database)
        self.storage.save_stats(self.run_name, map_stats(grid, self.database).to_dict())
        return paths

    # ==================== 导出与统计 ====================

    def load_map(self, snapshot: Optional[PathLike] = None) -> OccupancyGrid:
        return load_snapshot(snapshot or self.storage.snapshot_path(self.run_name))

    def export(self, mode: str, out_path: Optional[PathLike] = None, snapshot: Optional[PathLike] = None) -> str:
        grid = self.load_map(snapshot)
        target = out_path or self.storage.export_path(self.run_name, ExportMode(mode).value)
        return export_map(grid, mode, target, self.database)

    def stats(self, snapshot: Optional[PathLike] = None) -> MapStats:
        return map_stats(self.load_map(snapshot), self.database)

    def runs(self) -> List[Dict[str, Any]]:
        """输出目录下已有快照的运行，附带统计与关键配置"""
        rows = []
        for name in self.storage.list_runs():
            stats = self.storage.load_stats(name) or {}
            config = self.storage.load_config(name) or {}
            rows.append({
                "run": name,
                "cells": stats.get("cells"),
                "occupied": stats.get("occupied"),
                "resolution": config.get("grid", {}).get("resolution"),
                "crf": config.get("crf", {}).get("enabled"),
            })
        return rows

    # ==================== 性能 ====================

    def bench(self, source: PathLike, frames: Optional[int] = None, trajectory: Optional[PathLike] = None) -> BenchReport:
        report = run_bench(self.builder(), open_source(source, trajectory), frames)
        self.storage.save_bench(self.run_name, report.to_dict())
        self.storage.save_timing(self.run_name, report.timer.table())
        return report

    # ==================== 单图 CRF ====================

    def crf_refine(self, image: PathLike, labels: PathLike, out_path: PathLike,
                   remap: Optional[PathLike] = None) -> LabelField:
        """对一张彩色图 + 硬标签图做 CRF 精炼，写出精炼后的标签图"""
        image_path = Path(image)
        if not image_path.exists():
            raise FileNotFoundError(f"图像不存在: {image_path}")
        try:
            with Image.open(image_path) as img:
                colors = np.array(img.convert("RGB"), dtype=np.uint8)
        except (OSError, SyntaxError) as exc:
            raise ParseError(f"cannot read image: {exc}", path=str(image_path)) from None

        table = load_ade20k_remap(remap) if remap else None
        hard = load_label_map(labels, dims=colors.shape[:2], remap=table)
        params = self.config.crf.params()
        refined = densecrf_refine(unary_from_labels(hard, params.confidence), colors, params,
                                  self.config.crf.downsample, self.config.crf.kernel_cache_mb * 1024 * 1024)
        save_label_map(refined.argmax(), out_path)
        changed = int((refined.argmax() != hard.argmax()).sum())
        logger.info(f"crf-refine: {changed} of {hard.height * hard.width} pixels changed label")
        return refined
