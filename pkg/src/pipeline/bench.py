"""
性能测试

单线程逐帧运行完整流水线，统计每帧各阶段耗时的中位数与 p95。
不含 CRF 的插入路径（投影 + 回传 + 插入）单独汇总。
"""
from dataclasses import dataclass
from typing import Dict, Optional

import pandas as pd
from loguru import logger

from utils.timing import StageTimer
from voxelmap import OccupancyGrid, snapshot_bytes

from .runner import MapBuilder
from .sources import FrameSource

INSERT_PATH_STAGES = ("project", "backproject", "materials", "to_world", "insert")
# 中位数至少需要的帧数
MIN_BENCH_FRAMES = 50


@dataclass
class BenchReport:
    timer: StageTimer
    grid: OccupancyGrid
    crf_enabled: bool

    @property
    def samples(self) -> int:
        return len(self.timer)

    def summary(self) -> pd.DataFrame:
        return self.timer.summarize()

    def insert_path_ms(self) -> pd.Series:
        """每帧 投影+回传+查表+世界系+插入 的耗时（毫秒）"""
        table = self.timer.table()
        return table[list(INSERT_PATH_STAGES)].sum(axis=1)

    def to_dict(self) -> Dict[str, object]:
        summary = self.summary()
        insert_path = self.insert_path_ms()
        return {
            "samples": self.samples,
            "crf_enabled": self.crf_enabled,
            "stages": {stage: {"median_ms": float(row["median_ms"]), "p95_ms": float(row["p95_ms"])}
                       for stage, row in summary.iterrows()},
            "insert_path": {
                "median_ms": float(insert_path.median()) if len(insert_path) else 0.0,
                "p95_ms": float(insert_path.quantile(0.95)) if len(insert_path) else 0.0,
            },
        }

    def format(self) -> str:
        report = self.to_dict()
        lines = [self.timer.format()]
        lines.append(
            f"insert path (project+backproject+insert): median {report['insert_path']['median_ms']:.2f} ms, "
            f"p95 {report['insert_path']['p95_ms']:.2f} ms"
        )
        lines.append(f"crf: {'on' if self.crf_enabled else 'off'}")
        return "\n".join(lines)


def run_bench(builder: MapBuilder, source: FrameSource, frames: Optional[int] = None) -> BenchReport:
    """frames 给出时只取前 frames 帧"""
    config = builder.config
    single = config.runtime.single_threaded
    config.runtime.single_threaded = True
    try:
        if frames is not None:
            source = _Head(source, frames)
        result = builder.build(source)
    finally:
        config.runtime.single_threaded = single
    report = BenchReport(timer=result.timer, grid=result.grid, crf_enabled=config.crf.enabled)
    if report.samples < MIN_BENCH_FRAMES:
        logger.warning("bench: only {} frames timed, medians over fewer than {} frames are noisy",
                       report.samples, MIN_BENCH_FRAMES)
    return report


class _Head(FrameSource):

    def __init__(self, source: FrameSource, count: int):
        self._source = source
        self._count = count
        self.sensor = source.sensor

    def tasks(self):
        return self._source.tasks()[:self._count]


def bench_fingerprint(report: BenchReport) -> bytes:
    """与计时无关的输出，用于比较两次运行"""
    return snapshot_bytes(report.grid)
