"""
分阶段计时

StageTimer 记录每帧各阶段耗时（秒），summarize 给出中位数 / p95。
"""
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterator, List

import numpy as np
import pandas as pd

# 流水线阶段，按执行顺序
STAGES = ("parse", "project", "fill_holes", "labels", "unary", "crf", "backproject", "materials", "to_world", "insert")


@dataclass
class FrameTiming:
    """单帧各阶段耗时"""
    timestamp: float
    stages: Dict[str, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return float(sum(self.stages.values()))

    @contextmanager
    def measure(self, stage: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.stages[stage] = self.stages.get(stage, 0.0) + time.perf_counter() - start


class StageTimer:
    """累积多帧计时"""

    def __init__(self):
        self.frames: List[FrameTiming] = []

    def frame(self, timestamp: float) -> FrameTiming:
        timing = FrameTiming(timestamp)
        self.frames.append(timing)
        return timing

    def add(self, timing: FrameTiming):
        self.frames.append(timing)

    def __len__(self) -> int:
        return len(self.frames)

    def table(self) -> pd.DataFrame:
        """每帧一行、每阶段一列（毫秒），缺失阶段为 0。"""
        rows = [{"timestamp": f.timestamp, **{s: f.stages.get(s, 0.0) * 1000.0 for s in STAGES}} for f in self.frames]
        table = pd.DataFrame(rows, columns=["timestamp", *STAGES])
        table["total"] = table[list(STAGES)].sum(axis=1)
        return table

    def summarize(self) -> pd.DataFrame:
        """每阶段 median / p95 / mean（毫秒）"""
        table = self.table()
        columns = [*STAGES, "total"]
        if table.empty:
            return pd.DataFrame(0.0, index=columns, columns=["median_ms", "p95_ms", "mean_ms"])
        values = table[columns].to_numpy()
        return pd.DataFrame({
            "median_ms": np.median(values, axis=0),
            "p95_ms": np.percentile(values, 95, axis=0),
            "mean_ms": values.mean(axis=0),
        }, index=columns)

    def format(self) -> str:
        summary = self.summarize()
        lines = [f"{'stage':<12} {'median ms':>10} {'p95 ms':>10}"]
        for stage, row in summary.iterrows():
            lines.append(f"{stage:<12} {row['median_ms']:>10.2f} {row['p95_ms']:>10.2f}")
        lines.append(f"frames: {len(self)}")
        return "\n".join(lines)
