"""Pipeline 模块 - 帧来源、标签来源与建图流水线"""
from .bench import BenchReport, bench_fingerprint, run_bench
from .labels import ExternalLabels, LabelSource, NoisyOracleLabels, OracleLabels, make_label_source, oracle_label_image
from .processor import FrameProcessor, PreparedFrame
from .runner import BuildResult, MapBuilder
from .sources import DirectorySource, FrameSource, FrameTask, MemorySource, open_source

__all__ = [
    "FrameTask",
    "FrameSource",
    "DirectorySource",
    "MemorySource",
    "open_source",
    "LabelSource",
    "ExternalLabels",
    "OracleLabels",
    "NoisyOracleLabels",
    "make_label_source",
    "oracle_label_image",
    "FrameProcessor",
    "PreparedFrame",
    "MapBuilder",
    "BuildResult",
    "BenchReport",
    "run_bench",
    "bench_fingerprint",
]
