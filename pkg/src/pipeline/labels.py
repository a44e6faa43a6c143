"""
标签来源（替代语义分割网络）

- external：外部标签图目录，每帧 <stem>.png / <stem>.pgm，可选 ADE20k 重映射
- oracle：按合成真值给每个被占据像素打上其点的标签，其余像素为 Unknown
- noisy_oracle：同上，但真值先经过 corrupt_labels
"""
from pathlib import Path
from typing import Optional, Union

import numpy as np

from projection.image import NO_POINT, ReconstructedImage
from schema.errors import FieldValidationError, FrameError
from schema.labels import SemanticLabel
from segmentation.label_field import LabelField
from segmentation.label_map import load_ade20k_remap, load_label_map
from synthetic.noise import corrupt_labels

from .sources import FrameTask

LABEL_MAP_SUFFIXES = (".png", ".pgm")


class LabelSource:
    """给重建图像提供逐像素硬标签（one-hot LabelField）"""

    def labels_for(self, task: FrameTask, img: ReconstructedImage, truth: Optional[np.ndarray]) -> LabelField:
        raise NotImplementedError


class ExternalLabels(LabelSource):

    def __init__(self, directory: Union[str, Path], remap_path: Optional[Union[str, Path]] = None):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise FileNotFoundError(f"标签图目录不存在: {self.directory}")
        self.remap = load_ade20k_remap(remap_path) if remap_path else None

    def path_for(self, stem: str) -> Path:
        for suffix in LABEL_MAP_SUFFIXES:
            candidate = self.directory / f"{stem}{suffix}"
            if candidate.exists():
                return candidate
        raise FileNotFoundError(f"帧 {stem} 没有标签图: {self.directory}/{stem}.png|.pgm")

    def labels_for(self, task: FrameTask, img: ReconstructedImage, truth: Optional[np.ndarray]) -> LabelField:
        return load_label_map(self.path_for(task.stem), dims=img.shape, remap=self.remap)


def oracle_label_image(img: ReconstructedImage, truth: np.ndarray) -> np.ndarray:
    """被占据像素取其点的标签，空洞（含已填色的空洞）为 Unknown。"""
    labels = np.full(img.shape, int(SemanticLabel.UNKNOWN), dtype=np.int64)
    owned = img.point_index != NO_POINT
    labels[owned] = truth[img.point_index[owned]]
    return labels


class OracleLabels(LabelSource):

    def labels_for(self, task: FrameTask, img: ReconstructedImage, truth: Optional[np.ndarray]) -> LabelField:
        if truth is None:
            raise FrameError(task.timestamp, f"{task.stem}: oracle labels need a ground-truth sidecar")
        return LabelField.one_hot(oracle_label_image(img, truth))


class NoisyOracleLabels(OracleLabels):
    """第 i 帧使用种子 (seed, i) 加噪"""

    def __init__(self, noise: float, seed: int = 0):
        if not 0.0 <= noise < 0.5:
            raise FieldValidationError("labels.noise", f"must lie in [0, 0.5), got {noise}")
        self.noise = noise
        self.seed = seed

    def labels_for(self, task: FrameTask, img: ReconstructedImage, truth: Optional[np.ndarray]) -> LabelField:
        if truth is None:
            raise FrameError(task.timestamp, f"{task.stem}: oracle labels need a ground-truth sidecar")
        noisy = corrupt_labels(truth, self.noise, seed=(self.seed, task.index))
        return LabelField.one_hot(oracle_label_image(img, noisy))


def make_label_source(config, default_noise: float = 0.0) -> LabelSource:
    """按 labels.* 配置构造标签来源"""
    labels = config.labels
    if labels.source == "external":
        return ExternalLabels(labels.directory, labels.remap_path)
    if labels.source == "noisy_oracle":
        noise = default_noise if labels.noise is None else labels.noise
        return NoisyOracleLabels(noise, labels.seed)
    return OracleLabels()
