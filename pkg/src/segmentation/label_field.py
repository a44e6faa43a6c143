"""
逐像素标签分布

LabelField 保存 (H, W, 9) 的概率张量，每个像素在 9 个标签上的分布和为 1。
"""
from dataclasses import dataclass

import numpy as np

from schema.errors import FieldValidationError
from schema.labels import NUM_LABELS, SemanticLabel

SUM_TOLERANCE = 1e-6


def _argmax_labels(probs: np.ndarray) -> np.ndarray:
    """
    沿最后一轴取最大概率标签。
    并列时取最小编码；若 Unknown 也在并列最大值之中（如均匀分布）则取 Unknown。
    """
    labels = np.argmax(probs, axis=-1)
    if probs.shape[-1] == NUM_LABELS:
        unknown = int(SemanticLabel.UNKNOWN)
        peak = probs.max(axis=-1)
        tied = (probs == peak[..., None]).sum(axis=-1) > 1
        labels = np.where(tied & (probs[..., unknown] == peak), unknown, labels)
    return labels.astype(np.int64)


@dataclass(frozen=True)
class LabelField:
    """逐像素概率分布"""
    probs: np.ndarray       # (H, W, L) float64

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 3:
            raise FieldValidationError("label_field", f"expected (H, W, L) array, got shape {probs.shape}")
        object.__setattr__(self, "probs", probs)

    @property
    def height(self) -> int:
        return int(self.probs.shape[0])

    @property
    def width(self) -> int:
        return int(self.probs.shape[1])

    @property
    def num_labels(self) -> int:
        return int(self.probs.shape[2])

    @property
    def shape(self):
        return (self.height, self.width)

    def validate(self, tolerance: float = SUM_TOLERANCE) -> None:
        if (self.probs < 0).any():
            raise FieldValidationError("label_field", "negative probability")
        sums = self.probs.sum(axis=2)
        worst = float(np.abs(sums - 1.0).max()) if sums.size else 0.0
        if worst > tolerance:
            raise FieldValidationError("label_field", f"pixel probabilities do not sum to 1 (off by {worst:.3g})")

    def argmax(self) -> np.ndarray:
        """逐像素取最大概率标签 (H, W) int64。"""
        return _argmax_labels(self.probs)

    def argmax_at(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """只对给定像素取最大概率标签，规则与 argmax 相同。"""
        return _argmax_labels(self.probs[rows, cols])

    @classmethod
    def one_hot(cls, labels: np.ndarray, num_labels: int = NUM_LABELS) -> "LabelField":
        labels = np.asarray(labels, dtype=np.int64)
        if labels.ndim != 2:
            raise FieldValidationError("labels", f"expected (H, W) label ids, got shape {labels.shape}")
        if labels.size and (labels.min() < 0 or labels.max() >= num_labels):
            raise FieldValidationError("labels", f"label ids must lie in 0..{num_labels - 1}")
        probs = np.zeros(labels.shape + (num_labels,), dtype=np.float64)
        np.put_along_axis(probs, labels[..., None], 1.0, axis=2)
        return cls(probs)

    @classmethod
    def uniform(cls, height: int, width: int, num_labels: int = NUM_LABELS) -> "LabelField":
        return cls(np.full((height, width, num_labels), 1.0 / num_labels, dtype=np.float64))
