"""标签噪声"""
import numpy as np

from schema.errors import FieldValidationError
from schema.labels import OBJECT_LABELS

from .render import SeedLike

_NUM_OBJECT_LABELS = len(OBJECT_LABELS)


def corrupt_labels(labels: np.ndarray, p_noise: float, seed: SeedLike = 0) -> np.ndarray:
    """
    每个标签以概率 p_noise 独立替换为另一个物体标签（在其余 7 个中均匀抽取）。
    Unknown 被替换时在 8 个物体标签中均匀抽取。
    """
    if not 0.0 <= p_noise <= 1.0:
        raise FieldValidationError("labels.noise", f"must lie in [0, 1], got {p_noise}")
    labels = np.asarray(labels, dtype=np.uint8).reshape(-1)
    rng = np.random.default_rng(seed)
    n = labels.shape[0]
    flip = rng.random(n) < p_noise
    offsets = rng.integers(1, _NUM_OBJECT_LABELS, size=n)
    anywhere = rng.integers(0, _NUM_OBJECT_LABELS, size=n)

    is_object = labels < _NUM_OBJECT_LABELS
    replacement = np.where(is_object, (labels.astype(np.int64) + offsets) % _NUM_OBJECT_LABELS, anywhere)
    return np.where(flip, replacement, labels).astype(np.uint8)
