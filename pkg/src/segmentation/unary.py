"""硬标签 -> 一元项概率"""
import numpy as np

from schema.errors import FieldValidationError
from schema.labels import NUM_LABELS, SemanticLabel

from .label_field import LabelField


def unary_from_labels(hard: LabelField, confidence: float) -> LabelField:
    """
    有标签像素：本标签概率 c，其余 (1 - c) / 8；
    Unknown 像素：9 个标签均为 1/9。
    """
    if not 0.0 < float(confidence) < 1.0:
        raise FieldValidationError("crf.confidence", f"must lie in (0, 1), got {confidence}")
    if hard.num_labels != NUM_LABELS:
        raise FieldValidationError("labels", f"expected {NUM_LABELS} labels, got {hard.num_labels}")

    labels = hard.argmax()
    others = (1.0 - confidence) / (NUM_LABELS - 1)
    probs = np.full(labels.shape + (NUM_LABELS,), others, dtype=np.float64)
    np.put_along_axis(probs, labels[..., None], confidence, axis=2)
    probs[labels == int(SemanticLabel.UNKNOWN)] = 1.0 / NUM_LABELS
    return LabelField(probs)
