"""Segmentation 模块 - 标签分布、外部标签图、一元项与全连接 CRF"""
from .color import rgb_to_lab
from .densecrf import CrfParams, DenseCRF, PairwiseKernel, densecrf_refine, kernel_block, mean_field
from .label_field import LabelField
from .label_map import (
    LABEL_PALETTE,
    labels_from_ids,
    load_ade20k_remap,
    load_label_map,
    load_probability_tensor,
    read_label_ids,
    save_label_map,
    save_probability_tensor,
)
from .unary import unary_from_labels

__all__ = [
    "LabelField",
    "rgb_to_lab",
    "unary_from_labels",
    "CrfParams",
    "DenseCRF",
    "PairwiseKernel",
    "kernel_block",
    "mean_field",
    "densecrf_refine",
    "LABEL_PALETTE",
    "load_ade20k_remap",
    "read_label_ids",
    "labels_from_ids",
    "load_label_map",
    "save_label_map",
    "save_probability_tensor",
    "load_probability_tensor",
]
