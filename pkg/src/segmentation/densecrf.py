"""
全连接 CRF 平均场推断

成对核：
    k(i, j) = w_app * exp(-|p_i - p_j|^2 / 2θ_pos^2 - |I_i - I_j|^2 / 2θ_lab^2)
            + w_smooth * exp(-|p_i - p_j|^2 / 2θ_smooth^2)
其中 I 为 LAB 颜色，兼容函数为 Potts。核在 i != j 上精确求和（不做格点近似），
大图可先按 2 或 4 倍下采样，推断后最近邻上采样回原尺寸。
每轮迭代对所有像素同时更新（Jacobi）。
"""
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, Optional

import numpy as np
from loguru import logger

from schema.errors import FieldValidationError

from .color import rgb_to_lab
from .label_field import LabelField

MAX_ITERATIONS = 100
ALLOWED_DOWNSAMPLE = (1, 2, 4)
DEFAULT_KERNEL_CACHE_BYTES = 64 * 1024 * 1024
_BLOCK_BYTES = 64 * 1024 * 1024


@dataclass(frozen=True)
class CrfParams:
    """CRF 参数（默认值可由配置覆盖）"""
    w_app: float = 4.0
    theta_pos: float = 40.0
    theta_lab: float = 10.0
    w_smooth: float = 2.0
    theta_smooth: float = 3.0
    iterations: int = 10
    confidence: float = 0.8

    def __post_init__(self):
        for name in ("w_app", "w_smooth"):
            if not getattr(self, name) >= 0:
                raise FieldValidationError(f"crf.{name}", f"must be >= 0, got {getattr(self, name)}")
        for name in ("theta_pos", "theta_lab", "theta_smooth"):
            if not getattr(self, name) > 0:
                raise FieldValidationError(f"crf.{name}", f"must be > 0, got {getattr(self, name)}")
        if isinstance(self.iterations, bool) or not 0 <= int(self.iterations) <= MAX_ITERATIONS:
            raise FieldValidationError("crf.iterations", f"must lie in 0..{MAX_ITERATIONS}, got {self.iterations}")
        if not 0.0 < self.confidence < 1.0:
            raise FieldValidationError("crf.confidence", f"must lie in (0, 1), got {self.confidence}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CrfParams":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__ if k in data})


def pixel_positions(height: int, width: int, scale: float = 1.0) -> np.ndarray:
    rows, cols = np.meshgrid(np.arange(height, dtype=np.float64), np.arange(width, dtype=np.float64), indexing="ij")
    return np.stack([rows.ravel(), cols.ravel()], axis=1) * scale


def _squared_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # 逐坐标累加，避免 (n, m, d) 的中间数组
    out = np.zeros((a.shape[0], b.shape[0]), dtype=np.float64)
    for c in range(a.shape[1]):
        diff = np.subtract.outer(a[:, c], b[:, c])
        np.multiply(diff, diff, out=diff)
        out += diff
    return out


def kernel_block(
    pos_i: np.ndarray, lab_i: np.ndarray, pos_j: np.ndarray, lab_j: np.ndarray, params: CrfParams
) -> np.ndarray:
    """成对核矩阵的一块 (len(i), len(j))，不处理对角线。"""
    d_pos = _squared_distances(pos_i, pos_j)
    block = np.zeros(d_pos.shape, dtype=np.float64)
    if params.w_app > 0:
        term = _squared_distances(lab_i, lab_j)
        term *= -1.0 / (2.0 * params.theta_lab ** 2)
        term -= d_pos / (2.0 * params.theta_pos ** 2)
        np.exp(term, out=term)
        block += params.w_app * term
    if params.w_smooth > 0:
        term = d_pos * (-1.0 / (2.0 * params.theta_smooth ** 2))
        np.exp(term, out=term)
        block += params.w_smooth * term
    return block


class PairwiseKernel:
    """计算 Σ_{j≠i} k(i, j) Q_j；内存允许时缓存整个核矩阵，否则分块重算。"""

    def __init__(self, positions: np.ndarray, lab: np.ndarray, params: CrfParams,
                 cache_bytes: int = DEFAULT_KERNEL_CACHE_BYTES):
        self.positions = positions
        self.lab = lab
        self.params = params
        n = positions.shape[0]
        self.size = n
        self._matrix: Optional[np.ndarray] = None
        if n * n * 8 <= cache_bytes:
            matrix = kernel_block(positions, lab, positions, lab, params)
            np.fill_diagonal(matrix, 0.0)
            self._matrix = matrix
        # 分块时每块约占 4 个 (rows, n) float64 临时数组
        self._block_rows = max(1, _BLOCK_BYTES // max(1, n * 4 * 8))

    def apply(self, q: np.ndarray) -> np.ndarray:
        if self._matrix is not None:
            return self._matrix @ q
        out = np.empty_like(q)
        for start in range(0, self.size, self._block_rows):
            stop = min(self.size, start + self._block_rows)
            block = kernel_block(self.positions[start:stop], self.lab[start:stop], self.positions, self.lab, self.params)
            block[np.arange(stop - start), np.arange(start, stop)] = 0.0
            out[start:stop] = block @ q
        return out


def _normalize(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    q = np.exp(shifted)
    return q / q.sum(axis=1, keepdims=True)


def mean_field(
    unary: np.ndarray,
    kernel: PairwiseKernel,
    iterations: int,
    callback: Optional[Callable[[int, np.ndarray], None]] = None,
) -> np.ndarray:
    """
    unary: (N, L) 一元项概率；返回 (N, L) 的近似边缘分布。
    Potts 兼容下 Σ_j k_ij Σ_{l'≠l} Q_j(l') = Σ_j k_ij - (KQ)_i(l)，前一项与标签无关，归一化时约去。
    """
    with np.errstate(divide="ignore"):
        log_unary = np.log(unary)
    q = unary.copy()
    for iteration in range(iterations):
        message = kernel.apply(q)
        q = _normalize(log_unary + message)
        if callback is not None:
            callback(iteration, q)
    return q


def _pool(array: np.ndarray, factor: int) -> np.ndarray:
    height, width = array.shape[:2]
    pad_h = (-height) % factor
    pad_w = (-width) % factor
    pad = ((0, pad_h), (0, pad_w)) + ((0, 0),) * (array.ndim - 2)
    padded = np.pad(array, pad, mode="edge")
    h, w = padded.shape[0] // factor, padded.shape[1] // factor
    return padded.reshape(h, factor, w, factor, *array.shape[2:]).mean(axis=(1, 3))


def _upsample(array: np.ndarray, factor: int, height: int, width: int) -> np.ndarray:
    return np.repeat(np.repeat(array, factor, axis=0), factor, axis=1)[:height, :width]


class DenseCRF:
    """全连接 CRF 精炼器"""

    def __init__(self, params: Optional[CrfParams] = None, downsample: int = 1,
                 kernel_cache_bytes: int = DEFAULT_KERNEL_CACHE_BYTES):
        if downsample not in ALLOWED_DOWNSAMPLE:
            raise FieldValidationError("crf.downsample", f"must be one of {ALLOWED_DOWNSAMPLE}, got {downsample}")
        self.params = params or CrfParams()
        self.downsample = downsample
        self.kernel_cache_bytes = kernel_cache_bytes

    def __call__(self, unary: LabelField, colors: np.ndarray,
                 callback: Optional[Callable[[int, np.ndarray], None]] = None) -> LabelField:
        return self.refine(unary, colors, callback)

    def refine(self, unary: LabelField, colors: np.ndarray,
               callback: Optional[Callable[[int, np.ndarray], None]] = None) -> LabelField:
        colors = np.asarray(colors)
        if colors.shape[:2] != unary.shape or colors.ndim != 3 or colors.shape[2] != 3:
            raise FieldValidationError("crf.colors", f"image {colors.shape} does not match label field {unary.shape}")
        if self.params.iterations == 0:
            return unary

        height, width = unary.shape
        lab = rgb_to_lab(colors)
        probs = unary.probs
        factor = self.downsample
        if factor > 1:
            probs = _pool(probs, factor)
            lab = _pool(lab, factor)
        small_h, small_w = probs.shape[:2]
        n_labels = probs.shape[2]

        kernel = PairwiseKernel(
            pixel_positions(small_h, small_w, scale=float(factor)),
            lab.reshape(-1, 3),
            self.params,
            self.kernel_cache_bytes,
        )
        logger.debug("dense CRF: {}x{} pixels (downsample {}), {} labels, {} iterations",
                     small_h, small_w, factor, n_labels, self.params.iterations)
        q = mean_field(probs.reshape(-1, n_labels), kernel, int(self.params.iterations), callback)
        q = q.reshape(small_h, small_w, n_labels)
        if factor > 1:
            q = _upsample(q, factor, height, width)
        return LabelField(q)


def densecrf_refine(unary: LabelField, colors: np.ndarray, params: CrfParams, downsample: int = 1,
                    kernel_cache_bytes: int = DEFAULT_KERNEL_CACHE_BYTES) -> LabelField:
    """单张图像的一次性精炼"""
    return DenseCRF(params, downsample, kernel_cache_bytes).refine(unary, colors)
