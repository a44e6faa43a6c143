"""
标签图读写

外部标签源（CNN 输出的替身）：8 位索引 PNG 或 ASCII PGM，像素值为标签编码 0-8；
也可以是 ADE20k 类别图，经 remap 文件映射到 0-8。
精炼结果另可写成 float32 概率张量文件（格式见 README 的文件格式一节）。
"""
import struct
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from PIL import Image

from schema.errors import FieldValidationError, ParseError
from schema.labels import NUM_LABELS, SemanticLabel

from .label_field import LabelField

ADE20K_MAX_ID = 255
TENSOR_MAGIC = b"LBLF"
TENSOR_VERSION = 1
_TENSOR_HEADER = struct.Struct("<4sHIII")

# 可视化调色板（按标签编码）
LABEL_PALETTE = np.array(
    [
        (120, 120, 120),  # Wall
        (80, 50, 50),     # Floor
        (120, 120, 80),   # Ceiling
        (230, 230, 230),  # Window
        (204, 5, 255),    # Furniture
        (8, 255, 51),     # Door
        (255, 6, 82),     # Electronics
        (204, 70, 3),     # Chair
        (0, 0, 0),        # Unknown
    ],
    dtype=np.uint8,
)


def load_ade20k_remap(path: Union[str, Path]) -> np.ndarray:
    """读取 'ade20k_id = label_id' 文件，返回长度 256 的查找表，未列出的类别为 Unknown。"""
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"remap 文件不存在: {file_path}")
    table = np.full(ADE20K_MAX_ID + 1, int(SemanticLabel.UNKNOWN), dtype=np.int64)
    seen = set()
    for line_no, raw in enumerate(file_path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split("=")]
        if len(parts) != 2:
            raise ParseError(f"expected 'ade20k_id = label_id', got {raw.strip()!r}", path=str(file_path), line=line_no)
        try:
            source, target = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer id in {raw.strip()!r}", path=str(file_path), line=line_no) from None
        if not 0 <= source <= ADE20K_MAX_ID:
            raise ParseError(f"ade20k id {source} out of range", path=str(file_path), line=line_no)
        if not 0 <= target < NUM_LABELS:
            raise ParseError(f"label id {target} out of range 0..{NUM_LABELS - 1}", path=str(file_path), line=line_no)
        if source in seen:
            raise ParseError(f"duplicate ade20k id {source}", path=str(file_path), line=line_no)
        seen.add(source)
        table[source] = target
    return table


def _read_pgm(file_path: Path) -> np.ndarray:
    # Pillow 会把 maxval != 255 的 PGM 样本缩放到 0-255，标签编码必须原样读取
    raw = file_path.read_bytes()
    tokens = []
    offset = 0
    while len(tokens) < 4:
        while offset < len(raw) and raw[offset:offset + 1].isspace():
            offset += 1
        if raw[offset:offset + 1] == b"#":
            offset = raw.find(b"\n", offset) + 1 or len(raw)
            continue
        end = offset
        while end < len(raw) and not raw[end:end + 1].isspace():
            end += 1
        if end == offset:
            raise ParseError("truncated PGM header", path=str(file_path))
        tokens.append(raw[offset:end].decode("ascii", errors="replace"))
        offset = end
    magic = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ParseError("malformed PGM header", path=str(file_path)) from None
    if magic == "P2":
        values = np.array([int(t) for t in raw[offset:].split()], dtype=np.int64)
    elif magic == "P5":
        dtype = ">u2" if maxval > 255 else "u1"
        values = np.frombuffer(raw, dtype=dtype, offset=offset + 1).astype(np.int64)
    else:
        raise ParseError(f"not a PGM file (magic {magic!r})", path=str(file_path))
    if values.size < width * height:
        raise ParseError(f"PGM body has {values.size} samples, expected {width * height}", path=str(file_path))
    return values[:width * height].reshape(height, width)


def read_label_ids(path: Union[str, Path]) -> np.ndarray:
    """读取 PNG/PGM 标签图的原始像素值 (H, W) int64。"""
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"标签图不存在: {file_path}")
    if file_path.suffix.lower() == ".pgm":
        return _read_pgm(file_path)
    try:
        with Image.open(file_path) as image:
            if image.mode not in ("P", "L", "I", "I;16"):
                raise ParseError(f"label map must be single-channel, got mode {image.mode}", path=str(file_path))
            ids = np.array(image, dtype=np.int64)
    except (OSError, SyntaxError) as exc:
        raise ParseError(f"cannot read label map: {exc}", path=str(file_path)) from None
    return ids


def labels_from_ids(ids: np.ndarray, remap: Optional[np.ndarray] = None) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.int64)
    if remap is not None:
        if ids.size and (ids.min() < 0 or ids.max() >= remap.shape[0]):
            raise FieldValidationError("label_map", f"class id outside remap table 0..{remap.shape[0] - 1}")
        ids = remap[ids]
    if ids.size and (ids.min() < 0 or ids.max() >= NUM_LABELS):
        bad = sorted(set(np.unique(ids[(ids < 0) | (ids >= NUM_LABELS)]).tolist()))
        raise FieldValidationError("label_map", f"unknown label id(s) {bad}; expected 0..{NUM_LABELS - 1}")
    return ids


def load_label_map(
    path: Union[str, Path],
    dims: Optional[Tuple[int, int]] = None,
    remap: Optional[np.ndarray] = None,
) -> LabelField:
    """
    读取硬标签图并转为 one-hot LabelField
    :param dims: 期望的 (height, width)，与重建图像一致
    :param remap: ADE20k -> 标签 的查找表
    """
    labels = labels_from_ids(read_label_ids(path), remap)
    if dims is not None and tuple(labels.shape) != tuple(dims):
        raise FieldValidationError("label_map", f"{path}: size {labels.shape} does not match image {tuple(dims)}")
    return LabelField.one_hot(labels)


def save_label_map(labels: np.ndarray, path: Union[str, Path]) -> str:
    """PNG 写成带调色板的索引图，PGM 写成 ASCII (P2)。"""
    labels = np.asarray(labels, dtype=np.int64)
    file_path = Path(path)
    if file_path.suffix.lower() == ".pgm":
        height, width = labels.shape
        with open(file_path, "w", encoding="ascii") as f:
            f.write(f"P2\n{width} {height}\n255\n")
            np.savetxt(f, labels, fmt="%d")
        return str(file_path)
    height, width = labels.shape
    image = Image.frombytes("P", (width, height), np.ascontiguousarray(labels, dtype=np.uint8).tobytes())
    image.putpalette(LABEL_PALETTE.flatten().tolist())
    image.save(file_path)
    return str(file_path)


def save_probability_tensor(field: LabelField, path: Union[str, Path]) -> str:
    file_path = Path(path)
    with open(file_path, "wb") as f:
        f.write(_TENSOR_HEADER.pack(TENSOR_MAGIC, TENSOR_VERSION, field.height, field.width, field.num_labels))
        f.write(np.ascontiguousarray(field.probs, dtype="<f4").tobytes())
    return str(file_path)


def load_probability_tensor(path: Union[str, Path]) -> LabelField:
    file_path = Path(path)
    raw = file_path.read_bytes()
    if len(raw) < _TENSOR_HEADER.size:
        raise ParseError("truncated tensor header", path=str(file_path))
    magic, version, height, width, labels = _TENSOR_HEADER.unpack_from(raw)
    if magic != TENSOR_MAGIC or version != TENSOR_VERSION:
        raise ParseError(f"not a label tensor (magic {magic!r}, version {version})", path=str(file_path))
    count = height * width * labels
    body = np.frombuffer(raw, dtype="<f4", count=count, offset=_TENSOR_HEADER.size)
    return LabelField(body.astype(np.float64).reshape(height, width, labels))
