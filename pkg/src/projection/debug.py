"""重建图像调试输出：彩色 PNG、16 位深度 PGM（毫米）、像素->点 对应表（u32 行优先）。"""
from pathlib import Path
from typing import Dict, Union

import numpy as np
from PIL import Image

from .image import ReconstructedImage

NO_POINT_U32 = np.uint32(0xFFFFFFFF)


def save_correspondence(img: ReconstructedImage, path: Union[str, Path]) -> str:
    table = np.where(img.point_index >= 0, img.point_index, NO_POINT_U32).astype("<u4")
    table.tofile(str(path))
    return str(path)


def load_correspondence(path: Union[str, Path], height: int, width: int) -> np.ndarray:
    table = np.fromfile(str(path), dtype="<u4")
    if table.size != height * width:
        raise ValueError(f"correspondence table has {table.size} entries, expected {height * width}")
    table = table.reshape(height, width).astype(np.int64)
    table[table == int(NO_POINT_U32)] = -1
    return table


def dump_reconstructed_image(img: ReconstructedImage, directory: Union[str, Path], stem: str) -> Dict[str, str]:
    out_dir = Path(directory)
    out_dir.mkdir(parents=True, exist_ok=True)

    color_path = out_dir / f"{stem}_color.png"
    Image.fromarray(np.ascontiguousarray(img.color)).save(color_path)

    depth_mm = np.nan_to_num(img.depth * 1000.0, nan=0.0)
    depth_mm = np.clip(np.rint(depth_mm), 0, 65535).astype(np.int32)
    depth_path = out_dir / f"{stem}_depth.pgm"
    Image.fromarray(depth_mm).save(depth_path)

    index_path = out_dir / f"{stem}_index.u32"
    save_correspondence(img, index_path)
    return {"color": str(color_path), "depth": str(depth_path), "index": str(index_path)}
