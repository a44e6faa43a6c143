"""
PCD v0.7 读写（ascii / binary）

颜色支持两种常见写法：PCL 习惯的打包字段 rgb（F 4 或 U 4，0x00RRGGBB），
或独立的 r/g/b 字段。VIEWPOINT 头字段携带位姿 "tx ty tz qw qx qy qz"。
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from schema.errors import ParseError

_TYPE_CODES = {("F", 4): "f4", ("F", 8): "f8", ("U", 1): "u1", ("U", 2): "u2", ("U", 4): "u4",
               ("I", 1): "i1", ("I", 2): "i2", ("I", 4): "i4"}
_REQUIRED_KEYS = ("FIELDS", "SIZE", "TYPE", "POINTS", "DATA")


@dataclass
class PcdData:
    xyz: np.ndarray
    rgb: Optional[np.ndarray]
    encoding: str
    viewpoint: Tuple[float, ...] = (0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0)
    comments: List[str] = field(default_factory=list)


def unpack_rgb(packed: np.ndarray) -> np.ndarray:
    """PCL 打包颜色 -> (N, 3) uint8。float32 字段按位重解释为 uint32。"""
    packed = np.ascontiguousarray(packed)
    bits = packed.view(np.uint32) if packed.dtype == np.float32 else packed.astype(np.uint32)
    return np.stack([(bits >> 16) & 0xFF, (bits >> 8) & 0xFF, bits & 0xFF], axis=1).astype(np.uint8)


def pack_rgb(rgb: np.ndarray) -> np.ndarray:
    rgb = np.asarray(rgb, dtype=np.uint32).reshape(-1, 3)
    return (rgb[:, 0] << 16) | (rgb[:, 1] << 8) | rgb[:, 2]


def read_pcd(path: Union[str, Path]) -> PcdData:
    file_path = Path(path)
    raw = file_path.read_bytes()
    where = str(file_path)

    header: Dict[str, List[str]] = {}
    comments: List[str] = []
    offset = 0
    line_no = 0
    while True:
        newline = raw.find(b"\n", offset)
        if newline < 0:
            raise ParseError("header not terminated by a DATA line", path=where, line=line_no + 1)
        line = raw[offset:newline].decode("ascii", errors="replace").strip()
        offset = newline + 1
        line_no += 1
        if not line:
            continue
        if line.startswith("#"):
            comments.append(line[1:].strip())
            continue
        tokens = line.split()
        header[tokens[0].upper()] = tokens[1:]
        if tokens[0].upper() == "DATA":
            break

    for key in _REQUIRED_KEYS:
        if key not in header:
            raise ParseError(f"missing header field {key}", path=where, line=line_no)
    encoding = header["DATA"][0].lower() if header["DATA"] else ""
    if encoding not in ("ascii", "binary"):
        raise ParseError(f"unsupported DATA encoding {encoding!r}", path=where, line=line_no)

    names = header["FIELDS"]
    sizes = header["SIZE"]
    types = header["TYPE"]
    counts = header.get("COUNT", ["1"] * len(names))
    if not (len(names) == len(sizes) == len(types) == len(counts)):
        raise ParseError("FIELDS/SIZE/TYPE/COUNT lengths differ", path=where)
    try:
        n_points = int(header["POINTS"][0])
        fields = []
        for name, size, kind, count in zip(names, sizes, types, counts):
            code = _TYPE_CODES[(kind.upper(), int(size))]
            fields.append((name, code, int(count)))
    except (KeyError, ValueError, IndexError):
        raise ParseError("malformed field declaration", path=where) from None
    for axis in ("x", "y", "z"):
        if axis not in names:
            raise ParseError(f"field {axis!r} missing", path=where)

    viewpoint = (0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0)
    if "VIEWPOINT" in header:
        try:
            viewpoint = tuple(float(v) for v in header["VIEWPOINT"])
        except ValueError:
            raise ParseError("malformed VIEWPOINT", path=where) from None
        if len(viewpoint) != 7:
            raise ParseError("VIEWPOINT needs 7 values", path=where)

    columns: Dict[str, np.ndarray] = {}
    dtype = np.dtype([(name, "<" + code, (count,)) if count > 1 else (name, "<" + code) for name, code, count in fields])
    if encoding == "binary":
        body = raw[offset:]
        needed = dtype.itemsize * n_points
        if len(body) < needed:
            raise ParseError(f"truncated binary body: {len(body)} bytes, expected {needed}", path=where)
        records = np.frombuffer(body, dtype=dtype, count=n_points) if n_points else np.zeros(0, dtype=dtype)
        columns = {name: records[name] for name, _, _ in fields}
    else:
        text_lines = [l for l in raw[offset:].decode("ascii", errors="replace").splitlines() if l.strip()]
        if len(text_lines) < n_points:
            raise ParseError(f"expected {n_points} points, found {len(text_lines)}", path=where, line=line_no + len(text_lines) + 1)
        width = sum(count for _, _, count in fields)
        table = []
        for i, text in enumerate(text_lines[:n_points]):
            tokens = text.split()
            if len(tokens) < width:
                raise ParseError(f"expected {width} values, got {len(tokens)}", path=where, line=line_no + i + 1)
            table.append(tokens[:width])
        position = 0
        for name, code, count in fields:
            chunk = [row[position] for row in table] if count == 1 else [row[position:position + count] for row in table]
            position += count
            if name == "rgb" and code == "f4":
                # ascii 中的打包颜色以 float 文本给出，需按位还原
                columns[name] = np.array(chunk, dtype=np.float64).astype(np.float32)
            else:
                columns[name] = np.array(chunk, dtype=np.float64).astype(code)

    xyz = np.stack([np.asarray(columns[a]).astype(np.float64) for a in ("x", "y", "z")], axis=1)
    rgb = None
    if "rgb" in columns:
        rgb = unpack_rgb(np.asarray(columns["rgb"]))
    elif all(c in columns for c in ("r", "g", "b")):
        rgb = np.stack([np.asarray(columns[c]).astype(np.uint8) for c in ("r", "g", "b")], axis=1)
    return PcdData(xyz=xyz, rgb=rgb, encoding=encoding, viewpoint=viewpoint, comments=comments)


def write_pcd(
    path: Union[str, Path],
    xyz: np.ndarray,
    rgb: np.ndarray,
    binary: bool = True,
    viewpoint: Tuple[float, ...] = (0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0),
    comments: Tuple[str, ...] = (),
) -> str:
    """写出 x y z rgb(U 4) 点云。"""
    xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
    packed = pack_rgb(rgb)
    n = xyz.shape[0]
    lines = [f"# {c}" for c in comments] + [
        "VERSION .7",
        "FIELDS x y z rgb",
        "SIZE 4 4 4 4",
        "TYPE F F F U",
        "COUNT 1 1 1 1",
        f"WIDTH {n}",
        "HEIGHT 1",
        "VIEWPOINT " + " ".join(repr(float(v)) for v in viewpoint),
        f"POINTS {n}",
        f"DATA {'binary' if binary else 'ascii'}",
    ]
    file_path = Path(path)
    with open(file_path, "wb") as f:
        f.write(("\n".join(lines) + "\n").encode("ascii"))
        xyz32 = xyz.astype(np.float32)
        if binary:
            records = np.empty(n, dtype=[("x", "<f4"), ("y", "<f4"), ("z", "<f4"), ("rgb", "<u4")])
            records["x"], records["y"], records["z"] = xyz32[:, 0], xyz32[:, 1], xyz32[:, 2]
            records["rgb"] = packed
            f.write(records.tobytes())
        else:
            body = [f"{x:.9g} {y:.9g} {z:.9g} {int(c)}" for (x, y, z), c in zip(xyz32.tolist(), packed.tolist())]
            if body:
                f.write(("\n".join(body) + "\n").encode("ascii"))
    return str(file_path)
