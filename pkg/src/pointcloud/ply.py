"""
PLY 读写

支持 ascii 与 binary_little_endian 两种编码，只处理 vertex 元素：
x/y/z 为 float 或 double，颜色为 red/green/blue uchar，其余标量属性会被跳过。
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from schema.errors import ParseError

PLY_SCALAR_TYPES: Dict[str, str] = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}
SUPPORTED_FORMATS = ("ascii", "binary_little_endian")


@dataclass
class PlyData:
    """解析结果"""
    xyz: np.ndarray
    rgb: Optional[np.ndarray]
    encoding: str
    comments: List[str] = field(default_factory=list)


@dataclass
class _Header:
    encoding: str
    vertex_count: int
    properties: List[Tuple[str, str]]
    comments: List[str]
    data_offset: int
    header_lines: int
    trailing_elements: bool


def _parse_header(raw: bytes, path: str) -> _Header:
    end_marker = b"end_header"
    end = raw.find(end_marker)
    if not raw.startswith(b"ply") or end < 0:
        raise ParseError("not a PLY file (missing 'ply' magic or 'end_header')", path=path, line=1)
    newline = raw.find(b"\n", end)
    data_offset = len(raw) if newline < 0 else newline + 1
    lines = raw[:end + len(end_marker)].decode("ascii", errors="replace").splitlines()

    encoding = None
    vertex_count = None
    properties: List[Tuple[str, str]] = []
    comments: List[str] = []
    current_element = None
    trailing = False
    for line_no, line in enumerate(lines, start=1):
        tokens = line.split()
        if not tokens or tokens[0] in ("ply", "end_header", "obj_info"):
            continue
        keyword = tokens[0]
        if keyword == "comment":
            comments.append(line[len("comment"):].strip())
        elif keyword == "format":
            if len(tokens) < 2 or tokens[1] not in SUPPORTED_FORMATS:
                raise ParseError(f"unsupported PLY format {' '.join(tokens[1:])!r}", path=path, line=line_no)
            encoding = tokens[1]
        elif keyword == "element":
            if len(tokens) != 3:
                raise ParseError(f"malformed element line {line!r}", path=path, line=line_no)
            current_element = tokens[1]
            if current_element == "vertex":
                if vertex_count is not None:
                    raise ParseError("duplicate vertex element", path=path, line=line_no)
                try:
                    vertex_count = int(tokens[2])
                except ValueError:
                    raise ParseError(f"bad vertex count {tokens[2]!r}", path=path, line=line_no) from None
                if vertex_count < 0:
                    raise ParseError("negative vertex count", path=path, line=line_no)
            elif vertex_count is None:
                raise ParseError(f"element {current_element!r} before vertex is not supported", path=path, line=line_no)
            else:
                trailing = True
        elif keyword == "property":
            if current_element != "vertex":
                continue
            if len(tokens) != 3 or tokens[1] == "list":
                raise ParseError(f"unsupported vertex property {line!r}", path=path, line=line_no)
            dtype = PLY_SCALAR_TYPES.get(tokens[1])
            if dtype is None:
                raise ParseError(f"unknown property type {tokens[1]!r}", path=path, line=line_no)
            properties.append((tokens[2], dtype))
        else:
            raise ParseError(f"unexpected header keyword {keyword!r}", path=path, line=line_no)

    if encoding is None:
        raise ParseError("missing format line", path=path)
    if vertex_count is None:
        raise ParseError("missing 'element vertex'", path=path)
    names = [name for name, _ in properties]
    for axis in ("x", "y", "z"):
        if axis not in names:
            raise ParseError(f"vertex property {axis!r} missing", path=path)
    return _Header(encoding, vertex_count, properties, comments, data_offset, len(lines), trailing)


def _columns_to_arrays(columns: Dict[str, np.ndarray], dtypes: Dict[str, str]) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    # float 属性先按 float32 取值再升为 float64，保证 ascii 与 binary 结果逐位一致
    xyz = np.stack(
        [np.asarray(columns[a]).astype(dtypes[a]).astype(np.float64) for a in ("x", "y", "z")], axis=1
    )
    if all(c in columns for c in ("red", "green", "blue")):
        rgb = np.stack([np.asarray(columns[c]).astype(np.uint8) for c in ("red", "green", "blue")], axis=1)
    else:
        rgb = None
    return xyz, rgb


def read_ply(path: Union[str, Path]) -> PlyData:
    file_path = Path(path)
    raw = file_path.read_bytes()
    header = _parse_header(raw, str(file_path))
    dtypes = dict(header.properties)

    if header.encoding == "binary_little_endian":
        dtype = np.dtype([(name, "<" + code) for name, code in header.properties])
        needed = dtype.itemsize * header.vertex_count
        body = raw[header.data_offset:]
        if len(body) < needed:
            raise ParseError(f"truncated binary body: {len(body)} bytes, expected {needed}", path=str(file_path))
        if header.vertex_count:
            records = np.frombuffer(body, dtype=dtype, count=header.vertex_count)
        else:
            records = np.zeros(0, dtype=dtype)
        columns = {name: records[name] for name in dtype.names}
    else:
        text_lines = raw[header.data_offset:].decode("ascii", errors="replace").splitlines()
        if len(text_lines) < header.vertex_count:
            raise ParseError(
                f"expected {header.vertex_count} vertex lines, found {len(text_lines)}",
                path=str(file_path),
                line=header.header_lines + len(text_lines) + 1,
            )
        width = len(header.properties)
        values = np.empty((header.vertex_count, width), dtype=np.float64)
        for i, line in enumerate(text_lines[:header.vertex_count]):
            tokens = line.split()
            if len(tokens) < width:
                raise ParseError(f"expected {width} values, got {len(tokens)}", path=str(file_path), line=header.header_lines + i + 1)
            try:
                values[i] = [float(token) for token in tokens[:width]]
            except ValueError:
                raise ParseError(f"non-numeric vertex value in {line!r}", path=str(file_path), line=header.header_lines + i + 1) from None
        columns = {name: values[:, i] for i, (name, _) in enumerate(header.properties)}

    xyz, rgb = _columns_to_arrays(columns, dtypes)
    return PlyData(xyz=xyz, rgb=rgb, encoding=header.encoding, comments=header.comments)


def write_ply(
    path: Union[str, Path],
    xyz: np.ndarray,
    rgb: np.ndarray,
    binary: bool = True,
    comments: Sequence[str] = (),
) -> str:
    """写出彩色点（x/y/z float32 + red/green/blue uchar）。"""
    if not str(path or "").strip():
        raise ValueError("PLY 输出路径为空")
    xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
    rgb = np.asarray(rgb, dtype=np.uint8).reshape(-1, 3)
    if xyz.shape[0] != rgb.shape[0]:
        raise ValueError(f"点数 {xyz.shape[0]} 与颜色数 {rgb.shape[0]} 不一致")

    encoding = "binary_little_endian" if binary else "ascii"
    header_lines = ["ply", f"format {encoding} 1.0"]
    header_lines += [f"comment {c}" for c in comments]
    header_lines += [
        f"element vertex {xyz.shape[0]}",
        "property float x",
        "property float y",
        "property float z",
        "property uchar red",
        "property uchar green",
        "property uchar blue",
        "end_header",
    ]
    header = ("\n".join(header_lines) + "\n").encode("ascii")

    file_path = Path(path)
    with open(file_path, "wb") as f:
        f.write(header)
        if binary:
            records = np.empty(xyz.shape[0], dtype=[("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
                                                    ("red", "u1"), ("green", "u1"), ("blue", "u1")])
            records["x"], records["y"], records["z"] = (xyz[:, i].astype(np.float32) for i in range(3))
            records["red"], records["green"], records["blue"] = (rgb[:, i] for i in range(3))
            f.write(records.tobytes())
        else:
            xyz32 = xyz.astype(np.float32)
            # %.9g 足以无损往返 float32
            lines = [
                f"{x:.9g} {y:.9g} {z:.9g} {r} {g} {b}"
                for (x, y, z), (r, g, b) in zip(xyz32.tolist(), rgb.tolist())
            ]
            if lines:
                f.write(("\n".join(lines) + "\n").encode("ascii"))
    return str(file_path)
