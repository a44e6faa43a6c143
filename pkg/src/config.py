"""
配置管理

优先级（低 -> 高）：dataclass 默认值 -> 配置文件（data/default_config.json、
--config 或 ACOUSTIC_MAP_CONFIG）-> 环境变量 -> 命令行 --set section.field=value
"""
import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union, get_type_hints

from materials.database import default_data_dir
from projection.camera import CameraModel
from schema.errors import ConfigError, FieldValidationError, ParseError
from segmentation.densecrf import ALLOWED_DOWNSAMPLE, CrfParams
from voxelmap.grid import GridParams

LABEL_SOURCES = ("external", "oracle", "noisy_oracle")


def _env_bool(name: str, default: bool) -> bool:
    """读取布尔环境变量，非法值回退默认值。"""
    value = os.getenv(name)
    if value is None:
        return default
    lowered = value.strip().lower()
    if lowered in {"1", "true", "yes", "on"}:
        return True
    if lowered in {"0", "false", "no", "off"}:
        return False
    return default


def _env_int(name: str, default: int) -> int:
    """读取整数环境变量，非法值回退默认值。"""
    value = os.getenv(name)
    if value is None:
        return default
    try:
        return int(value.strip())
    except ValueError:
        return default


def _env_float(name: str, default: Optional[float]) -> Optional[float]:
    value = os.getenv(name)
    if value is None:
        return default
    try:
        return float(value.strip())
    except ValueError:
        return default


@dataclass
class CameraConfig:
    focal: float = 525.0
    width: int = 640
    height: int = 480
    cx: float = 319.5
    cy: float = 239.5
    meters_to_pixels: float = 1000.0

    def model(self) -> CameraModel:
        return CameraModel(**asdict(self))


@dataclass
class HolesConfig:
    kernel: int = 5
    max_iters: int = 8


@dataclass
class CrfConfig:
    enabled: bool = True
    downsample: int = 4
    w_app: float = 4.0
    theta_pos: float = 40.0
    theta_lab: float = 10.0
    w_smooth: float = 2.0
    theta_smooth: float = 3.0
    iterations: int = 10
    confidence: float = 0.8
    kernel_cache_mb: int = 64

    def params(self) -> CrfParams:
        return CrfParams.from_dict(asdict(self))


@dataclass
class GridConfig:
    resolution: float = 0.1
    l_hit: float = 0.85
    l_miss: float = -0.4
    l_min: float = -2.0
    l_max: float = 3.5
    p_occ: float = 0.97
    carve_free_space: bool = True
    max_range: float = 8.0

    def params(self) -> GridParams:
        return GridParams.from_dict(asdict(self))


@dataclass
class LabelsConfig:
    source: str = "oracle"                  # external | oracle | noisy_oracle
    directory: Optional[str] = None         # external：每帧一张标签图（与帧同名）
    remap_path: Optional[str] = None        # external：ADE20k id -> 标签 id
    noise: Optional[float] = None           # noisy_oracle：缺省取数据集 sensor.label_noise
    seed: int = 0


@dataclass
class MaterialsConfig:
    database: Optional[str] = None          # 缺省 data/materials.json
    matching_table: Optional[str] = None    # 缺省 data/matching_table.txt

    def database_path(self) -> Path:
        return Path(self.database) if self.database else default_data_dir() / "materials.json"

    def matching_table_path(self) -> Path:
        return Path(self.matching_table) if self.matching_table else default_data_dir() / "matching_table.txt"


@dataclass
class RuntimeConfig:
    workers: int = 2
    single_threaded: bool = False
    lookahead: int = 4
    debug_dump: bool = False
    output_dir: str = "./output"


_SECTIONS = ("camera", "holes", "crf", "grid", "labels", "materials", "runtime")


@dataclass
class PipelineConfig:
    """流水线配置"""
    camera: CameraConfig = field(default_factory=CameraConfig)
    holes: HolesConfig = field(default_factory=HolesConfig)
    crf: CrfConfig = field(default_factory=CrfConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    labels: LabelsConfig = field(default_factory=LabelsConfig)
    materials: MaterialsConfig = field(default_factory=MaterialsConfig)
    runtime: RuntimeConfig = field(default_factory=RuntimeConfig)

    # ==================== 序列化 ====================

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PipelineConfig":
        config = cls()
        config.update(data)
        return config

    def update(self, data: Dict[str, Any]):
        """按节合并（未知键报错）。"""
        if not isinstance(data, dict):
            raise ConfigError("config", "expected an object")
        for section, values in data.items():
            if section not in _SECTIONS:
                raise ConfigError(section, "unknown config section")
            if not isinstance(values, dict):
                raise ConfigError(section, "expected an object")
            for name, value in values.items():
                self.set(f"{section}.{name}", value)

    def set(self, path: str, value: Any):
        """设置点分路径字段，字符串按字段类型转换。"""
        section_name, _, name = path.partition(".")
        if section_name not in _SECTIONS or not name:
            raise ConfigError(path, "unknown config field")
        section = getattr(self, section_name)
        hints = get_type_hints(type(section))
        if name not in hints:
            raise ConfigError(path, "unknown config field")
        setattr(section, name, _coerce(path, hints[name], value))

    def apply_overrides(self, overrides: Iterable[str]):
        """处理 ["crf.enabled=false", ...]"""
        for item in overrides:
            path, sep, value = item.partition("=")
            if not sep:
                raise ConfigError(item, "expected section.field=value")
            self.set(path.strip(), value.strip())

    def apply_env(self):
        self.runtime.workers = _env_int("ACOUSTIC_MAP_WORKERS", self.runtime.workers)
        self.runtime.single_threaded = _env_bool("ACOUSTIC_MAP_SINGLE_THREADED", self.runtime.single_threaded)
        self.runtime.output_dir = os.getenv("ACOUSTIC_MAP_OUTPUT_DIR", self.runtime.output_dir)
        self.labels.noise = _env_float("ACOUSTIC_MAP_LABEL_NOISE", self.labels.noise)

    def save(self, path: Union[str, Path]) -> str:
        file_path = Path(path)
        file_path.parent.mkdir(parents=True, exist_ok=True)
        file_path.write_text(json.dumps(self.to_dict(), ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
        return str(file_path)

    # ==================== 校验 ====================

    def validate(self) -> "PipelineConfig":
        """检查取值范围和引用文件，失败抛 ConfigError（带点分路径）。"""
        try:
            self.camera.model()
            self.crf.params()
            self.grid.params()
        except FieldValidationError as e:
            raise ConfigError(e.field, str(e).split(": ", 1)[-1]) from None
        if self.crf.downsample not in ALLOWED_DOWNSAMPLE:
            raise ConfigError("crf.downsample", f"must be one of {ALLOWED_DOWNSAMPLE}, got {self.crf.downsample}")
        if self.crf.kernel_cache_mb < 0:
            raise ConfigError("crf.kernel_cache_mb", "must be >= 0")
        if self.holes.kernel < 3 or self.holes.kernel % 2 == 0:
            raise ConfigError("holes.kernel", f"must be odd and >= 3, got {self.holes.kernel}")
        if self.holes.max_iters < 0:
            raise ConfigError("holes.max_iters", f"must be >= 0, got {self.holes.max_iters}")
        if self.labels.source not in LABEL_SOURCES:
            raise ConfigError("labels.source", f"must be one of {LABEL_SOURCES}, got {self.labels.source!r}")
        if self.labels.noise is not None and not 0.0 <= self.labels.noise < 0.5:
            raise ConfigError("labels.noise", f"must lie in [0, 0.5), got {self.labels.noise}")
        if self.labels.source == "external":
            if not self.labels.directory:
                raise ConfigError("labels.directory", "required for the external label source")
            _require_file("labels.directory", Path(self.labels.directory), directory=True)
        if self.labels.remap_path:
            _require_file("labels.remap_path", Path(self.labels.remap_path))
        _require_file("materials.database", self.materials.database_path())
        _require_file("materials.matching_table", self.materials.matching_table_path())
        if self.runtime.workers < 1:
            raise ConfigError("runtime.workers", f"must be >= 1, got {self.runtime.workers}")
        if self.runtime.lookahead < 1:
            raise ConfigError("runtime.lookahead", f"must be >= 1, got {self.runtime.lookahead}")
        return self


def _require_file(path_name: str, path: Path, directory: bool = False):
    ok = path.is_dir() if directory else path.is_file()
    if not ok:
        raise ConfigError(path_name, f"{'directory' if directory else 'file'} not found: {path}")


def _parse_bool(path: str, value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in {"1", "true", "yes", "on"}:
        return True
    if lowered in {"0", "false", "no", "off"}:
        return False
    raise ConfigError(path, f"expected a boolean, got {value!r}")


def _coerce(path: str, hint: Any, value: Any) -> Any:
    args = getattr(hint, "__args__", ())
    optional = type(None) in args
    if optional:
        hint = next(a for a in args if a is not type(None))
        if value is None or (isinstance(value, str) and value.strip().lower() in {"", "none", "null"}):
            return None
    try:
        if hint is bool:
            return _parse_bool(path, value) if isinstance(value, str) else bool(value)
        if hint is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if hint is float:
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(path, f"expected {hint.__name__}, got {value!r}") from None


def default_config_path() -> Path:
    return default_data_dir() / "default_config.json"


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Iterable[str] = (),
    use_env: bool = True,
) -> PipelineConfig:
    """按优先级叠加得到配置（未校验，调用方负责 validate）。"""
    config = PipelineConfig()
    if path is None and use_env:
        path = os.getenv("ACOUSTIC_MAP_CONFIG") or None
    file_path = Path(path) if path else default_config_path()
    if path and not file_path.exists():
        raise FileNotFoundError(f"配置文件不存在: {file_path}")
    if file_path.exists():
        try:
            data = json.loads(file_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ParseError(e.msg, path=str(file_path), line=e.lineno) from None
        config.update(data)
    if use_env:
        config.apply_env()
    config.apply_overrides(overrides)
    return config
