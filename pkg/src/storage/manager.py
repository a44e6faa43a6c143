"""
存储管理器

负责把一次建图运行的产物写到本地目录：
    <base_dir>/<run>/map.amap             地图快照
    <base_dir>/<run>/map_color.ply        颜色栅格
    <base_dir>/<run>/map_material.ply     材料栅格
    <base_dir>/<run>/map_absorption.csv   吸声系数表
    <base_dir>/<run>/stats.json           地图统计
    <base_dir>/<run>/timing.csv           逐帧分阶段耗时
    <base_dir>/<run>/config.json          本次运行的完整配置
    <base_dir>/<run>/debug/               调试转储
"""
import os
import json
from pathlib import Path
from typing import Optional, Dict, Any

import pandas as pd

SNAPSHOT_NAME = "map.amap"
EXPORT_NAMES = {
    "color": "map_color.ply",
    "material": "map_material.ply",
    "absorption": "map_absorption.csv",
}


class StorageManager:
    """存储管理器 - 管理建图运行目录"""
    
    def __init__(self, base_dir: str = "./output"):
        """
        初始化存储管理器
        :param base_dir: 基础输出目录
        """
        self.base_dir = base_dir
        self._ensure_dir(base_dir)
    
    def _ensure_dir(self, path: str):
        """确保目录存在"""
        if not os.path.exists(path):
            os.makedirs(path)
    
    def get_run_dir(self, run_name: str) -> str:
        """获取运行目录。"""
        # 清理运行名称，移除非法字符
        safe_name = "".join(c for c in run_name if c.isalnum() or c in (' ', '_', '-', '.')).strip()
        # 只由点组成的名字会指向上级目录
        safe_name = safe_name.replace(' ', '_').strip('.') or "unnamed_run"
        run_dir = os.path.join(self.base_dir, safe_name)
        if not Path(run_dir).resolve().is_relative_to(Path(self.base_dir).resolve()):
            raise ValueError(f"运行目录超出输出目录: {run_name}")
        self._ensure_dir(run_dir)
        return run_dir

    def snapshot_path(self, run_name: str) -> str:
        return os.path.join(self.get_run_dir(run_name), SNAPSHOT_NAME)

    def export_path(self, run_name: str, mode: str) -> str:
        if mode not in EXPORT_NAMES:
            raise ValueError(f"未知导出模式: {mode}")
        return os.path.join(self.get_run_dir(run_name), EXPORT_NAMES[mode])

    def debug_dir(self, run_name: str) -> str:
        path = os.path.join(self.get_run_dir(run_name), "debug")
        self._ensure_dir(path)
        return path

    def _save_json(self, run_name: str, filename: str, data: Dict[str, Any]) -> str:
        filepath = os.path.join(self.get_run_dir(run_name), filename)
        with open(filepath, "w", encoding="utf-8") as f:
            json.dump(data, f, ensure_ascii=False, indent=2, default=str)
        return filepath

    def _load_json(self, run_name: str, filename: str) -> Optional[Dict[str, Any]]:
        filepath = os.path.join(self.get_run_dir(run_name), filename)
        if not os.path.exists(filepath):
            return None
        with open(filepath, "r", encoding="utf-8") as f:
            return json.load(f)

    def save_stats(self, run_name: str, stats: Dict[str, Any]) -> str:
        """保存地图统计（JSON）。"""
        return self._save_json(run_name, "stats.json", stats)

    def load_stats(self, run_name: str) -> Optional[Dict[str, Any]]:
        return self._load_json(run_name, "stats.json")

    def save_config(self, run_name: str, config_data: Dict[str, Any]) -> str:
        """保存本次运行使用的配置（JSON）。"""
        return self._save_json(run_name, "config.json", config_data)

    def load_config(self, run_name: str) -> Optional[Dict[str, Any]]:
        return self._load_json(run_name, "config.json")

    def save_bench(self, run_name: str, report: Dict[str, Any]) -> str:
        return self._save_json(run_name, "bench.json", report)

    def save_timing(self, run_name: str, table: pd.DataFrame) -> str:
        """保存逐帧分阶段耗时（CSV，毫秒）。"""
        filepath = os.path.join(self.get_run_dir(run_name), "timing.csv")
        table.to_csv(filepath, index=False, float_format="%.3f")
        return filepath
    
    def list_runs(self) -> list:
        """列出所有已有快照的运行"""
        if not os.path.exists(self.base_dir):
            return []
        return sorted(
            d for d in os.listdir(self.base_dir)
            if os.path.isfile(os.path.join(self.base_dir, d, SNAPSHOT_NAME))
        )
