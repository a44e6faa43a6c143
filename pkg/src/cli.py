#!/usr/bin/env python3
"""
Acoustic Map CLI - 命令行入口

退出码：0 成功；1 输入错误（解析/校验/配置/缺文件）；2 内部不变量被破坏或未预期的异常
"""
import argparse
import json
import os
import sys
from typing import List, Optional

# 加载 .env
try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass

# 添加 src 到路径
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from loguru import logger

from config import load_config
from main import AcousticMapper
from schema.errors import InputError, InvariantViolation
from synthetic import SceneSpec, SensorSpec, load_scene, load_sensor, load_waypoints

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INTERNAL = 2


def _configure_logging(verbosity: int):
    level = os.getenv("ACOUSTIC_MAP_LOG_LEVEL", "WARNING").upper()
    if verbosity == 1:
        level = "INFO"
    elif verbosity >= 2:
        level = "DEBUG"
    logger.remove()
    logger.add(sys.stderr, level=level, format="<green>{time:HH:mm:ss}</green> | <level>{level: <7}</level> | {message}")


def _mapper(args) -> AcousticMapper:
    overrides: List[str] = list(args.set or [])
    if args.no_crf:
        overrides.append("crf.enabled=false")
    if args.no_carve:
        overrides.append("grid.carve_free_space=false")
    if args.resolution is not None:
        overrides.append(f"grid.resolution={args.resolution}")
    if args.single_threaded:
        overrides.append("runtime.single_threaded=true")
    if args.workers is not None:
        overrides.append(f"runtime.workers={args.workers}")
    if args.output is not None:
        overrides.append(f"runtime.output_dir={args.output}")
    config = load_config(args.config, overrides)
    return AcousticMapper(config, run_name=args.run)


def cmd_simulate(args):
    """生成合成数据集"""
    mapper = _mapper(args)
    scene = load_scene(args.scene) if args.scene else SceneSpec.office()
    sensor = load_sensor(args.sensor) if args.sensor else SensorSpec.kinect()
    waypoints, frames_per_segment = None, args.frames_per_segment
    if args.waypoints:
        waypoints, file_frames = load_waypoints(args.waypoints)
        frames_per_segment = frames_per_segment or file_frames
    print(f"✨ 渲染合成数据集 -> {args.out}")
    dataset = mapper.simulate(args.out, scene, sensor, waypoints, frames_per_segment or 10, seed=args.seed)
    print(f"✅ {len(dataset)} 帧已写出：")
    print(f"   - {dataset.directory}/frames/")
    print(f"   - {dataset.directory}/labels/")
    print(f"   - {dataset.directory}/trajectory.txt")


def cmd_build_map(args):
    """融合帧生成声学材料栅格地图"""
    mapper = _mapper(args)
    print(f"🗺️  建图: {args.source}")
    result = mapper.build_map(args.source, args.trajectory)
    print(f"✅ {result.frames} 帧, {result.points} 点, {len(result.grid)} 个体素")
    print(f"   - {mapper.storage.snapshot_path(args.run)}")
    for mode in ("color", "material", "absorption"):
        print(f"   - {mapper.storage.export_path(args.run, mode)}")
    print("\n📊 各阶段耗时")
    print(result.timer.format())


def cmd_export(args):
    """从快照导出 PLY / CSV"""
    mapper = _mapper(args)
    path = mapper.export(args.mode, args.out, args.snapshot)
    print(f"✅ 已导出 ({args.mode}): {path}")


def cmd_stats(args):
    """地图统计"""
    mapper = _mapper(args)
    stats = mapper.stats(args.snapshot)
    if args.json:
        print(json.dumps(stats.to_dict(), ensure_ascii=False, indent=2))
    else:
        print("📊 地图统计")
        print(stats.format())


def cmd_runs(args):
    """列出已有运行"""
    mapper = _mapper(args)
    rows = mapper.runs()
    if args.json:
        print(json.dumps(rows, ensure_ascii=False, indent=2))
        return
    if not rows:
        print(f"📭 {mapper.storage.base_dir} 下没有运行")
        return
    print(f"📂 {mapper.storage.base_dir}")
    for row in rows:
        print(f"  - {row['run']}: {row['cells']} 个体素, {row['occupied']} 占据, "
              f"分辨率 {row['resolution']}, CRF {'开' if row['crf'] else '关'}")


def cmd_bench(args):
    """性能测试"""
    mapper = _mapper(args)
    print(f"⏱️  性能测试: {args.source}")
    report = mapper.bench(args.source, args.frames, args.trajectory)
    print(report.format())


def cmd_crf_refine(args):
    """单张图像的 CRF 精炼"""
    mapper = _mapper(args)
    mapper.crf_refine(args.image, args.labels, args.out, args.remap)
    print(f"✅ 精炼标签图: {args.out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acoustic-map",
        description="Acoustic Map - 带声学材料的三维占据栅格建图",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例:
  # 生成办公室场景的合成数据集
  acoustic-map simulate data/run01 --seed 7

  # 建图（关闭 CRF，标签加 30% 噪声）
  acoustic-map build-map data/run01 --no-crf --set labels.source=noisy_oracle --set labels.noise=0.3

  # 导出与统计
  acoustic-map export material --out material.ply
  acoustic-map stats

  # 性能测试
  acoustic-map bench data/run01 --frames 50 --no-crf

配置项均可用 --set section.field=value 覆盖，例如:
  camera.focal  holes.kernel  crf.iterations  crf.downsample  grid.resolution  grid.p_occ
  grid.max_range  labels.source  labels.directory  labels.remap_path  materials.database
  runtime.workers  runtime.lookahead  runtime.debug_dump
"""
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", default=None, help="输出目录（runtime.output_dir）")
    common.add_argument("--run", default="map", help="运行名称（输出子目录）")
    common.add_argument("--config", default=None, help="配置文件（JSON），缺省 data/default_config.json")
    common.add_argument("--set", action="append", metavar="SECTION.FIELD=VALUE", help="覆盖单个配置项，可重复")
    common.add_argument("--no-crf", action="store_true", help="关闭 CRF 精炼")
    common.add_argument("--no-carve", action="store_true", help="关闭射线空闲更新")
    common.add_argument("--resolution", type=float, default=None, help="体素边长（米）")
    common.add_argument("--single-threaded", action="store_true", help="单线程模式（调试用，输出相同）")
    common.add_argument("--workers", type=int, default=None, help="准备帧的线程数")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v 显示 INFO，-vv 显示 DEBUG")

    subparsers = parser.add_subparsers(dest="command")

    # simulate 命令
    p_sim = subparsers.add_parser("simulate", parents=[common], help="生成合成数据集")
    p_sim.add_argument("out", help="数据集目录")
    p_sim.add_argument("--scene", help="场景配置（JSON），缺省办公室场景")
    p_sim.add_argument("--sensor", help="传感器配置（JSON），缺省 Kinect")
    p_sim.add_argument("--waypoints", help="航点文件（JSON），缺省绕房间一圈")
    p_sim.add_argument("--frames-per-segment", type=int, default=None, help="每段帧数（含两端）")
    p_sim.add_argument("--seed", type=int, default=0, help="随机种子")
    p_sim.set_defaults(func=cmd_simulate)

    # build-map 命令
    p_build = subparsers.add_parser("build-map", parents=[common], help="建图")
    p_build.add_argument("source", help="数据集目录或帧目录")
    p_build.add_argument("--trajectory", help="轨迹文件（缺省取数据集内 trajectory.txt）")
    p_build.set_defaults(func=cmd_build_map)

    # export 命令
    p_export = subparsers.add_parser("export", parents=[common], help="导出地图")
    p_export.add_argument("mode", choices=["color", "material", "absorption"], help="导出模式")
    p_export.add_argument("--snapshot", help="快照文件（缺省取 <output>/<run>/map.amap）")
    p_export.add_argument("--out", help="输出路径")
    p_export.set_defaults(func=cmd_export)

    # stats 命令
    p_stats = subparsers.add_parser("stats", parents=[common], help="地图统计")
    p_stats.add_argument("--snapshot", help="快照文件")
    p_stats.add_argument("--json", action="store_true", help="以 JSON 输出")
    p_stats.set_defaults(func=cmd_stats)

    # runs 命令
    p_runs = subparsers.add_parser("runs", parents=[common], help="列出已有运行")
    p_runs.add_argument("--json", action="store_true", help="以 JSON 输出")
    p_runs.set_defaults(func=cmd_runs)

    # bench 命令
    p_bench = subparsers.add_parser("bench", parents=[common], help="性能测试")
    p_bench.add_argument("source", help="数据集目录或帧目录")
    p_bench.add_argument("--frames", type=int, default=None, help="只取前 N 帧")
    p_bench.add_argument("--trajectory", help="轨迹文件")
    p_bench.set_defaults(func=cmd_bench)

    # crf-refine 命令
    p_crf = subparsers.add_parser("crf-refine", parents=[common], help="单张图像 CRF 精炼")
    p_crf.add_argument("image", help="彩色图像")
    p_crf.add_argument("labels", help="硬标签图（PNG/PGM）")
    p_crf.add_argument("out", help="输出标签图")
    p_crf.add_argument("--remap", help="ADE20k 重映射表")
    p_crf.set_defaults(func=cmd_crf_refine)

    return parser


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(getattr(args, "verbose", 0))
    if not args.command:
        parser.print_help()
        return EXIT_INPUT
    try:
        args.func(args)
    except (InputError, FileNotFoundError, OSError) as e:
        print(f"❌ {e}")
        return EXIT_INPUT
    except InvariantViolation as e:
        print(f"❌ 内部错误: {e}")
        return EXIT_INTERNAL
    except Exception as e:
        logger.exception("unexpected failure")
        print(f"❌ 内部错误: {type(e).__name__}: {e}")
        return EXIT_INTERNAL
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
