"""
建图流水线

帧按时间戳顺序处理，不丢帧。多线程模式下第 i+1.. 帧的准备工作（解析、投影、
分割、回传）在线程池中提前进行（最多 lookahead 帧），地图插入始终在调用线程中串行完成；
单线程模式逐帧顺序执行，两种模式输出相同。
"""
from collections import deque
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Deque, Iterable, List, Optional

from loguru import logger

from materials import MatchingTable, MaterialDatabase, load_matching_table
from schema.errors import AcousticMapError, FrameError, InputError, InvariantViolation
from utils.timing import StageTimer
from voxelmap import OccupancyGrid

from .labels import LabelSource, make_label_source
from .processor import FrameProcessor, PreparedFrame
from .sources import FrameSource, FrameTask


@dataclass
class BuildResult:
    grid: OccupancyGrid
    timer: StageTimer
    frames: int = 0
    points: int = 0
    holes_filled: int = 0
    out_of_bounds: int = 0
    timestamps: List[float] = field(default_factory=list)


def _frame_failure(task: FrameTask, exc: BaseException) -> AcousticMapError:
    """把任意异常包装成带帧信息的错误"""
    if isinstance(exc, FrameError):
        return exc
    if isinstance(exc, (InputError, FileNotFoundError, OSError)):
        error = FrameError(task.timestamp, f"{task.stem}: {exc}")
    else:
        error = InvariantViolation(f"frame {task.stem} (t={task.timestamp:.6f}): {type(exc).__name__}: {exc}")
    return error


class MapBuilder:
    """把一串帧融合进占据栅格"""

    def __init__(self, config, database: Optional[MaterialDatabase] = None,
                 matching: Optional[MatchingTable] = None, labels: Optional[LabelSource] = None,
                 debug_dir: Optional[Path] = None):
        self.config = config
        self.database = database or MaterialDatabase.load(config.materials.database_path())
        self.matching = matching or load_matching_table(config.materials.matching_table_path(), self.database)
        self._labels = labels
        self.debug_dir = debug_dir

    def new_grid(self) -> OccupancyGrid:
        return OccupancyGrid(self.config.grid.params(), num_materials=len(self.database),
                             unknown_material=self.database.unknown_id)

    def processor_for(self, source: FrameSource) -> FrameProcessor:
        labels = self._labels
        if labels is None:
            default_noise = source.sensor.label_noise if source.sensor is not None else 0.0
            labels = make_label_source(self.config, default_noise)
        return FrameProcessor(self.config, labels, self.matching, self.debug_dir)

    def build(self, source: FrameSource, grid: Optional[OccupancyGrid] = None,
              on_frame: Optional[Callable[[PreparedFrame], None]] = None) -> BuildResult:
        grid = grid if grid is not None else self.new_grid()
        result = BuildResult(grid=grid, timer=StageTimer())
        tasks = source.tasks()
        if not tasks:
            logger.warning("no frames to process: the map stays empty")
            return result

        processor = self.processor_for(source)
        runtime = self.config.runtime
        if runtime.single_threaded or runtime.workers <= 1:
            prepared = (self._prepare(processor, task) for task in tasks)
            self._consume(processor, grid, prepared, result, on_frame)
        else:
            with ThreadPoolExecutor(max_workers=runtime.workers, thread_name_prefix="prepare") as pool:
                self._consume(processor, grid, self._pipelined(pool, processor, tasks, runtime.lookahead),
                              result, on_frame)
        logger.info(f"map built: {result.frames} frames, {result.points} points, {len(grid)} cells")
        return result

    @staticmethod
    def _prepare(processor: FrameProcessor, task: FrameTask) -> PreparedFrame:
        try:
            return processor.prepare(task)
        except Exception as exc:
            raise _frame_failure(task, exc) from exc

    def _pipelined(self, pool: ThreadPoolExecutor, processor: FrameProcessor,
                   tasks: List[FrameTask], lookahead: int) -> Iterable[PreparedFrame]:
        pending: Deque[Future] = deque()
        queue = iter(tasks)
        try:
            for task in queue:
                pending.append(pool.submit(self._prepare, processor, task))
                if len(pending) >= lookahead:
                    yield pending.popleft().result()
            while pending:
                yield pending.popleft().result()
        finally:
            for future in pending:
                future.cancel()

    @staticmethod
    def _consume(processor: FrameProcessor, grid: OccupancyGrid, prepared: Iterable[PreparedFrame],
                 result: BuildResult, on_frame: Optional[Callable[[PreparedFrame], None]]):
        previous = None
        for item in prepared:
            if previous is not None and item.timestamp < previous:
                raise InvariantViolation(f"frame order broken: t={item.timestamp} after t={previous}")
            previous = item.timestamp
            try:
                processor.insert(grid, item)
            except Exception as exc:
                raise _frame_failure(item.task, exc) from exc
            result.frames += 1
            result.points += int(item.xyz.shape[0])
            result.holes_filled += item.holes_filled
            result.out_of_bounds += item.out_of_bounds
            result.timestamps.append(item.timestamp)
            result.timer.add(item.timing)
            if on_frame is not None:
                on_frame(item)
