"""Batch FFT -> corner turn -> batch FFT pipeline over two worker pools.

Each pool is a single worker thread with its own nominal throughput; the
"gpu" pool stands in for the accelerator.  Every row FFT is one task that
reads its row into a private buffer, computes, then writes the result back.
Passes are separated by a strict barrier and a single-threaded blocked
transpose.
"""

from __future__ import annotations

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from radixplan.kernels import default_plan, dft_oracle, log2_exact, run_plan, validate_plan
from radixplan.perf import MachineProfile, fft_flops, pass_makespan, split_batch

POOLS = ("cpu", "gpu")
PHASES = ("read", "compute", "write")


@dataclass
class PipelineSpec:
    rows: int = 1024
    cols: int = 1024
    plan_pass1: Sequence[int] | None = None
    plan_pass2: Sequence[int] | None = None
    ratio: float = 0.5
    transpose_block: int = 32

    def __post_init__(self):
        log2_exact(self.rows)
        log2_exact(self.cols)
        if self.rows < 2 or self.cols < 2:
            raise ValueError("rows and cols must be >= 2")
        if not 0 <= self.ratio <= 1:
            raise ValueError(f"ratio must be in [0, 1], got {self.ratio}")
        if self.transpose_block < 1:
            raise ValueError("transpose_block must be >= 1")
        # pass 1 transforms rows of length cols, pass 2 rows of length rows
        self.plan_pass1 = validate_plan(self.plan_pass1 or default_plan(self.cols), self.cols)
        self.plan_pass2 = validate_plan(self.plan_pass2 or default_plan(self.rows), self.rows)


@dataclass(frozen=True)
class TraceEvent:
    task_id: int
    pool: str
    phase: str
    start_ns: int
    end_ns: int
    pass_index: int


@dataclass
class TaskTrace:
    events: list[TraceEvent] = field(default_factory=list)
    pass_spans: list[tuple[int, int]] = field(default_factory=list)
    transpose_span: tuple[int, int] | None = None

    def task_ids(self, pass_index: int | None = None) -> set[int]:
        return {e.task_id for e in self.events if pass_index is None or e.pass_index == pass_index}

    def pool_tasks(self, pool: str, pass_index: int | None = None) -> set[int]:
        return {e.task_id for e in self.events
                if e.pool == pool and (pass_index is None or e.pass_index == pass_index)}

    def busy_ns(self, pool: str, pass_index: int | None = None) -> int:
        return sum(e.end_ns - e.start_ns for e in self.events
                   if e.pool == pool and (pass_index is None or e.pass_index == pass_index))

    def check(self) -> None:
        """Raise AssertionError if phase order, pool exclusivity or the barrier is violated."""
        by_task: dict[int, list[TraceEvent]] = {}
        for e in self.events:
            assert e.phase in PHASES, f"unknown phase {e.phase}"
            assert e.start_ns <= e.end_ns, f"task {e.task_id} {e.phase} ends before it starts"
            by_task.setdefault(e.task_id, []).append(e)
        for tid, evs in by_task.items():
            assert [e.phase for e in evs] == list(PHASES), f"task {tid} phases out of order"
            assert len({e.pool for e in evs}) == 1, f"task {tid} migrated between pools"
            for a, b in zip(evs, evs[1:]):
                assert a.end_ns <= b.start_ns, f"task {tid}: {a.phase} overlaps {b.phase}"
        for pool in {e.pool for e in self.events}:
            evs = sorted((e for e in self.events if e.pool == pool), key=lambda e: e.start_ns)
            for a, b in zip(evs, evs[1:]):
                assert a.end_ns <= b.start_ns, f"pool {pool}: overlapping tasks {a.task_id}, {b.task_id}"
        if self.transpose_span is not None:
            t0, t1 = self.transpose_span
            for e in self.events:
                if e.pass_index == 0:
                    assert e.end_ns <= t0, f"pass-1 task {e.task_id} still running at transpose"
                else:
                    assert e.start_ns >= t1, f"pass-2 task {e.task_id} started before transpose end"

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["task_id", "pool", "phase", "start_ns", "end_ns"])
            for e in sorted(self.events, key=lambda e: (e.start_ns, e.task_id)):
                writer.writerow([e.task_id, e.pool, e.phase, e.start_ns, e.end_ns])


class PipelineResult(NamedTuple):
    output: np.ndarray
    trace: TaskTrace
    makespan: float


def blocked_transpose(matrix: np.ndarray, block: int = 32) -> np.ndarray:
    """Transpose tile by tile; bitwise identical to ``matrix.T``."""
    if block < 1:
        raise ValueError("block must be >= 1")
    a = np.asarray(matrix)
    rows, cols = a.shape
    out = np.empty((cols, rows), dtype=a.dtype)
    for i0 in range(0, rows, block):
        i1 = min(i0 + block, rows)
        for j0 in range(0, cols, block):
            j1 = min(j0 + block, cols)
            out[j0:j1, i0:i1] = a[i0:i1, j0:j1].T
    return out


def reference_pipeline(matrix) -> np.ndarray:
    """Row DFTs, exact transpose, row DFTs, all through the direct oracle."""
    return dft_oracle(np.ascontiguousarray(dft_oracle(matrix).T))


def _run_pool(pool, task_ids, first_row, src, dst, plan, pass_index, t_origin):
    events = []
    clock = time.perf_counter_ns
    for tid in task_ids:
        row = tid - first_row
        t0 = clock()
        buf = src[row].copy()
        t1 = clock()
        out = run_plan(buf, plan)
        t2 = clock()
        dst[row] = out
        t3 = clock()
        events.append(TraceEvent(tid, pool, "read", t0 - t_origin, t1 - t_origin, pass_index))
        events.append(TraceEvent(tid, pool, "compute", t1 - t_origin, t2 - t_origin, pass_index))
        events.append(TraceEvent(tid, pool, "write", t2 - t_origin, t3 - t_origin, pass_index))
    return events


def _run_pass(executor, src, plan, ratio, first_task, pass_index, t_origin, trace):
    count = src.shape[0]
    split = split_batch(count, ratio)
    dst = np.empty_like(src)
    ids = range(first_task, first_task + count)
    assignment = {POOLS[0]: ids[:split.s_cpu], POOLS[1]: ids[split.s_cpu:]}
    start = time.perf_counter_ns() - t_origin
    futures = [executor.submit(_run_pool, pool, tids, first_task, src, dst, plan, pass_index, t_origin)
               for pool, tids in assignment.items()]
    for fut in futures:
        trace.events.extend(fut.result())
    trace.pass_spans.append((start, time.perf_counter_ns() - t_origin))
    return dst


def run_pipeline(matrix, spec: PipelineSpec) -> PipelineResult:
    """FFT every row, corner-turn, FFT every row again.

    Returns the ``cols x rows`` output grid, the task trace, and the makespan
    in seconds from the first task start to the last task end.
    """
    grid = np.asarray(matrix)
    if grid.shape != (spec.rows, spec.cols):
        raise ValueError(f"grid shape {grid.shape} does not match spec {(spec.rows, spec.cols)}")
    grid = np.ascontiguousarray(grid, dtype=np.complex64)
    trace = TaskTrace()
    t_origin = time.perf_counter_ns()
    with ThreadPoolExecutor(max_workers=len(POOLS), thread_name_prefix="fftpool") as executor:
        stage1 = _run_pass(executor, grid, spec.plan_pass1, spec.ratio, 0, 0, t_origin, trace)
        t0 = time.perf_counter_ns() - t_origin
        turned = blocked_transpose(stage1, spec.transpose_block)
        trace.transpose_span = (t0, time.perf_counter_ns() - t_origin)
        out = _run_pass(executor, turned, spec.plan_pass2, spec.ratio, spec.rows, 1, t_origin, trace)
    if trace.events:
        first = min(e.start_ns for e in trace.events)
        last = max(e.end_ns for e in trace.events)
    else:
        first = last = 0
    return PipelineResult(out, trace, (last - first) / 1e9)


def predict_makespan(spec: PipelineSpec, profile: MachineProfile, *,
                     include_transpose: bool = True) -> float:
    """Model makespan in seconds for both passes plus the transpose.

    Each pass takes the slower pool's time for its share of the batch.  The
    transpose moves the grid once in and once out at ``profile.bandwidth_gbs``;
    it is skipped when no bandwidth is given.
    """
    total = 0.0
    for count, size in ((spec.rows, spec.cols), (spec.cols, spec.rows)):
        total += pass_makespan(split_batch(count, spec.ratio), size, profile.p_cpu, profile.p_gpu)
    if include_transpose and profile.bandwidth_gbs is not None:
        moved = 2 * spec.rows * spec.cols * np.dtype(np.complex64).itemsize
        total += moved / (profile.bandwidth_gbs * 1e9)
    return total


def pool_throughput(trace: TaskTrace, spec: PipelineSpec) -> dict[str, float]:
    """GFlops each pool delivered while busy, over both passes."""
    result = {}
    for pool in POOLS:
        flops = 0.0
        for pass_index, size in ((0, spec.cols), (1, spec.rows)):
            flops += len(trace.pool_tasks(pool, pass_index)) * fft_flops(size)
        busy = trace.busy_ns(pool)
        result[pool] = flops / busy if busy else 0.0
    return result


def pool_utilization(trace: TaskTrace, makespan: float) -> dict[str, float]:
    if makespan <= 0:
        return {pool: 0.0 for pool in POOLS}
    return {pool: trace.busy_ns(pool) / 1e9 / makespan for pool in POOLS}
