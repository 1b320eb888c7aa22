import csv

import numpy as np
import pytest

from conftest import random_signal
from radixplan.kernels import relative_l2_error
from radixplan.perf import MachineProfile, optimal_cpu_ratio, split_batch
from radixplan.pipeline import (PipelineSpec, blocked_transpose, pool_throughput,
                                pool_utilization, predict_makespan, reference_pipeline,
                                run_pipeline)


def test_spec_defaults():
    spec = PipelineSpec()
    assert (spec.rows, spec.cols, spec.transpose_block) == (1024, 1024, 32)
    assert spec.plan_pass1 == (8, 8, 8, 2)


def test_spec_validation():
    with pytest.raises(ValueError):
        PipelineSpec(rows=24)
    with pytest.raises(ValueError):
        PipelineSpec(ratio=1.2)
    with pytest.raises(ValueError, match="radix logs"):
        PipelineSpec(rows=16, cols=64, plan_pass1=(4, 4))


@pytest.mark.parametrize("shape,block", [((5, 7), 1), ((16, 16), 3), ((64, 32), 8), ((1024, 1024), 32)])
def test_blocked_transpose_bitwise(rng, shape, block):
    a = random_signal(rng, 1, batch=shape[0] * shape[1]).reshape(shape)
    t = blocked_transpose(a, block)
    assert np.array_equal(t, a.T)
    assert np.array_equal(blocked_transpose(t, block), a)


def test_blocked_transpose_rejects_zero_block():
    with pytest.raises(ValueError):
        blocked_transpose(np.zeros((2, 2)), 0)


def test_pipeline_16x16_matches_oracle(rng):
    grid = random_signal(rng, 16, batch=16)
    out, trace, makespan = run_pipeline(grid, PipelineSpec(16, 16, ratio=0.5))
    assert relative_l2_error(out, reference_pipeline(grid)) < 1e-3
    assert makespan > 0
    trace.check()


def test_pipeline_rectangular(rng):
    grid = random_signal(rng, 32, batch=8)
    out, trace, _ = run_pipeline(grid, PipelineSpec(8, 32, (4, 8), (2, 4), ratio=0.25))
    assert out.shape == (32, 8)
    assert relative_l2_error(out, reference_pipeline(grid)) < 1e-3
    assert trace.task_ids(0) == set(range(8))
    assert trace.task_ids(1) == set(range(8, 40))


def test_ratio_zero_leaves_cpu_idle(rng):
    grid = random_signal(rng, 16, batch=16)
    _, trace, makespan = run_pipeline(grid, PipelineSpec(16, 16, ratio=0.0))
    assert trace.pool_tasks("cpu") == set()
    assert len(trace.pool_tasks("gpu")) == 32
    assert pool_utilization(trace, makespan)["cpu"] == 0


def test_split_follows_split_batch(rng):
    grid = random_signal(rng, 32, batch=32)
    _, trace, _ = run_pipeline(grid, PipelineSpec(32, 32, ratio=0.3))
    expected = split_batch(32, 0.3)
    for p in (0, 1):
        assert len(trace.pool_tasks("cpu", p)) == expected.s_cpu
        assert len(trace.pool_tasks("gpu", p)) == expected.s_gpu


def test_trace_csv(rng, tmp_path):
    grid = random_signal(rng, 64, batch=64)
    _, trace, _ = run_pipeline(grid, PipelineSpec(64, 64, ratio=0.5))
    path = tmp_path / "trace.csv"
    trace.to_csv(path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["task_id", "pool", "phase", "start_ns", "end_ns"]
    assert len({r["task_id"] for r in rows}) == 128
    assert len(rows) == 3 * 128


def test_trace_check_catches_barrier_violation(rng):
    grid = random_signal(rng, 8, batch=8)
    _, trace, _ = run_pipeline(grid, PipelineSpec(8, 8))
    t0, t1 = trace.transpose_span
    trace.transpose_span = (t0 - 10**12, t1)
    with pytest.raises(AssertionError):
        trace.check()


def test_dimension_mismatch(rng):
    with pytest.raises(ValueError, match="shape"):
        run_pipeline(random_signal(rng, 16, batch=8), PipelineSpec(16, 16))


def test_predict_reference_profile():
    spec = PipelineSpec(ratio=optimal_cpu_ratio(40, 55))
    predicted = predict_makespan(spec, MachineProfile(40, 55))
    ideal = 2 * 1024 * (5 * 1024 * 10) / 95e9
    assert predicted == pytest.approx(ideal, rel=1e-3)
    assert predicted == pytest.approx(1.10e-3, abs=0.005e-3)


def test_predict_equal_finish_within_one_task():
    ratio = optimal_cpu_ratio(40, 55)
    split = split_batch(1024, ratio)
    task = 51200 / 1e9
    ideal = 1024 * task / 95
    assert abs(split.s_cpu * task / 40 - ideal) <= task / 40
    assert abs(split.s_gpu * task / 55 - ideal) <= task / 55


def test_predict_transpose_term():
    spec = PipelineSpec(ratio=0.5)
    without = predict_makespan(spec, MachineProfile(40, 55))
    with_bw = predict_makespan(spec, MachineProfile(40, 55, bandwidth_gbs=10))
    assert with_bw - without == pytest.approx(2 * 1024 * 1024 * 8 / 10e9)


def test_predict_rejects_zero_throughput():
    with pytest.raises(ValueError):
        predict_makespan(PipelineSpec(), MachineProfile(40, 0))


@pytest.mark.slow
def test_measured_makespan_tracks_model(rng):
    """Calibrate pool throughput from one run, rebalance, and compare with the model."""
    grid = random_signal(rng, 1024, batch=1024)
    spec = PipelineSpec(ratio=0.5)
    _, trace, _ = run_pipeline(grid, spec)
    rates = pool_throughput(trace, spec)
    ratio = optimal_cpu_ratio(rates["cpu"], rates["gpu"])
    spec = PipelineSpec(ratio=ratio)
    _, trace, _ = run_pipeline(grid, spec)
    measured = sum((end - start) / 1e9 for start, end in trace.pass_spans)
    predicted = predict_makespan(spec, MachineProfile(rates["cpu"], rates["gpu"]))
    assert abs(measured - predicted) / predicted <= 0.25
