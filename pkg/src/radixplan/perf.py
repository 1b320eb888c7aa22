"""Analytic throughput, energy and CPU/GPU batch-split models.

Throughputs are in GFlops with the usual 5*N*log2(N) flops per complex
N-point FFT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from radixplan.kernels import log2_exact


def fft_flops(n_samples: int) -> float:
    return 5.0 * n_samples * log2_exact(n_samples)


@dataclass(frozen=True)
class MachineProfile:
    """Per-pool FFT throughput (GFlops), memory bandwidth (GB/s) and optional power (W)."""

    p_cpu: float
    p_gpu: float
    bandwidth_gbs: float | None = None
    watts_cpu: float | None = None
    watts_gpu: float | None = None

    def __post_init__(self):
        for name in ("p_cpu", "p_gpu", "bandwidth_gbs", "watts_cpu", "watts_gpu"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be > 0, got {value}")


@dataclass(frozen=True)
class SplitDecision:
    cpu_ratio: float
    s_cpu: int
    s_gpu: int
    batch_size: int


def max_throughput(n_samples: int, bandwidth_gbs: float) -> float:
    """Bandwidth-bound FFT throughput ``5*N*log2(N)*B / (2*4*N)`` in GFlops.

    The byte count in the denominator is kept as published, so 1024 points at
    5 GB/s gives 31.25 GFlops.
    """
    if n_samples < 2:
        raise ValueError("FFT size must be >= 2")
    if bandwidth_gbs <= 0:
        raise ValueError("bandwidth must be > 0")
    return 5.0 * n_samples * log2_exact(n_samples) * bandwidth_gbs / (2 * 4 * n_samples)


def achieved_gflops(n_samples: int, count: int, elapsed: float) -> float:
    """GFlops for ``count`` FFTs of ``n_samples`` points finished in ``elapsed`` seconds."""
    if elapsed <= 0:
        raise ValueError("elapsed time must be > 0")
    return count * fft_flops(n_samples) / elapsed / 1e9


def gflops_per_watt(gflops: float, watts: float) -> float:
    if watts <= 0:
        raise ValueError(f"power must be > 0 W, got {watts}")
    return gflops / watts


def optimal_cpu_ratio(p_cpu: float, p_gpu: float) -> float:
    """Fraction of the batch for the CPU so that both pools finish together."""
    if p_cpu <= 0 or p_gpu <= 0:
        raise ValueError(f"throughputs must be > 0, got p_cpu={p_cpu}, p_gpu={p_gpu}")
    return 1.0 / (p_gpu / p_cpu + 1.0)


def constrained_cpu_ratio(p_cpu: float, p_gpu: float, cpu_load_cap: float) -> float:
    """Optimal ratio when the CPU may only spend ``cpu_load_cap`` of its capacity on FFTs."""
    if not 0 < cpu_load_cap <= 1:
        raise ValueError(f"cpu_load_cap must be in (0, 1], got {cpu_load_cap}")
    return optimal_cpu_ratio(p_cpu * cpu_load_cap, p_gpu)


def split_batch(batch_size: int, ratio: float) -> SplitDecision:
    """Round the CPU share down; the remainder goes to the GPU pool."""
    if batch_size < 0:
        raise ValueError("batch size must be >= 0")
    if not 0 <= ratio <= 1:
        raise ValueError(f"ratio must be in [0, 1], got {ratio}")
    # guard against 0.29 * 100 == 28.999999999999996
    s_cpu = min(batch_size, math.floor(batch_size * ratio + 1e-9))
    return SplitDecision(ratio, s_cpu, batch_size - s_cpu, batch_size)


def pass_makespan(split: SplitDecision, n_samples: int, p_cpu: float, p_gpu: float) -> float:
    """Seconds for one batch pass: the slower of the two pools."""
    w = fft_flops(n_samples)
    t_cpu = split.s_cpu * w / (p_cpu * 1e9)
    t_gpu = split.s_gpu * w / (p_gpu * 1e9)
    return max(t_cpu, t_gpu)


def ratio_report(p_cpu: float, p_gpu: float, *, batch: int = 1024, fft_size: int = 1024,
                 load_cap: float = 1.0) -> dict:
    """Split decision for one batch of FFTs, as emitted by ``radixplan ratio --json``."""
    ratio = constrained_cpu_ratio(p_cpu, p_gpu, load_cap)
    split = split_batch(batch, ratio)
    return {
        "p_cpu": p_cpu,
        "p_gpu": p_gpu,
        "ratio": ratio,
        "s_cpu": split.s_cpu,
        "s_gpu": split.s_gpu,
        "predicted_makespan": pass_makespan(split, fft_size, p_cpu * load_cap, p_gpu),
    }
