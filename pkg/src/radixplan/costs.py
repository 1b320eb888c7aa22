"""Per-stage cost tables: host microbenchmarks and CSV persistence."""

from __future__ import annotations

import csv
import json
import logging
import math
import statistics
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from radixplan.kernels import RADIXES, apply_radix_stage, log2_exact, twiddle_table

log = logging.getLogger(__name__)

DEFAULT_SEED = 2015
BUNDLED_FIXTURES = ("ivybridge_1024.csv", "haswell_1024.csv")


class CostTableError(ValueError):
    pass


class BenchmarkError(RuntimeError):
    pass


def stage_slots(n: int, radixes: Sequence[int] = RADIXES) -> list[tuple[int, int]]:
    """Every ``(stage, radix)`` pair a complete table for ``n`` stages must hold."""
    return [(s, r) for r in sorted(radixes) for s in range(n - log2_exact(r) + 1)]


def experiment_budget(n: int, radixes: Sequence[int] = RADIXES) -> int:
    """Number of distinct stage experiments; 3(n-1) for radixes {2, 4, 8} and n >= 3."""
    return len(stage_slots(n, radixes))


@dataclass(frozen=True)
class CostTable:
    n: int
    entries: Mapping[tuple[int, int], float]
    source: str = "loaded"
    label: str = ""
    radixes: tuple[int, ...] = RADIXES
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        expected = set(stage_slots(self.n, self.radixes))
        have = set(self.entries)
        extra = sorted(have - expected)
        if extra:
            s, r = extra[0]
            raise CostTableError(
                f"entry (stage {s}, radix {r}) is out of range for n={self.n}: "
                f"{s} + log2({r}) > {self.n}"
            )
        missing = sorted(expected - have)
        if missing:
            gaps = ", ".join(f"({s}, {r})" for s, r in missing)
            raise CostTableError(f"cost table for n={self.n} is missing entries: {gaps}")
        for (s, r), cost in self.entries.items():
            if not math.isfinite(cost) or cost <= 0:
                raise CostTableError(f"cost for (stage {s}, radix {r}) must be positive, got {cost}")

    def __getitem__(self, key: tuple[int, int]) -> float:
        return self.entries[key]

    def __len__(self) -> int:
        return len(self.entries)

    def rows(self) -> list[tuple[int, int, float]]:
        return [(s, r, self.entries[(s, r)]) for s, r in stage_slots(self.n, self.radixes)]


@dataclass(frozen=True)
class BenchConfig:
    warmup_runs: int = 5
    measured_runs: int = 31
    aggregator: str = "median"
    batch_per_run: int = 256

    def __post_init__(self):
        if self.measured_runs < 3:
            raise ValueError("measured_runs must be >= 3")
        if self.batch_per_run < 1:
            raise ValueError("batch_per_run must be >= 1")
        if self.warmup_runs < 0:
            raise ValueError("warmup_runs must be >= 0")
        if self.aggregator not in ("median", "minimum"):
            raise ValueError(f"aggregator must be 'median' or 'minimum', got {self.aggregator!r}")


def benchmark_stages(n: int, config: BenchConfig | None = None, *,
                     seed: int = DEFAULT_SEED, label: str = "host",
                     radixes: Sequence[int] = RADIXES,
                     timer: Callable[[], int] = time.perf_counter_ns,
                     min_ticks: int = 100) -> CostTable:
    """Time every radix pass of a ``2**n``-point FFT on the host.

    Each timed run applies the pass to ``batch_per_run`` independent random
    buffers at once (fresh random data per experiment, seeded by ``seed``); the cost is the aggregated run time divided by the batch,
    in nanoseconds per pass.  Only the butterfly pass is timed, not the input
    permutation.  Raises :class:`BenchmarkError` if a run is shorter than
    ``min_ticks`` timer ticks.
    """
    config = config or BenchConfig()
    if not 4 <= n <= 14:
        raise ValueError(f"benchmark size must be 2**4 .. 2**14, got 2**{n}")
    size = 1 << n
    rng = np.random.default_rng(seed)
    table = twiddle_table(size)
    tick_ns = max(time.get_clock_info("perf_counter").resolution * 1e9, 1.0)
    aggregate = statistics.median if config.aggregator == "median" else min

    entries: dict[tuple[int, int], float] = {}
    for s, r in stage_slots(n, radixes):
        samples = []
        source = np.empty((config.batch_per_run, size), dtype=np.complex64)
        rng.standard_normal(dtype=np.float32, out=source.view(np.float32))
        buf = np.empty_like(source)
        for run in range(config.warmup_runs + config.measured_runs):
            # the pass is in place, so every run restarts from the same random input
            np.copyto(buf, source)
            t0 = timer()
            apply_radix_stage(buf, r, s, table)
            elapsed = timer() - t0
            if run >= config.warmup_runs:
                samples.append(elapsed)
        value = aggregate(samples)
        if value < min_ticks * tick_ns:
            raise BenchmarkError(
                f"stage {s} radix {r} ran in {value} ns, too close to the timer "
                f"resolution ({tick_ns:g} ns); increase batch_per_run"
            )
        entries[(s, r)] = value / config.batch_per_run
        log.debug("stage %d radix %d: %.1f ns", s, r, entries[(s, r)])

    metadata = {
        "label": label,
        "n": n,
        "source": "benchmarked",
        "warmup_runs": config.warmup_runs,
        "measured_runs": config.measured_runs,
        "aggregator": config.aggregator,
        "batch_per_run": config.batch_per_run,
        "seed": seed,
        "radixes": sorted(radixes),
        "experiments": len(entries),
        "units": "ns per pass",
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    return CostTable(n, entries, "benchmarked", label, tuple(sorted(radixes)), metadata)


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def save_cost_table(table: CostTable, path) -> Path:
    """Write ``stage,radix,cost`` CSV plus a JSON metadata sidecar."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["stage", "radix", "cost"])
        for s, r, cost in table.rows():
            writer.writerow([s, r, repr(float(cost)) if not float(cost).is_integer() else int(cost)])
    meta = {"label": table.label, "n": table.n, "source": table.source}
    meta.update({k: v for k, v in table.metadata.items() if k not in meta})
    with open(sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return path


def load_cost_table(path, n: int | None = None) -> CostTable:
    """Read a cost table CSV (and its sidecar, if present) and validate it.

    The stage count comes from ``n``, else the sidecar, else the radix-2
    column (which always spans every stage).
    """
    path = Path(path)
    entries: dict[tuple[int, int], float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["stage", "radix", "cost"]:
            raise CostTableError(f"{path}: expected header 'stage,radix,cost'")
        for lineno, row in enumerate(reader, start=2):
            try:
                key = (int(row["stage"]), int(row["radix"]))
                cost = float(row["cost"])
            except (TypeError, ValueError):
                raise CostTableError(f"{path}:{lineno}: malformed row {row}") from None
            if key in entries:
                raise CostTableError(f"{path}:{lineno}: duplicate entry {key}")
            if cost < 0:
                raise CostTableError(f"{path}:{lineno}: negative cost {cost} for {key}")
            entries[key] = cost

    meta: dict = {}
    side = sidecar_path(path)
    if side.exists():
        with open(side, encoding="utf-8") as fh:
            meta = json.load(fh)
    if n is None:
        n = meta.get("n")
    if n is None:
        radix2 = [s for s, r in entries if r == 2]
        if not radix2:
            raise CostTableError(f"{path}: cannot infer stage count without radix-2 rows")
        n = max(radix2) + 1
    radixes = tuple(sorted(set(meta.get("radixes", RADIXES)) | {r for _, r in entries}))
    for r in radixes:
        log2_exact(r)
    try:
        return CostTable(int(n), entries, "loaded", str(meta.get("label", path.stem)), radixes, meta)
    except CostTableError as exc:
        raise CostTableError(f"{path}: {exc}") from None


def fixture_path(name: str) -> Path:
    """Path of a bundled cost-table fixture such as ``ivybridge_1024.csv``."""
    ref = resources.files("radixplan") / "fixtures" / name
    path = Path(str(ref))
    if not path.exists():
        raise FileNotFoundError(f"no bundled fixture named {name!r}")
    return path
