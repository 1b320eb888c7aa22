"""``radixplan`` command line: count -> bench -> plan -> verify -> ratio -> simulate.

Exit codes: 0 success, 1 domain error (bad plan, unreadable table, failed
check), 2 usage error.  With ``--json`` exactly one JSON document is written
to stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from radixplan import costs as cost_model
from radixplan import kernels, perf, pipeline, plans
from radixplan.signal_io import load_signal, save_signal

log = logging.getLogger("radixplan")

SEED_ENV = "RADIXPLAN_SEED"


class DomainError(Exception):
    pass


def _power_of_two(text: str) -> int:
    try:
        value = int(text)
        kernels.log2_exact(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a power of two") from None
    if value < 2:
        raise argparse.ArgumentTypeError("size must be >= 2")
    return value


def _fraction(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not 0 <= value <= 1:
        raise argparse.ArgumentTypeError(f"{value} is outside [0, 1]")
    return value


def _positive(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"{value} must be > 0")
    return value


def _plan_arg(text: str) -> tuple[int, ...]:
    try:
        return kernels.parse_plan(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _default_seed() -> int:
    env = os.environ.get(SEED_ENV)
    if env is None:
        return cost_model.DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise SystemExit(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _resolve_costs(path: str) -> Path:
    """Use ``path`` if it exists, else a bundled fixture with the same file name."""
    p = Path(path)
    if p.exists():
        return p
    if p.name in cost_model.BUNDLED_FIXTURES:
        return cost_model.fixture_path(p.name)
    raise DomainError(f"cost table not found: {path}")


class _Out:
    """Collects report lines, or a single JSON document in --json mode."""

    def __init__(self, as_json: bool):
        self.as_json = as_json
        self.lines: list[str] = []
        self.doc: dict = {}

    def line(self, text: str = "") -> None:
        self.lines.append(text)

    def flush(self) -> None:
        if self.as_json:
            print(json.dumps(self.doc, indent=2))
        else:
            print("\n".join(self.lines))


def cmd_count(args, out: _Out) -> int:
    n = kernels.log2_exact(args.size)
    count = plans.count_plans(n)
    budget = cost_model.experiment_budget(n)
    out.doc = {"size": args.size, "stages": n, "plans": count, "experiments": budget}
    out.line(f"plans: {count}, experiments: {budget}")
    return 0


def cmd_bench(args, out: _Out) -> int:
    n = kernels.log2_exact(args.size)
    config = cost_model.BenchConfig(args.warmup, args.runs, args.aggregator, args.batch)
    table = cost_model.benchmark_stages(n, config, seed=args.seed, label=args.label)
    try:
        cost_model.save_cost_table(table, args.out)
    except OSError as exc:
        raise DomainError(f"cannot write {args.out}: {exc.strerror or exc}") from None
    out.doc = {"out": str(args.out), "n": n, "entries": len(table),
               "experiments": table.metadata["experiments"],
               "costs": [{"stage": s, "radix": r, "cost": c} for s, r, c in table.rows()]}
    out.line(f"benchmarked {table.metadata['experiments']} stage experiments for N={args.size}")
    out.line(f"wrote {len(table)} rows to {args.out} (metadata in {cost_model.sidecar_path(args.out)})")
    return 0


def _speedups(plan_total: float, table, n: int) -> dict[str, float]:
    result = {}
    for base in dict.fromkeys([kernels.default_plan(2**n), (2,) * n]):
        result[kernels.format_plan(base)] = plans.plan_cost(base, table).total / plan_total
    return result


def cmd_plan(args, out: _Out) -> int:
    table = cost_model.load_cost_table(_resolve_costs(args.costs))
    graph = plans.build_graph(table.n, table, table.radixes)
    best = plans.shortest_plan(graph)
    ties = plans.count_optimal_plans(graph)
    out.doc = json.loads(best.to_json(table.n))
    out.doc.update({"label": table.label, "optimal_plans": ties,
                    "speedups": _speedups(best.total, table, table.n)})
    out.line(f"cost table: {table.label} (N={2 ** table.n}, {len(table)} entries)")
    out.line(f"plan: {kernels.format_plan(best.plan)}")
    out.line(f"total cost: {best.total:g}")
    if ties > 1:
        out.line(f"ties: {ties} plans share the minimum; lexicographically smallest radix sequence chosen")
    for base, ratio in out.doc["speedups"].items():
        out.line(f"speedup vs {base}: {ratio:.3f}")
    if args.candidate:
        cand = plans.plan_cost(kernels.validate_plan(args.candidate, 2**table.n), table)
        speedups = _speedups(cand.total, table, table.n)
        out.doc["candidate"] = {"plan": list(cand.plan), "total_cost": cand.total,
                                "gap_to_optimum": cand.total / best.total - 1.0,
                                "speedups": speedups}
        out.line(f"candidate {kernels.format_plan(cand.plan)}: cost {cand.total:g} "
                 f"({100 * (cand.total / best.total - 1):+.1f}% vs optimum)")
        for base, ratio in speedups.items():
            out.line(f"  speedup vs {base}: {ratio:.3f}")
    return 0


def cmd_verify(args, out: _Out) -> int:
    n = kernels.log2_exact(args.size)
    if args.plan is not None:
        candidates = [kernels.validate_plan(args.plan, args.size)]
    elif n <= plans.MAX_ENUMERATION_STAGES:
        candidates = plans.enumerate_plans(n)
    else:
        candidates = [kernels.default_plan(args.size)]
    tol = args.tol if args.tol is not None else kernels.default_tolerance(args.size)
    rng = np.random.default_rng(args.seed)
    shape = (args.seeds, args.size)
    x = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)).astype(np.complex64)
    expected = kernels.dft_oracle(x)
    worst: dict[str, float] = {}
    for plan in candidates:
        got = kernels.run_plan(x, plan)
        worst[kernels.format_plan(plan)] = max(
            kernels.relative_l2_error(got[i], expected[i]) for i in range(args.seeds))
    max_err = max(worst.values())
    ok = max_err <= tol
    out.doc = {"size": args.size, "seeds": args.seeds, "tolerance": tol, "plans": len(candidates),
               "max_error": max_err, "passed": ok, "per_plan": worst}
    out.line(f"N={args.size}: {len(candidates)} plan(s) x {args.seeds} seed(s), tolerance {tol:g}")
    if len(candidates) <= 8:
        for name, err in worst.items():
            out.line(f"  {name}: max relative L2 error {err:.3e}")
    out.line(f"max relative L2 error: {max_err:.3e} -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_ratio(args, out: _Out) -> int:
    report = perf.ratio_report(args.p_cpu, args.p_gpu, batch=args.batch,
                               fft_size=args.fft_size, load_cap=args.load_cap)
    out.doc = report
    out.line(f"cpu ratio: {100 * report['ratio']:.1f}%")
    if args.load_cap < 1:
        out.line(f"(cpu capped at {100 * args.load_cap:g}% load)")
    out.line(f"split: {report['s_cpu']} cpu / {report['s_gpu']} gpu of {args.batch}")
    out.line(f"predicted makespan: {report['predicted_makespan'] * 1e3:.4f} ms")
    return 0


def _pass_plan(explicit, table, size):
    if explicit is not None:
        return kernels.validate_plan(explicit, size)
    if table is not None and table.n == kernels.log2_exact(size):
        return plans.shortest_plan(plans.build_graph(table.n, table, table.radixes)).plan
    return kernels.default_plan(size)


def cmd_simulate(args, out: _Out) -> int:
    table = None
    if args.costs:
        table = cost_model.load_cost_table(_resolve_costs(args.costs))
        if table.n not in (kernels.log2_exact(args.rows), kernels.log2_exact(args.cols)):
            raise DomainError(f"cost table is for N={2 ** table.n}, grid is {args.rows}x{args.cols}")
    spec = pipeline.PipelineSpec(args.rows, args.cols,
                                 _pass_plan(args.plan1, table, args.cols),
                                 _pass_plan(args.plan2, table, args.rows),
                                 args.ratio, args.block)
    if args.input:
        grid = load_signal(args.input, (args.rows, args.cols))
    else:
        rng = np.random.default_rng(args.seed)
        shape = (args.rows, args.cols)
        grid = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)).astype(np.complex64)
    result = pipeline.run_pipeline(grid, spec)
    result.trace.check()

    tasks = len(result.trace.task_ids())
    flops = args.rows * perf.fft_flops(args.cols) + args.cols * perf.fft_flops(args.rows)
    gflops = flops / result.makespan / 1e9 if result.makespan > 0 else 0.0
    util = pipeline.pool_utilization(result.trace, result.makespan)
    doc = {
        "rows": args.rows, "cols": args.cols, "ratio": args.ratio,
        "plan_pass1": list(spec.plan_pass1), "plan_pass2": list(spec.plan_pass2),
        "tasks": tasks, "trace_rows": len(result.trace.events),
        "makespan": result.makespan, "achieved_gflops": gflops,
        "tasks_per_pool": {p: len(result.trace.pool_tasks(p)) for p in pipeline.POOLS},
        "utilization": util,
    }
    if args.p_cpu and args.p_gpu:
        profile = perf.MachineProfile(args.p_cpu, args.p_gpu, args.bandwidth)
        doc["predicted_makespan"] = pipeline.predict_makespan(spec, profile)
    if args.check:
        err = kernels.relative_l2_error(result.output, pipeline.reference_pipeline(grid))
        doc["oracle_error"] = err
    if args.trace:
        result.trace.to_csv(args.trace)
        doc["trace"] = str(args.trace)
    if args.output:
        save_signal(args.output, result.output)
        doc["output"] = str(args.output)
    out.doc = doc

    out.line(f"grid {args.rows}x{args.cols}, plans {kernels.format_plan(spec.plan_pass1)} / "
             f"{kernels.format_plan(spec.plan_pass2)}, cpu ratio {args.ratio:g}")
    out.line(f"tasks: {tasks} ({doc['tasks_per_pool']['cpu']} cpu, {doc['tasks_per_pool']['gpu']} gpu)")
    out.line(f"makespan: {result.makespan * 1e3:.3f} ms, achieved {gflops:.2f} GFlops")
    out.line("utilization: " + ", ".join(f"{p} {100 * u:.1f}%" for p, u in util.items()))
    if "predicted_makespan" in doc:
        out.line(f"predicted makespan: {doc['predicted_makespan'] * 1e3:.3f} ms")
    if "oracle_error" in doc:
        out.line(f"oracle relative L2 error: {doc['oracle_error']:.3e}")
    if args.trace:
        out.line(f"trace: {len(result.trace.events)} rows written to {args.trace}")
    if args.check and doc["oracle_error"] > 1e-3:
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit one JSON document")
    common.add_argument("--seed", type=int, default=None,
                        help=f"random seed (default: ${SEED_ENV} or {cost_model.DEFAULT_SEED})")

    parser = argparse.ArgumentParser(prog="radixplan", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", parents=[common], help="count plans and stage experiments")
    p.add_argument("--size", type=_power_of_two, required=True)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("bench", parents=[common], help="benchmark radix passes into a cost table")
    p.add_argument("--size", type=_power_of_two, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--warmup", type=int, default=5)
    p.add_argument("--runs", type=int, default=31)
    p.add_argument("--batch", type=int, default=256, help="passes timed together per run")
    p.add_argument("--aggregator", choices=("median", "minimum"), default="median")
    p.add_argument("--label", default="host")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("plan", parents=[common], help="shortest-path plan for a cost table")
    p.add_argument("--costs", required=True)
    p.add_argument("--candidate", type=_plan_arg, help="also report this plan, e.g. 4,8,8,4")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("verify", parents=[common], help="check plans against the direct DFT")
    p.add_argument("--size", type=_power_of_two, required=True)
    p.add_argument("--plan", type=_plan_arg)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--tol", type=_positive)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("ratio", parents=[common], help="CPU/GPU batch split")
    p.add_argument("--p-cpu", type=_positive, required=True)
    p.add_argument("--p-gpu", type=_positive, required=True)
    p.add_argument("--load-cap", type=_fraction, default=1.0)
    p.add_argument("--batch", type=int, default=1024)
    p.add_argument("--fft-size", type=_power_of_two, default=1024)
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("simulate", parents=[common], help="run the FFT-transpose-FFT pipeline")
    p.add_argument("--rows", type=_power_of_two, default=1024)
    p.add_argument("--cols", type=_power_of_two, default=1024)
    p.add_argument("--ratio", type=_fraction, default=0.5)
    p.add_argument("--costs", help="pick per-pass plans by shortest path over this table")
    p.add_argument("--plan1", type=_plan_arg)
    p.add_argument("--plan2", type=_plan_arg)
    p.add_argument("--block", type=int, default=32, help="transpose tile size")
    p.add_argument("--input", help="row-major grid in the signal binary format")
    p.add_argument("--output")
    p.add_argument("--trace", help="write task trace CSV here")
    p.add_argument("--p-cpu", type=_positive)
    p.add_argument("--p-gpu", type=_positive)
    p.add_argument("--bandwidth", type=_positive, help="GB/s, for the transpose term")
    p.add_argument("--check", action="store_true", help="compare with the direct-DFT pipeline")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is None:
        args.seed = _default_seed()
    if getattr(args, "seeds", 1) < 1 or getattr(args, "batch", 1) < 0:
        parser.print_usage(sys.stderr)
        print("radixplan: error: counts must be positive", file=sys.stderr)
        return 2
    if args.command == "bench" and not 16 <= args.size <= 16384:
        print("radixplan: error: bench --size must be between 16 and 16384", file=sys.stderr)
        return 2
    out = _Out(args.json)
    try:
        code = args.func(args, out)
    except (DomainError, ValueError, KeyError, OSError, cost_model.BenchmarkError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"radixplan: error: {msg}", file=sys.stderr)
        return 1
    out.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
