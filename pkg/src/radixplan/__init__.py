"""Mixed-radix FFT planning, execution and batch-split modelling."""

from radixplan.costs import (BenchConfig, CostTable, benchmark_stages, experiment_budget,
                             fixture_path, load_cost_table, save_cost_table)
from radixplan.kernels import (FORWARD, INVERSE, PlanError, TwiddleTable, apply_radix_stage,
                               dft_oracle, digit_reversal, large_fft_fourstep, run_plan,
                               twiddle_table)
from radixplan.perf import (MachineProfile, SplitDecision, achieved_gflops, constrained_cpu_ratio,
                            gflops_per_watt, max_throughput, optimal_cpu_ratio, split_batch)
from radixplan.pipeline import PipelineSpec, TaskTrace, blocked_transpose, predict_makespan, run_pipeline
from radixplan.plans import (PlanCost, PlanGraph, build_graph, count_plans, enumerate_plans,
                             plan_cost, shortest_plan)

__version__ = "0.1.0"
