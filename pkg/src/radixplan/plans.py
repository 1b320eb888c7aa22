"""Plan space: radix schedules as paths through a stage DAG.

Node ``s`` means "the first ``s`` logical stages are done".  An edge
``s -> s + log2(r)`` runs one radix-``r`` pass starting at stage ``s`` and is
weighted by the benchmarked cost of that pass.  Every source-to-sink path is a
valid plan, and the cheapest path is the best plan under the stage-cost
independence assumption.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from radixplan.kernels import RADIXES, log2_exact, validate_plan

MAX_ENUMERATION_STAGES = 14


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    radix: int
    weight: float


@dataclass(frozen=True)
class PlanGraph:
    n: int
    radixes: tuple[int, ...]
    edges: tuple[Edge, ...]
    _out: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        out: dict[int, list[Edge]] = {s: [] for s in range(self.n + 1)}
        for e in self.edges:
            out[e.src].append(e)
        for lst in out.values():
            lst.sort(key=lambda e: e.radix)
        self._out.update(out)

    @property
    def nodes(self) -> range:
        return range(self.n + 1)

    @property
    def source(self) -> int:
        return 0

    @property
    def sink(self) -> int:
        return self.n

    def out_edges(self, node: int) -> list[Edge]:
        return self._out[node]


@dataclass(frozen=True)
class PlanCost:
    plan: tuple[int, ...]
    total: float

    def to_json(self, n: int) -> str:
        return json.dumps({"n": n, "plan": list(self.plan), "total_cost": self.total})

    @classmethod
    def from_json(cls, text: str) -> "PlanCost":
        doc = json.loads(text)
        plan = validate_plan(doc["plan"], 2 ** int(doc["n"]))
        return cls(plan, float(doc["total_cost"]))


def _cost_lookup(costs) -> Mapping[tuple[int, int], float]:
    return getattr(costs, "entries", costs)


def build_graph(n: int, costs, radixes: Sequence[int] = RADIXES) -> PlanGraph:
    """Build the plan DAG for a ``2**n``-point FFT.

    ``costs`` is a :class:`~radixplan.costs.CostTable` or any mapping from
    ``(stage, radix)`` to a finite non-negative cost.
    """
    if n < 1:
        raise ValueError(f"need at least one stage, got n={n}")
    entries = _cost_lookup(costs)
    edges = []
    for r in sorted(radixes):
        width = log2_exact(r)
        for s in range(n - width + 1):
            try:
                w = float(entries[(s, r)])
            except KeyError:
                raise KeyError(f"missing cost entry for stage {s}, radix {r}") from None
            if not math.isfinite(w) or w < 0:
                raise ValueError(f"cost for stage {s}, radix {r} must be finite and >= 0, got {w}")
            edges.append(Edge(s, s + width, r, w))
    return PlanGraph(n, tuple(sorted(radixes)), tuple(edges))


def count_plans(n: int, radixes: Sequence[int] = RADIXES) -> int:
    """Number of distinct plans for ``n`` stages (compositions of n into the radix logs)."""
    if n < 0:
        return 0
    widths = [log2_exact(r) for r in radixes]
    ways = [1] + [0] * n
    for s in range(1, n + 1):
        ways[s] = sum(ways[s - w] for w in widths if w <= s)
    return ways[n]


def enumerate_plans(n: int, radixes: Sequence[int] = RADIXES) -> list[tuple[int, ...]]:
    """All plans for ``n`` stages in lexicographic order."""
    if n > MAX_ENUMERATION_STAGES:
        raise ValueError(f"enumeration too large: n={n} exceeds {MAX_ENUMERATION_STAGES}")
    if n < 1:
        raise ValueError(f"need at least one stage, got n={n}")
    radixes = sorted(radixes)
    plans: list[tuple[int, ...]] = []

    def walk(stage: int, prefix: tuple[int, ...]):
        if stage == n:
            plans.append(prefix)
            return
        for r in radixes:
            w = log2_exact(r)
            if stage + w <= n:
                walk(stage + w, prefix + (r,))

    walk(0, ())
    return plans


def plan_cost(plan: Sequence[int], costs) -> PlanCost:
    """Sum of stage-indexed costs along ``plan``."""
    entries = _cost_lookup(costs)
    stage = 0
    total = 0.0
    for r in plan:
        try:
            total += float(entries[(stage, r)])
        except KeyError:
            raise KeyError(f"missing cost entry for stage {stage}, radix {r}") from None
        stage += log2_exact(r)
    return PlanCost(tuple(plan), total)


def shortest_plan(graph: PlanGraph) -> PlanCost:
    """Dijkstra from stage 0 to stage n.

    Equal-cost paths are ordered by their radix sequence, so the result is the
    lexicographically smallest among the optimal plans.
    """
    best: dict[int, tuple[float, tuple[int, ...]]] = {}
    heap: list[tuple[float, tuple[int, ...], int]] = [(0.0, (), graph.source)]
    while heap:
        dist, path, node = heapq.heappop(heap)
        if node in best:
            continue
        best[node] = (dist, path)
        if node == graph.sink:
            break
        for e in graph.out_edges(node):
            if e.dst not in best:
                heapq.heappush(heap, (dist + e.weight, path + (e.radix,), e.dst))
    dist, path = best[graph.sink]
    return PlanCost(path, dist)


def count_optimal_plans(graph: PlanGraph, rel_tol: float = 1e-12) -> int:
    """How many source-to-sink paths reach the minimum total cost."""
    dist = [math.inf] * (graph.n + 1)
    ways = [0] * (graph.n + 1)
    dist[0], ways[0] = 0.0, 1
    for s in graph.nodes:
        for e in graph.out_edges(s):
            d = dist[s] + e.weight
            if math.isclose(d, dist[e.dst], rel_tol=rel_tol):
                ways[e.dst] += ways[s]
            elif d < dist[e.dst]:
                dist[e.dst], ways[e.dst] = d, ways[s]
    return ways[graph.n]

