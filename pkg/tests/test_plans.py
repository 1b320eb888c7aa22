import itertools
import json

import pytest

from radixplan.costs import stage_slots
from radixplan.plans import (PlanCost, build_graph, count_optimal_plans, count_plans,
                             enumerate_plans, plan_cost, shortest_plan)

FIG7_COUNTS = {4: 7, 5: 13, 6: 24, 7: 44, 8: 81, 9: 149, 11: 504, 12: 927, 13: 1705, 14: 3136}


def brute_force_plans(n):
    """Every radix sequence of any length whose logs sum to n."""
    found = []
    for length in range(1, n + 1):
        for combo in itertools.product((2, 4, 8), repeat=length):
            if sum(r.bit_length() - 1 for r in combo) == n:
                found.append(combo)
    return sorted(found)


def unit_costs(n):
    return {slot: 1.0 for slot in stage_slots(n)}


@pytest.mark.parametrize("n,edges", [(1, 1), (2, 3), (5, 12), (10, 27)])
def test_edge_count(n, edges):
    g = build_graph(n, unit_costs(n))
    assert len(g.edges) == edges == n + max(n - 1, 0) + max(n - 2, 0)


def test_graph_shape():
    g = build_graph(5, unit_costs(5))
    assert g.source == 0 and g.sink == 5
    assert all(e.dst > e.src for e in g.edges)
    assert {e.radix for e in g.out_edges(0)} == {2, 4, 8}
    assert g.out_edges(5) == []
    assert [e.radix for e in g.out_edges(4)] == [2]


def test_missing_entry_named():
    costs = unit_costs(5)
    del costs[(2, 8)]
    with pytest.raises(KeyError, match="stage 2, radix 8"):
        build_graph(5, costs)


def test_negative_weight_rejected():
    costs = unit_costs(3)
    costs[(0, 2)] = -1.0
    with pytest.raises(ValueError):
        build_graph(3, costs)


@pytest.mark.parametrize("n,count", sorted(FIG7_COUNTS.items()))
def test_count_matches_published_table(n, count):
    assert count_plans(n) == count


def test_count_1024_is_274_not_247():
    assert count_plans(10) == 274
    assert len(brute_force_plans(10)) == 274


def test_count_small():
    assert count_plans(1) == 1
    assert count_plans(0) == 1
    assert count_plans(-1) == 0


@pytest.mark.parametrize("n", range(1, 11))
def test_enumeration_equals_brute_force(n):
    assert enumerate_plans(n) == brute_force_plans(n)


@pytest.mark.parametrize("n", range(1, 15))
def test_count_equals_enumeration_length(n):
    assert len(enumerate_plans(n)) == count_plans(n)


def test_enumerate_small():
    assert enumerate_plans(2) == [(2, 2), (4,)]
    assert enumerate_plans(3) == [(2, 2, 2), (2, 4), (4, 2), (8,)]
    assert len(enumerate_plans(13)) == 1705


def test_enumeration_guard():
    with pytest.raises(ValueError, match="enumeration too large"):
        enumerate_plans(15)


def test_plan_cost_published_cells(ivybridge):
    assert plan_cost((8, 8, 8, 2), ivybridge).total == 4135 + 5988 + 7896 + 3913 == 21932
    assert plan_cost((2,) * 10, ivybridge).total == 27552
    assert plan_cost((4, 8, 8, 4), ivybridge).total == 3100 + 5520 + 7320 + 5030 == 20970


def test_plan_cost_haswell_cells(haswell):
    assert plan_cost((4, 8, 8, 4), haswell).total == 2813 + 5223 + 6930 + 4240 == 19206
    assert plan_cost((8, 8, 8, 2), haswell).total == 20770
    assert plan_cost((2,) * 10, haswell).total == 26072


def test_plan_cost_unit_is_length():
    for plan in enumerate_plans(7):
        assert plan_cost(plan, unit_costs(7)).total == len(plan)


def test_plan_cost_missing_entry():
    with pytest.raises(KeyError):
        plan_cost((8, 8), {(0, 8): 1.0})


@pytest.mark.parametrize("table", ["ivybridge", "haswell"])
def test_shortest_matches_exhaustive_search(request, table):
    costs = request.getfixturevalue(table)
    best = shortest_plan(build_graph(10, costs))
    exhaustive = min((plan_cost(p, costs).total, p) for p in enumerate_plans(10))
    assert (best.total, best.plan) == exhaustive


def test_shortest_on_published_tables(ivybridge, haswell):
    # stage-indexed cells give 8,8,4,4 as the cheapest path on both tables
    assert shortest_plan(build_graph(10, ivybridge)) == PlanCost((8, 8, 4, 4), 19785.0)
    assert shortest_plan(build_graph(10, haswell)) == PlanCost((8, 8, 4, 4), 18218.0)


def test_uniform_weights_prefer_fewest_passes():
    best = shortest_plan(build_graph(9, unit_costs(9)))
    assert best == PlanCost((8, 8, 8), 3.0)


def test_uniform_tie_break_is_lexicographic():
    g = build_graph(10, unit_costs(10))
    best = shortest_plan(g)
    optimal = [p for p in enumerate_plans(10) if len(p) == 4]
    assert best.plan == min(optimal) == (2, 8, 8, 8)
    assert count_optimal_plans(g) == len(optimal)


def test_zero_weights_allowed():
    costs = {slot: 0.0 for slot in stage_slots(4)}
    assert shortest_plan(build_graph(4, costs)) == PlanCost((2, 2, 2, 2), 0.0)


def test_plan_json_round_trip():
    pc = PlanCost((4, 8, 8, 4), 20970.0)
    doc = json.loads(pc.to_json(10))
    assert doc == {"n": 10, "plan": [4, 8, 8, 4], "total_cost": 20970.0}
    assert PlanCost.from_json(pc.to_json(10)) == pc


def test_custom_radix_set():
    g = build_graph(4, {slot: 1.0 for slot in stage_slots(4, (2, 4))}, radixes=(2, 4))
    assert len(g.edges) == 4 + 3
    assert shortest_plan(g) == PlanCost((4, 4), 2.0)
    assert count_plans(4, (2, 4)) == 5
