from __future__ import annotations

from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from gerrygrid.districting import DistrictingPlan, is_legal
from gerrygrid.enumeration import PlanSet, VoterDistribution, enumerate_plans, random_distribution
from gerrygrid.errors import InitializationError, InvalidArgumentError
from gerrygrid.evaluator import (
    ChainState,
    build_evaluator,
    chain_step,
    empirical_plan_frequencies,
    evaluate,
    new_chain,
    run_chain,
    total_variation,
)
from gerrygrid.grid_graph import DualGraph, grid_graph
from gerrygrid.metrics import rep_stats, total_rep


def test_exact_backend_matches_rep_stats(plans5: PlanSet, sample_grids: dict[str, VoterDistribution]) -> None:
    evaluator = build_evaluator("exact", plans=plans5)
    assert round(evaluate(evaluator, sample_grids["best10"]), 3) == 2.316
    assert evaluator(VoterDistribution(0, 25)) == 0
    assert evaluator.calls == 2


def test_exact_backend_equals_plan_average(plans4: PlanSet) -> None:
    evaluator = build_evaluator("exact", plans=plans4)
    rng = np.random.default_rng(0)
    for _ in range(10):
        dist = random_distribution(16, 8, rng)
        average = sum((total_rep(dist, plan) for plan in plans4), Fraction(0)) / len(plans4)
        assert abs(evaluator(dist) - float(average)) < 1e-12


def test_full_pass_sampling_equals_exact(plans4: PlanSet) -> None:
    exact = build_evaluator("exact", plans=plans4)
    sampled = build_evaluator("sampled", plans=plans4, sample_size=1, full_pass=True, seed=3)
    rng = np.random.default_rng(1)
    for _ in range(10):
        dist = random_distribution(16, 7, rng)
        assert abs(sampled(dist) - exact(dist)) < 1e-12


def test_sampled_backend_is_seeded(plans4: PlanSet) -> None:
    dist = random_distribution(16, 8, np.random.default_rng(2))
    first = build_evaluator("sampled", plans=plans4, sample_size=50, seed=9)
    second = build_evaluator("sampled", plans=plans4, sample_size=50, seed=9)
    assert first(dist) == second(dist)


def test_sampled_error_shrinks_with_sample_size(plans4: PlanSet) -> None:
    dist = random_distribution(16, 8, np.random.default_rng(4))
    exact = build_evaluator("exact", plans=plans4)(dist)
    spreads = []
    for size in (25, 400):
        estimates = [build_evaluator("sampled", plans=plans4, sample_size=size, seed=s)(dist) for s in range(40)]
        spreads.append(float(np.mean((np.array(estimates) - exact) ** 2)))
    assert spreads[1] < spreads[0]


def test_sampled_estimate_is_close_on_five_by_five(plans5: PlanSet) -> None:
    exact = build_evaluator("exact", plans=plans5)
    sampled = build_evaluator("sampled", plans=plans5, sample_size=10_000, seed=11)
    rng = np.random.default_rng(12)
    for _ in range(5):
        dist = random_distribution(25, 10, rng)
        assert abs(sampled(dist) - exact(dist)) < 0.05


def test_sampled_backend_validation(plans4: PlanSet) -> None:
    with pytest.raises(InvalidArgumentError):
        build_evaluator("sampled", plans=plans4, sample_size=0)
    with pytest.raises(InvalidArgumentError):
        build_evaluator("exact")
    with pytest.raises(InvalidArgumentError):
        build_evaluator("metropolis", plans=plans4)


def test_eval_rejects_length_mismatch(plans4: PlanSet) -> None:
    with pytest.raises(InvalidArgumentError):
        build_evaluator("exact", plans=plans4)(VoterDistribution(1, 25))


def test_chain_on_two_by_two_stays_in_legal_set() -> None:
    g = grid_graph(2, 2)
    legal = {DistrictingPlan.from_string("0011"), DistrictingPlan.from_string("0101")}
    state = new_chain(g, 2, seed=0, debug=True)
    assert state.plan in legal
    for current in run_chain(state, 200):
        assert current.plan in legal
    assert 0 < state.accepted < state.step == 200


def test_chain_rejection_leaves_state_unchanged() -> None:
    g = grid_graph(2, 2)
    state = ChainState(g, [0, 0, 1, 1], 2, np.random.default_rng(0))
    seen_rejection = False
    for _ in range(100):
        before = list(state.assignment)
        accepted = state.accepted
        chain_step(state)
        if state.accepted == accepted:
            seen_rejection = True
            assert state.assignment == before
    assert seen_rejection


def test_chain_states_are_enumerated_plans(plans3: PlanSet) -> None:
    g = grid_graph(3, 3)
    known = set(plans3.plans)
    state = new_chain(g, 3, seed=5, debug=True)
    for current in run_chain(state, 500):
        plan = current.plan
        assert plan in known
        assert sorted(plan.assignment.count(d) for d in range(3)) == [3, 3, 3]


def test_chain_frequencies_on_two_by_two_are_uniform() -> None:
    counts = empirical_plan_frequencies(grid_graph(2, 2), 2, steps=4000, seed=1)
    total = sum(counts.values())
    observed = {plan: count / total for plan, count in counts.items()}
    uniform = {plan: 0.5 for plan in enumerate_plans(2)}
    assert total_variation(observed, uniform) < 0.05


@pytest.mark.slow
def test_chain_frequencies_on_four_by_four_are_uniform(plans4: PlanSet) -> None:
    counts = empirical_plan_frequencies(grid_graph(4, 4), 4, steps=1_000_000, seed=2, burn_in=1000)
    total = sum(counts.values())
    observed = {plan: count / total for plan, count in counts.items()}
    uniform = {plan: 1 / len(plans4) for plan in plans4}
    assert set(observed) <= set(uniform)
    assert total_variation(observed, uniform) < 0.05


@pytest.mark.slow
def test_chain_evaluator_tracks_exact(plans4: PlanSet) -> None:
    exact = build_evaluator("exact", plans=plans4)
    chain = build_evaluator("chain", graph=grid_graph(4, 4), n_districts=4, steps=200_000, burn_in=1000, thinning=10, seed=3)
    rng = np.random.default_rng(9)
    for _ in range(5):
        dist = random_distribution(16, 8, rng)
        assert abs(chain(dist) - exact(dist)) < 0.05


def test_chain_evaluator_is_seeded() -> None:
    g = grid_graph(3, 3)
    dist = VoterDistribution.from_grid("**.\n*..\n...")
    first = build_evaluator("chain", graph=g, n_districts=3, steps=300, burn_in=10, thinning=3, seed=4)
    second = build_evaluator("chain", graph=g, n_districts=3, steps=300, burn_in=10, thinning=3, seed=4)
    assert first(dist) == second(dist)
    assert 0.0 <= first.backend.acceptance_rate <= 1.0


def test_chain_initialisation_failures() -> None:
    landlocked = DualGraph.from_edges(4, [(0, 1), (1, 2), (2, 3)], [0, 1])
    with pytest.raises(InitializationError):
        new_chain(landlocked, 2, seed=0, attempts=5)
    with pytest.raises(InitializationError):
        new_chain(grid_graph(3, 3), 2, seed=0)


def test_random_growth_finds_legal_plan(example_graph: DualGraph) -> None:
    state = new_chain(example_graph, 4, seed=6)
    assert is_legal(example_graph, state.plan)


def test_total_variation() -> None:
    assert total_variation({"a": 1.0}, {"a": 1.0}) == 0
    assert total_variation({"a": 1.0}, {"b": 1.0}) == 1
    assert total_variation({"a": 0.75, "b": 0.25}, {"a": 0.5, "b": 0.5}) == pytest.approx(0.25)


def test_rep_stats_and_exact_agree_on_chain_plans(plans3: PlanSet) -> None:
    state = new_chain(grid_graph(3, 3), 3, seed=8)
    plans = Counter(current.plan for current in run_chain(state, 100))
    dist = VoterDistribution.from_grid("***\n...\n...")
    for plan in plans:
        assert total_rep(dist, plan) <= rep_stats(dist, plans3).max
