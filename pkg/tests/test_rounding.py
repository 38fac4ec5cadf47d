import random

import pytest

from typesched.errors import ForestInconsistent, Infeasible
from typesched.makespan import build_rounding_problem, make_scaled_instance, profile_from_schedule
from typesched.model import GeneratorSpec, generate_instance
from typesched.oracle import exact_solve
from typesched.rationals import ONE, ZERO, rat
from typesched.rounding import (
    JobRoutes,
    MergeNode,
    RoundingEngine,
    RoundingOutcome,
    RoundingProblem,
    RoundingStats,
    SlotInfo,
    untangle,
)


def simple_problem(jobs, slots, capacities, small_caps=None, budgets=None, klass_of=None):
    return RoundingProblem(
        dims=1,
        jobs=jobs,
        slots=slots,
        capacities=capacities,
        small_caps=small_caps or {m: rat(1, 2) for m in capacities},
        type_budgets=budgets or {},
        job_class=klass_of or (lambda j, t: "q"),
        leaf_raw_cost=lambda j, t: rat(1),
    )


def test_already_integral_no_reductions():
    problem = simple_problem(
        jobs={0: JobRoutes({(0, 0): (rat(1, 4),)}, set())},
        slots={},
        capacities={(0, 0): (rat(1),)},
    )
    outcome = RoundingEngine(problem).run()
    assert outcome.machine_assign == {0: (0, 0)}
    assert outcome.stats.iterations == 0
    assert not outcome.forest


def test_single_large_job_forced_into_slot():
    slots = {0: SlotInfo(0, (0, 0), "q", (rat(1),))}
    problem = simple_problem(
        jobs={0: JobRoutes({}, {0})},
        slots=slots,
        capacities={(0, 0): (rat(1),)},
    )
    outcome = RoundingEngine(problem).run()
    assert outcome.slot_assign == {0: 0}


def test_first_lp_infeasible_signals_wrong_guess():
    problem = simple_problem(
        jobs={0: JobRoutes({}, set())},  # no routes at all
        slots={},
        capacities={},
    )
    with pytest.raises(Infeasible):
        RoundingEngine(problem).run()


def test_merge_equal_costs_yields_same_cost_artificial():
    # white-box check of the convex-combination construction
    problem = simple_problem(
        jobs={
            0: JobRoutes({(0, 0): (rat(1, 4),)}, {0}),
            1: JobRoutes({(0, 0): (rat(1, 4),)}, {0}),
        },
        slots={0: SlotInfo(0, (0, 1), "q", (rat(1),))},
        capacities={(0, 0): (rat(1),), (0, 1): (rat(1),)},
    )
    engine = RoundingEngine(problem)

    class FakeSol:
        values = {
            "m|0|0|0": rat(1, 2),
            "s|0|0": rat(1, 2),
            "m|1|0|0": rat(1, 2),
            "s|1|0": rat(1, 2),
        }

    engine._merge(0, 1, 0, FakeSol())
    assert "a0" in engine.live
    art = engine.live["a0"]
    assert art.machine_costs[(0, 0)] == (rat(1, 4),)  # convex combination of equals
    assert art.slots == set()
    node = engine.forest["a0"]
    assert node.machine_weights[(0, 0)] == (rat(1, 2), rat(1, 2))


def test_merge_one_sided_route_inherits_cost():
    problem = simple_problem(
        jobs={
            0: JobRoutes({(0, 0): (rat(1, 8),)}, {0}),
            1: JobRoutes({(0, 1): (rat(1, 3),)}, {0}),
        },
        slots={0: SlotInfo(0, (1, 0), "q", (rat(1),))},
        capacities={(0, 0): (rat(1),), (0, 1): (rat(1),), (1, 0): (rat(1),)},
    )
    engine = RoundingEngine(problem)

    class FakeSol:
        values = {
            "m|0|0|0": rat(1, 2),
            "s|0|0": rat(1, 2),
            "m|1|0|1": rat(1, 2),
            "s|1|0": rat(1, 2),
        }

    engine._merge(0, 1, 0, FakeSol())
    art = engine.live["a0"]
    assert art.machine_costs[(0, 0)] == (rat(1, 8),)
    assert art.machine_costs[(0, 1)] == (rat(1, 3),)
    assert engine.forest["a0"].machine_weights[(0, 0)] == (ONE, ZERO)


def build_nested_forest_outcome(problem, foreign_slot=5):
    """Nested two-level tree: 5 leaves, 4 disposed slots, root in a foreign slot.

    merges: a0=(0,1)@s0, a1=(a0,2)@s1, a2=(3,4)@s2, a3=(a1,a2)@s3.
    """
    forest = {
        "a0": MergeNode("a0", 0, 1, 0, {}, {}),
        "a1": MergeNode("a1", "a0", 2, 1, {}, {}),
        "a2": MergeNode("a2", 3, 4, 2, {}, {}),
        "a3": MergeNode("a3", "a1", "a2", 3, {}, {}),
    }
    return RoundingOutcome(
        slot_assign={foreign_slot: "a3"},
        machine_assign={},
        huge_assign={},
        improper={},
        forest=forest,
        committed={m: [ZERO] for m in problem.capacities},
        committed_real={m: [ZERO] for m in problem.capacities},
        art_on_machine={},
        art_costs={},
        stats=RoundingStats(),
    )


@pytest.mark.parametrize("withheld", [0, 1, 2, 3, 4])
def test_nested_forest_untangles_for_every_withheld_leaf(withheld):
    # every leaf/slot pair is compatible; raw costs steer the top-level pick
    slots = {s: SlotInfo(s, (0, 0), "q", (rat(1),)) for s in range(6)}
    jobs = {j: JobRoutes({}, set(range(6))) for j in range(5)}
    problem = RoundingProblem(
        dims=1,
        jobs=jobs,
        slots=slots,
        capacities={(0, 0): (rat(10),)},
        small_caps={(0, 0): rat(1, 2)},
        job_class=lambda j, t: "q",
        leaf_raw_cost=lambda j, t: rat(100 if j == withheld else 5 - j),
    )
    outcome = build_nested_forest_outcome(problem)
    final = untangle(problem, outcome)
    # the withheld leaf lands in the foreign slot, the rest fill s0..s3
    assert final.slot_assign[5] == withheld
    assert sorted(final.slot_assign) == [0, 1, 2, 3, 5]
    assert sorted(final.slot_assign.values()) == [0, 1, 2, 3, 4]


def test_forest_rejects_incompatible_leaves():
    slots = {s: SlotInfo(s, (0, 0), "q", (rat(1),)) for s in range(6)}
    jobs = {j: JobRoutes({}, set(range(6))) for j in range(5)}
    problem = RoundingProblem(
        dims=1,
        jobs=jobs,
        slots=slots,
        capacities={(0, 0): (rat(10),)},
        small_caps={(0, 0): rat(1, 2)},
        job_class=lambda j, t: "other",  # nothing fits anywhere
        leaf_raw_cost=lambda j, t: rat(1),
    )
    outcome = build_nested_forest_outcome(problem)
    with pytest.raises(ForestInconsistent):
        untangle(problem, outcome)


def test_untangle_without_artificials_is_identity():
    problem = simple_problem(
        jobs={0: JobRoutes({(0, 0): (rat(1, 4),)}, set())},
        slots={},
        capacities={(0, 0): (rat(1),)},
    )
    outcome = RoundingEngine(problem).run()
    final = untangle(problem, outcome)
    assert final.machine_assign == {0: (0, 0)}
    assert final.final_loads[(0, 0)] == [rat(1, 4)]


def test_improper_case_semantics_whitebox():
    # drive case (c) directly: two fractional huge variables on type 0 land
    # together in the improper lineup and the budget row dies
    cost = rat(3)
    problem = RoundingProblem(
        dims=1,
        jobs={
            0: JobRoutes({}, set(), {0: (cost, cost ** 2)}),
            1: JobRoutes({}, set(), {0: (cost, cost ** 2)}),
        },
        slots={},
        capacities={},
        small_caps={},
        type_budgets={0: 2},
        job_class=lambda j, t: None,
        leaf_raw_cost=lambda j, t: rat(1),
    )
    engine = RoundingEngine(problem)

    class FakeSol:
        values = {"h|0|0": rat(1, 2), "h|1|0": rat(1, 2)}
        objective_value = rat(9)

    engine._apply_case(FakeSol(), {})
    assert engine.improper == {0: [0, 1]}
    assert not engine.live
    assert engine.budget_live[0] is False
    assert engine.stats.case_improper == 1


def test_integral_huge_routes_consume_budget():
    cost = rat(3)
    problem = RoundingProblem(
        dims=1,
        jobs={
            0: JobRoutes({}, set(), {0: (cost, cost ** 2)}),
            1: JobRoutes({}, set(), {0: (cost, cost ** 2)}),
        },
        slots={},
        capacities={},
        small_caps={},
        type_budgets={0: 2},
        job_class=lambda j, t: None,
        leaf_raw_cost=lambda j, t: rat(1),
    )
    outcome = RoundingEngine(problem).run()
    final = untangle(problem, outcome)
    assert final.huge_assign == {0: 0, 1: 0}
    assert final.improper == {}
    # monotonicity bookkeeping: committed charges appear in the objective trace
    assert outcome.stats.lp_objectives[0] == 2 * cost ** 2


def test_rounded_loads_within_two_d_eps_on_sampled_decisions():
    rng = random.Random(23)
    checked = 0
    for trial in range(12):
        spec = GeneratorSpec(
            num_jobs=rng.randint(3, 6),
            dims=rng.choice([1, 2]),
            machine_counts=(rng.randint(1, 2), rng.randint(1, 2)),
            cost_min=1,
            cost_max=10,
        )
        inst = generate_instance(spec, 700 + trial)
        opt = exact_solve(inst)
        eps = rat(1, 16)
        scaled = make_scaled_instance(inst, opt.optimum, eps)
        profile = profile_from_schedule(scaled, opt.witness)
        problem, system = build_rounding_problem(scaled, profile)
        outcome = RoundingEngine(problem).run()
        slack = 2 * inst.dims * eps
        for mk, committed in outcome.committed.items():
            for d in range(inst.dims):
                assert committed[d] <= rat(system.rem[mk][d]) + slack
        final = untangle(problem, outcome)
        slack3 = 3 * inst.dims * eps
        for mk, loads in final.final_loads.items():
            for d in range(inst.dims):
                assert loads[d] <= rat(system.rem[mk][d]) + slack3
        checked += 1
        assert outcome.stats.counting_checks > 0
    assert checked == 12


def test_art_lp_untangles_machine_committed_artificial():
    # artificial a0 = merge(job0, job1) sits in machine M's remaining space;
    # untangling must put one leaf back on M and the other into the disposed slot
    M = (0, 0)
    c0, c1 = (rat(1, 4),), (rat(1, 3),)
    problem = RoundingProblem(
        dims=1,
        jobs={
            0: JobRoutes({M: c0}, {0}),
            1: JobRoutes({M: c1}, {0}),
        },
        slots={0: SlotInfo(0, (1, 0), "q", (rat(1),))},
        capacities={M: (rat(1, 2),)},
        small_caps={M: rat(1, 2)},
        job_class=lambda j, t: "q" if t == 1 else None,
        leaf_raw_cost=lambda j, t: rat(j + 1),
    )
    w = (rat(1, 2), rat(1, 2))
    combo = (w[0] * c0[0] + w[1] * c1[0],)
    outcome = RoundingOutcome(
        slot_assign={},
        machine_assign={},
        huge_assign={},
        improper={},
        forest={"a0": MergeNode("a0", 0, 1, 0, {M: w}, {})},
        committed={M: [combo[0]]},
        committed_real={M: [ZERO]},
        art_on_machine={M: ["a0"]},
        art_costs={("a0", M): combo},
        stats=RoundingStats(),
    )
    final = untangle(problem, outcome)
    assert outcome.stats.art_lp_solves == 1
    # exactly one leaf stays on the machine, the other occupies the slot
    assert len(final.machine_assign) == 1 and len(final.slot_assign) == 1
    (rep, mk), = final.machine_assign.items()
    (slot, occupant), = final.slot_assign.items()
    assert mk == M and slot == 0
    assert {rep, occupant} == {0, 1}
    # untangling bound: final load within cap + 3 * smallcap
    assert final.final_loads[M][0] <= rat(1, 2) + 3 * rat(1, 2)


def test_art_lp_seed_mismatch_is_detected():
    # corrupting the recorded weights must trip the decomposition assert
    M = (0, 0)
    problem = RoundingProblem(
        dims=1,
        jobs={
            0: JobRoutes({M: (rat(1, 4),)}, {0}),
            1: JobRoutes({M: (rat(1, 3),)}, {0}),
        },
        slots={0: SlotInfo(0, (1, 0), "q", (rat(1),))},
        capacities={M: (rat(1, 2),)},
        small_caps={M: rat(1, 2)},
        job_class=lambda j, t: "q" if t == 1 else None,
        leaf_raw_cost=lambda j, t: rat(1),
    )
    outcome = RoundingOutcome(
        slot_assign={},
        machine_assign={},
        huge_assign={},
        improper={},
        forest={"a0": MergeNode("a0", 0, 1, 0, {M: (rat(1), ZERO)}, {})},
        committed={M: [rat(7, 24)]},
        committed_real={M: [ZERO]},
        art_on_machine={M: ["a0"]},
        art_costs={("a0", M): (rat(7, 24),)},  # combo of (1/2,1/2), weights say (1,0)
        stats=RoundingStats(),
    )
    with pytest.raises(AssertionError):
        untangle(problem, outcome)


from hypothesis import given, settings, strategies as st

from typesched.errors import Infeasible as _Infeasible


@st.composite
def slot_problems(draw):
    """Random tiny slot systems; jobs route to machines, slots, or both."""
    n_machines = draw(st.integers(1, 3))
    n_slots = draw(st.integers(0, 3))
    n_jobs = draw(st.integers(1, 5))
    machines = {(0, k): (rat(draw(st.integers(2, 12)), 4),) for k in range(n_machines)}
    slots = {
        s: SlotInfo(s, (1, s), draw(st.sampled_from(["a", "b"])), (rat(1),))
        for s in range(n_slots)
    }
    jobs = {}
    klass_of = {}
    for j in range(n_jobs):
        small = draw(st.booleans())
        routes = JobRoutes({}, set())
        if small or not slots:
            for k in range(n_machines):
                if draw(st.booleans()) or k == 0:
                    routes.machine_costs[(0, k)] = (rat(draw(st.integers(1, 4)), 8),)
        else:
            klass_of[j] = draw(st.sampled_from(["a", "b"]))
            routes.slots = {s for s in slots if slots[s].klass == klass_of[j]}
        jobs[j] = routes
    return RoundingProblem(
        dims=1,
        jobs=jobs,
        slots=slots,
        capacities=machines,
        small_caps={mk: rat(1, 2) for mk in machines},
        job_class=lambda j, t, k=klass_of: k.get(j) if t == 1 else None,
        leaf_raw_cost=lambda j, t: rat(j + 1),
    )


@settings(max_examples=120, deadline=None)
@given(slot_problems())
def test_engine_places_every_job_or_reports_infeasible(problem):
    try:
        outcome = RoundingEngine(problem).run()
    except _Infeasible:
        return  # wrong-guess signal is a legitimate outcome
    final = untangle(problem, outcome)
    placed = set(final.machine_assign)
    for s, j in final.slot_assign.items():
        assert problem.job_class(j, problem.slots[s].machine[0]) == problem.slots[s].klass
        assert j not in placed
        placed.add(j)
    assert placed == set(problem.jobs)
    for mk, loads in final.final_loads.items():
        cap = problem.capacities[mk][0]
        assert loads[0] <= cap + 3 * rat(problem.small_caps[mk])
