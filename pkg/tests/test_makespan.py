import random

import pytest

from typesched.errors import BudgetExhausted, Infeasible, PatternOverflow
from typesched.makespan import (
    FullEnum,
    Guided,
    build_slot_lp,
    calibrate_eps,
    enumerate_large_job_types,
    enumerate_pattern_profiles,
    guarantee_factor,
    large_type_grid,
    make_scaled_instance,
    makespan_decision,
    makespan_ptas,
    power_round_up,
    profile_from_schedule,
)
from typesched.model import GeneratorSpec, Schedule, generate_instance, make_instance
from typesched.oracle import exact_solve
from typesched.rationals import ONE, rat


def powers_of_two_thirds(limit_low):
    # independent enumeration of powers of 1/(1+eps) for eps = 1/2
    vals = []
    v = rat(1)
    while v >= limit_low:
        vals.append(v)
        v = v * rat(2, 3)
    return vals


def round_up_oracle(x, eps=rat(1, 2)):
    # least power of 1/(1+eps) >= x, from an explicit descending power list
    v = rat(1)
    while v < x:
        v = v * rat(3, 2)
    candidates = [v]
    w = v * rat(2, 3)
    while w >= x:
        candidates.append(w)
        w = w * rat(2, 3)
    return min(candidates)


def test_power_round_up_examples():
    # 0.3 -> 4/9 (powers of 2/3 are 1, 2/3, 4/9, 8/27, ...)
    assert round_up_oracle(rat(3, 10)) == rat(4, 9)
    assert power_round_up(rat(3, 10), rat(1, 2))[1] == rat(4, 9)
    # 0.7 -> 1
    assert round_up_oracle(rat(7, 10)) == 1
    assert power_round_up(rat(7, 10), rat(1, 2))[1] == 1
    # values above 1 round to positive powers of 1+eps
    assert power_round_up(rat(5, 4), rat(1, 2))[1] == rat(3, 2)


def test_scaled_instance_classification():
    # single type; T = 10; eps = 1/2; D = 1
    inst = make_instance(1, [1], [[[3]], [[7]]])
    scaled = make_scaled_instance(inst, 10, rat(1, 2))
    small = scaled.entry(0, 0)
    assert not small.large and small.raw == (rat(3, 10),)
    assert small.rounded == (rat(4, 9),)
    assert small.klass is None
    large = scaled.entry(1, 0)
    assert large.large and large.rounded == (ONE,)
    assert large.klass == (0,)


def test_scaled_boundary_is_large():
    # c/T exactly eps classifies large (>= test per dimension)
    inst = make_instance(1, [1], [[[5]]])
    scaled = make_scaled_instance(inst, 10, rat(1, 2))
    assert scaled.entry(0, 0).large


def test_large_lift_applies_only_to_large_jobs():
    # D=2: dim0 0.6 >= eps makes the job large; dim1 0.01 lifts to eps^2/D = 1/8
    inst = make_instance(2, [1], [[[60, 1]]])
    scaled = make_scaled_instance(inst, 100, rat(1, 2))
    entry = scaled.entry(0, 0)
    assert entry.large
    assert entry.rounded[1] >= rat(1, 8)


def test_large_type_grid_matches_hand_enumeration():
    # eps = 1/2, D = 1: powers in [1/4, 1] are {1, 2/3, 4/9, 8/27}
    grid = large_type_grid(rat(1, 2), 1)
    values = sorted((rat(3, 2) ** (-k[0]) for k in grid), reverse=True)
    assert values == powers_of_two_thirds(rat(1, 4))
    assert len(grid) == 4
    # kappa: patterns as vectors in {0..floor(D/eps)}^Q
    assert (2 + 1) ** len(grid) == 81


def test_realized_types_restriction():
    # all large jobs round to size 1 -> Q restricted to {(0,)}
    inst = make_instance(1, [1], [[[9]], [[10]], [[2]]])
    scaled = make_scaled_instance(inst, 10, rat(1, 2))
    assert enumerate_large_job_types(scaled) == {(0,)}


def test_profile_enumeration_tiny_cases():
    # no large jobs -> exactly one (all-empty) profile
    inst = make_instance(1, [2], [[[1]], [[1]]])
    scaled = make_scaled_instance(inst, 10, rat(1, 2))
    profiles = list(enumerate_pattern_profiles(scaled, 100))
    assert profiles == [((tuple(), tuple()),)]
    # 1 machine, 1 large job -> empty pattern or one slot: 2 profiles
    inst2 = make_instance(1, [1], [[[8]]])
    scaled2 = make_scaled_instance(inst2, 10, rat(1, 2))
    profiles2 = list(enumerate_pattern_profiles(scaled2, 100))
    assert len(profiles2) == 2
    # slot totals never exceed the number of large jobs
    counts = [sum(len(p) for pats in prof for p in pats) for prof in profiles2]
    assert max(counts) <= 1


def test_profile_budget_exhaustion():
    inst = make_instance(1, [2], [[[8]], [[9]], [[10]]])
    scaled = make_scaled_instance(inst, 10, rat(1, 2))
    gen = enumerate_pattern_profiles(scaled, 1)
    next(gen)
    with pytest.raises(BudgetExhausted):
        next(gen)


def test_profile_from_schedule():
    inst = make_instance(1, [2], [[[1]], [[8]]])
    scaled = make_scaled_instance(inst, 10, rat(1, 2))
    # only the small job on each machine -> all-empty profile
    small_only = make_scaled_instance(make_instance(1, [2], [[[1]], [[2]]]), 10, rat(1, 2))
    prof0 = profile_from_schedule(small_only, Schedule(((0, 0), (0, 1))))
    assert prof0 == (((), ()),)
    # the large job contributes exactly one slot with its rounded class
    prof = profile_from_schedule(scaled, Schedule(((0, 0), (0, 1))))
    klass = scaled.entry(1, 0).klass
    assert sorted(prof[0]) == sorted([(), (klass,)])


def test_profile_overflow_when_target_too_small():
    # 3 large jobs on one machine with floor(D/eps) = 2
    inst = make_instance(1, [1], [[[6]], [[6]], [[6]]])
    scaled = make_scaled_instance(inst, 10, rat(1, 2))
    assert scaled.large_cap == 2
    with pytest.raises(PatternOverflow):
        profile_from_schedule(scaled, Schedule(((0, 0), (0, 0), (0, 0))))


def test_slot_lp_row_count():
    # rows = n + slots + D * machines
    inst = make_instance(2, [2, 1], [[[2, 3], [4, 1]], [[9, 1], [2, 2]], [[1, 1], [1, 1]]])
    scaled = make_scaled_instance(inst, 10, rat(1, 2))
    profiles = list(enumerate_pattern_profiles(scaled, 10**6))
    profile = max(profiles, key=lambda p: sum(len(x) for pats in p for x in pats))
    lp, system = build_slot_lp(scaled, profile)
    n_slots = len(system.slots)
    assert n_slots > 0
    assert lp.num_rows == inst.num_jobs + n_slots + inst.dims * inst.num_machines


def test_calibrate_eps_against_direct_scan():
    # independent evaluation of G on the halving grid
    def scan(eps_user, dims):
        e = rat(eps_user)
        while True:
            G = (1 + e) ** 3 + 3 * dims * e
            if G * (1 + e) <= 1 + rat(eps_user):
                return e
            e = e / 2

    assert calibrate_eps(rat(1, 2), 1) == scan(rat(1, 2), 1) == rat(1, 16)
    # the formula gives 1/16 at eps_user = 1 as well: G(1/8,1)*(9/8) = 8289/4096 > 2
    assert guarantee_factor(rat(1, 8), 1) * rat(9, 8) == rat(8289, 4096)
    assert calibrate_eps(1, 1) == scan(1, 1) == rat(1, 16)
    for dims in (1, 2, 3):
        for eps_user in (rat(1, 2), rat(1, 4), 1):
            e = calibrate_eps(eps_user, dims)
            assert guarantee_factor(e, dims) * (1 + e) <= 1 + rat(eps_user)


def test_guarantee_factor_monotone():
    values = [guarantee_factor(rat(1, 2 ** k), 2) for k in range(1, 8)]
    assert values == sorted(values, reverse=True)


def test_decision_single_job_at_exact_target():
    inst = make_instance(1, [1], [[[5]]])
    res = makespan_decision(inst, 5, rat(1, 2), FullEnum())
    assert res.makespan == 5


def test_decision_infeasible_below_floor():
    # T below max_j min_t max_d c: the job fits nowhere
    inst = make_instance(1, [1], [[[5]]])
    with pytest.raises(Infeasible):
        makespan_decision(inst, 4, rat(1, 2), FullEnum())
    with pytest.raises(Infeasible):
        makespan_decision(inst, 4, rat(1, 2), Guided(Schedule(((0, 0),))))


def test_decision_guided_at_oracle_optimum():
    rng = random.Random(42)
    for trial in range(15):
        spec = GeneratorSpec(
            num_jobs=rng.randint(2, 6),
            dims=rng.choice([1, 2]),
            machine_counts=(rng.randint(1, 2), rng.randint(1, 2)),
            cost_min=1,
            cost_max=10,
        )
        inst = generate_instance(spec, 500 + trial)
        opt = exact_solve(inst)
        eps = rat(1, 16)
        res = makespan_decision(inst, opt.optimum, eps, Guided(opt.witness))
        assert res.makespan <= guarantee_factor(eps, inst.dims) * rat(opt.optimum)


def test_ptas_single_machine_is_exact():
    inst = make_instance(1, [1], [[[4]], [[9]]])
    res = makespan_ptas(inst, rat(1, 2), FullEnum())
    assert res.makespan == 13


def test_ptas_identical_jobs_balanced():
    # n unit jobs on m identical machines: OPT = ceil(n/m)
    for n, m in [(4, 2), (5, 2), (7, 3)]:
        inst = make_instance(1, [m], [[[1]] for _ in range(n)])
        opt = exact_solve(inst)
        assert opt.optimum == -(-n // m)
        res = makespan_ptas(inst, rat(1, 2), Guided(opt.witness))
        assert rat(res.makespan) <= rat(3, 2) * rat(opt.optimum)


def test_ptas_guided_ratio_sampled():
    rng = random.Random(7)
    for trial in range(20):
        spec = GeneratorSpec(
            num_jobs=rng.randint(2, 6),
            dims=rng.choice([1, 2]),
            machine_counts=(rng.randint(1, 2), rng.randint(1, 2)),
            cost_min=1,
            cost_max=10,
        )
        inst = generate_instance(spec, 900 + trial)
        opt = exact_solve(inst)
        res = makespan_ptas(inst, rat(1, 2), Guided(opt.witness))
        assert rat(res.makespan) <= rat(3, 2) * rat(opt.optimum)
        assert rat(res.makespan) >= rat(opt.optimum)


def test_decision_monotone_above_optimum():
    # acceptance is provable for every target at or above the certificate
    # makespan; sample successors of the accepted grid point
    rng = random.Random(11)
    for trial in range(5):
        spec = GeneratorSpec(4, 1, (1, 1), 1, 9)
        inst = generate_instance(spec, 300 + trial)
        opt = exact_solve(inst)
        eps = rat(1, 16)
        base = rat(opt.optimum)
        for k in range(3):
            t = base * (1 + eps) ** k
            res = makespan_decision(inst, t, eps, Guided(opt.witness))
            assert res.makespan <= guarantee_factor(eps, 1) * t


def test_full_enum_matches_guided_on_tiny_instances():
    rng = random.Random(3)
    for trial in range(5):
        spec = GeneratorSpec(3, 1, (1, 1), 1, 9)
        inst = generate_instance(spec, 40 + trial)
        opt = exact_solve(inst)
        res = makespan_ptas(inst, rat(1, 2), FullEnum(budget=10**6))
        assert rat(res.makespan) <= rat(3, 2) * rat(opt.optimum)


from hypothesis import given, strategies as st


@given(
    st.integers(min_value=1, max_value=400),
    st.integers(min_value=1, max_value=40),
    st.sampled_from([2, 3, 4, 8, 16]),
)
def test_round_up_within_one_grid_step(num, den, inv_eps):
    # next-greater-power rounding never exceeds one factor of (1+eps)
    v = rat(num, den)
    eps = rat(1, inv_eps)
    _, power = power_round_up(v, eps)
    assert v <= power < v * (1 + eps)
