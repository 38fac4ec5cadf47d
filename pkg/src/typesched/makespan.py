"""Makespan minimization of D-dimensional jobs on machines of K types.

Binary search over a geometric target grid wraps a decision procedure:
scale costs by the target T, classify each (job, type) pair as large when
some dimension reaches eps, lift large costs to at least eps^2/D, round up
to powers of 1/(1+eps), enumerate (or extract from a certificate schedule)
per-type pattern profiles for the large-job slots, solve the slot LP, and
round it iteratively to an integral schedule.

A makespan-T solution survives the lift (+eps additively) and the round-up
(factor 1+eps), so rounded per-machine loads stay within (1+eps)^2; that is
the pattern capacity, and rem(i) is whatever the pattern leaves unused.
Small-job routes use unrounded scaled costs so the 2D*eps / 3D*eps
overshoot bounds of the rounding engine hold exactly.  The decision
guarantee factor is G(eps, D) = (1+eps)^3 + 3D*eps, and the internal eps is
calibrated so G(eps)*(1+eps) <= 1 + eps_user covers the grid granularity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator

from .errors import BudgetExhausted, Infeasible, PatternOverflow
from .model import Instance, Schedule, evaluate_makespan, require_valid
from .modes import FullEnum, Guided
from .rationals import ONE, ZERO, parse_rational, rat, rat_floor
from .rounding import (
    JobRoutes,
    RoundingEngine,
    RoundingProblem,
    RoundingStats,
    SlotInfo,
    untangle,
)

Klass = tuple[int, ...]  # per-dimension exponents k, size (1+eps)^(-k)
Pattern = tuple[Klass, ...]  # sorted multiset of large-job types on one machine
Profile = tuple[tuple[Pattern, ...], ...]  # per type, one pattern per machine


@dataclass(frozen=True)
class ScaledEntry:
    large: bool
    raw: tuple       # cost / T, exact
    rounded: tuple   # after large-lift and round-up to powers of 1/(1+eps)
    klass: Klass | None  # None unless large with every rounded dim <= 1


@dataclass
class ScaledInstance:
    base: Instance
    eps: object
    target: object
    entries: list[list[ScaledEntry]]
    capacity: object       # (1+eps)^2
    large_cap: int         # floor(D/eps), max large jobs per machine

    def entry(self, job: int, mtype: int) -> ScaledEntry:
        return self.entries[job][mtype]


@dataclass
class SlotSystem:
    slots: dict[int, SlotInfo]
    rem: dict[tuple[int, int], tuple]


def power_round_up(value, eps) -> tuple[int, object]:
    """Least power of 1/(1+eps) that is >= value, as (exponent, value)."""
    value = rat(value)
    eps = rat(eps)
    assert value > 0 and eps > 0
    base = ONE + eps
    k = 0
    power = ONE
    if value <= 1:
        while power / base >= value:
            power = power / base
            k += 1
    else:
        while power < value:
            power = power * base
            k -= 1
    return k, power


def make_scaled_instance(inst: Instance, target, eps) -> ScaledInstance:
    """Classify on cost/T, lift large costs to eps^2/D, then round up."""
    target = parse_rational(target)
    eps = parse_rational(eps)
    assert target > 0 and 0 < eps < 1
    dims = inst.dims
    floor_val = eps * eps / dims
    entries: list[list[ScaledEntry]] = []
    for j in range(inst.num_jobs):
        row = []
        for t in range(inst.num_types):
            raw = tuple(rat(c) / target for c in inst.cost_vec(j, t))
            large = any(c >= eps for c in raw)
            ks, rounded = [], []
            for c in raw:
                lifted = max(c, floor_val) if large else c
                k, power = power_round_up(lifted, eps)
                ks.append(k)
                rounded.append(power)
            klass = tuple(ks) if large and all(p <= 1 for p in rounded) else None
            row.append(ScaledEntry(large, raw, tuple(rounded), klass))
        entries.append(row)
    return ScaledInstance(
        base=inst,
        eps=eps,
        target=target,
        entries=entries,
        capacity=(ONE + eps) ** 2,
        large_cap=rat_floor(rat(dims) / eps),
    )


def klass_value(eps, klass: Klass) -> tuple:
    base = ONE + rat(eps)
    return tuple(base ** (-k) for k in klass)


def large_type_grid(eps, dims: int) -> list[Klass]:
    """The unrestricted set Q: per-dimension powers of 1/(1+eps) in [eps^2/D, 1]."""
    eps = parse_rational(eps)
    base = ONE + eps
    lo = eps * eps / dims
    ks = []
    k = 0
    while base ** (-k) >= lo:
        ks.append(k)
        k += 1
    return [tuple(combo) for combo in itertools.product(ks, repeat=dims)]


def realized_types(scaled: ScaledInstance) -> dict[int, dict[Klass, int]]:
    """Large-job types actually achieved, per machine type, with job counts."""
    out: dict[int, dict[Klass, int]] = {t: {} for t in range(scaled.base.num_types)}
    for j in range(scaled.base.num_jobs):
        for t in range(scaled.base.num_types):
            if scaled.base.machine_counts[t] == 0:
                continue
            klass = scaled.entry(j, t).klass
            if klass is not None:
                out[t][klass] = out[t].get(klass, 0) + 1
    return out


def enumerate_large_job_types(scaled: ScaledInstance) -> set[Klass]:
    """Q restricted to realized size vectors (unrealizable slots cannot be filled)."""
    out: set[Klass] = set()
    for per_type in realized_types(scaled).values():
        out |= per_type.keys()
    return out


def feasible_patterns(scaled: ScaledInstance, mtype: int) -> list[Pattern]:
    """Patterns over realized classes: count and per-dimension mass limits."""
    counts = realized_types(scaled)[mtype]
    klasses = sorted(counts)
    dims = scaled.base.dims
    cap = scaled.capacity
    out: list[Pattern] = []

    def extend(idx: int, chosen: list[Klass], mass: list, slots_left: int):
        out.append(tuple(chosen))
        for i in range(idx, len(klasses)):
            q = klasses[i]
            if slots_left == 0 or chosen.count(q) >= counts[q]:
                continue
            size = klass_value(scaled.eps, q)
            new_mass = [m + s for m, s in zip(mass, size)]
            if any(m > cap for m in new_mass):
                continue
            chosen.append(q)
            extend(i, chosen, new_mass, slots_left - 1)
            chosen.pop()

    extend(0, [], [ZERO] * dims, scaled.large_cap)
    return sorted(set(out))


def _type_profiles(scaled: ScaledInstance, mtype: int) -> list[tuple[Pattern, ...]]:
    """Multisets of patterns for the machines of one type, slot-count pruned."""
    m = scaled.base.machine_counts[mtype]
    if m == 0:
        return [()]
    patterns = feasible_patterns(scaled, mtype)
    counts = realized_types(scaled)[mtype]
    out = []
    for combo in itertools.combinations_with_replacement(patterns, m):
        used: dict[Klass, int] = {}
        for pat in combo:
            for q in pat:
                used[q] = used.get(q, 0) + 1
        if all(used[q] <= counts[q] for q in used):
            out.append(combo)
    return out


def enumerate_pattern_profiles(scaled: ScaledInstance, budget: int) -> Iterator[Profile]:
    """Lazily yield profiles; raise BudgetExhausted when the cap cuts the stream."""
    per_type = [_type_profiles(scaled, t) for t in range(scaled.base.num_types)]
    yielded = 0
    for profile in itertools.product(*per_type):
        if yielded >= budget:
            raise BudgetExhausted(f"profile budget {budget} exhausted")
        yielded += 1
        yield profile


def profile_from_schedule(scaled: ScaledInstance, sched: Schedule) -> Profile:
    """The pattern profile an assignment induces (certificate-guided mode)."""
    per_machine: dict[tuple[int, int], list[Klass]] = {
        m: [] for m in scaled.base.machines()
    }
    for j, (t, k) in enumerate(sched.assignment):
        entry = scaled.entry(j, t)
        if entry.large:
            if entry.klass is None:
                raise PatternOverflow(
                    f"job {j} oversize on type {t} at this target"
                )
            per_machine[(t, k)].append(entry.klass)
    profile = []
    for t in range(scaled.base.num_types):
        pats = []
        for k in range(scaled.base.machine_counts[t]):
            qs = sorted(per_machine[(t, k)])
            if len(qs) > scaled.large_cap:
                raise PatternOverflow(
                    f"machine ({t},{k}) holds {len(qs)} large jobs, cap {scaled.large_cap}"
                )
            mass = [ZERO] * scaled.base.dims
            for q in qs:
                for d, s in enumerate(klass_value(scaled.eps, q)):
                    mass[d] += s
            if any(m > scaled.capacity for m in mass):
                raise PatternOverflow(f"machine ({t},{k}) pattern mass exceeds capacity")
            pats.append(tuple(qs))
        profile.append(tuple(sorted(pats)))
    return tuple(profile)


def build_rounding_problem(
    scaled: ScaledInstance, profile: Profile
) -> tuple[RoundingProblem, SlotSystem]:
    inst = scaled.base
    dims = inst.dims
    slots: dict[int, SlotInfo] = {}
    rem: dict[tuple[int, int], list] = {}
    sid = 0
    for t in range(inst.num_types):
        for k in range(inst.machine_counts[t]):
            pattern = profile[t][k]
            machine = (t, k)
            used = [ZERO] * dims
            for q in pattern:
                size = klass_value(scaled.eps, q)
                slots[sid] = SlotInfo(sid, machine, q, size)
                sid += 1
                for d in range(dims):
                    used[d] += size[d]
            rem[machine] = [scaled.capacity - u for u in used]
            if any(r < 0 for r in rem[machine]):
                raise PatternOverflow(f"pattern mass exceeds capacity on {machine}")

    jobs: dict[int, JobRoutes] = {}
    for j in range(inst.num_jobs):
        machine_costs = {}
        slot_ids = set()
        for t in range(inst.num_types):
            if inst.machine_counts[t] == 0:
                continue
            entry = scaled.entry(j, t)
            if entry.large:
                if entry.klass is None:
                    continue
                for s, info in slots.items():
                    if info.machine[0] == t and info.klass == entry.klass:
                        slot_ids.add(s)
            else:
                # unrounded scaled costs keep the 2D*eps overshoot bound exact
                for k in range(inst.machine_counts[t]):
                    machine_costs[(t, k)] = entry.raw
        jobs[j] = JobRoutes(machine_costs, slot_ids)

    problem = RoundingProblem(
        dims=dims,
        jobs=jobs,
        slots=slots,
        capacities={m: tuple(v) for m, v in rem.items()},
        small_caps={m: scaled.eps for m in rem},
        type_budgets={},
        job_class=lambda j, t: scaled.entry(j, t).klass,
        leaf_raw_cost=lambda j, t: max(scaled.entry(j, t).raw),
    )
    return problem, SlotSystem(slots, {m: tuple(v) for m, v in rem.items()})


def build_slot_lp(scaled: ScaledInstance, profile: Profile):
    """The initial Slot-LP (rows: n jobs + slots + D per machine) plus slot system."""
    problem, system = build_rounding_problem(scaled, profile)
    lp, _, _ = RoundingEngine(problem)._build_lp()
    return lp, system


def guarantee_factor(eps, dims: int):
    eps = parse_rational(eps)
    return (ONE + eps) ** 3 + 3 * dims * eps


def calibrate_eps(eps_user, dims: int):
    """Largest eps_user/2^k whose end-to-end factor stays within 1 + eps_user."""
    eps_user = parse_rational(eps_user)
    assert 0 < eps_user <= 1
    for k in range(0, 64):
        eps = eps_user / (2 ** k)
        if guarantee_factor(eps, dims) * (ONE + eps) <= ONE + eps_user:
            return eps
    raise AssertionError("calibration failed to terminate")


@dataclass
class DecisionResult:
    schedule: Schedule
    makespan: object
    target: object
    profile: Profile
    stats: RoundingStats
    forest: dict = field(default_factory=dict)


@dataclass
class MakespanResult:
    schedule: Schedule
    makespan: object
    accepted_target: object
    eps_internal: object
    oracle_lower_bound: object
    probes: int
    probe_stats: list[RoundingStats] = field(default_factory=list)
    forest: dict = field(default_factory=dict)


def _assemble_schedule(inst: Instance, problem: RoundingProblem, final) -> Schedule:
    assignment: list = [None] * inst.num_jobs
    for j, mk in final.machine_assign.items():
        assignment[j] = mk
    for s, j in final.slot_assign.items():
        assert assignment[j] is None
        assignment[j] = problem.slots[s].machine
    assert all(a is not None for a in assignment), "schedule not total"
    return Schedule(tuple(assignment))


def makespan_decision(inst: Instance, target, eps, mode) -> DecisionResult:
    """Schedule with makespan <= G(eps, D) * target, or Infeasible.

    BudgetExhausted (full mode only) is not an infeasibility certificate and
    propagates distinctly.
    """
    scaled = make_scaled_instance(inst, target, eps)
    if isinstance(mode, Guided):
        try:
            profiles: Iterator[Profile] = iter([profile_from_schedule(scaled, mode.schedule)])
        except PatternOverflow as exc:
            raise Infeasible(str(exc)) from exc
    else:
        profiles = enumerate_pattern_profiles(scaled, mode.budget)

    bound = guarantee_factor(eps, inst.dims) * rat(parse_rational(target))
    while True:
        try:
            profile = next(profiles)
        except StopIteration:
            raise Infeasible("every enumerated profile failed") from None
        try:
            problem, _ = build_rounding_problem(scaled, profile)
        except PatternOverflow:
            continue
        engine = RoundingEngine(problem)
        try:
            outcome = engine.run()
        except Infeasible:
            continue
        final = untangle(problem, outcome)
        schedule = _assemble_schedule(inst, problem, final)
        makespan = evaluate_makespan(inst, schedule)
        assert makespan <= bound, "decision exceeded its guarantee factor"
        return DecisionResult(
            schedule, makespan, parse_rational(target), profile, engine.stats, outcome.forest
        )


def _target_bounds(inst: Instance):
    usable = [t for t in range(inst.num_types) if inst.machine_counts[t] > 0]
    floors = [
        min(max(rat(c) for c in inst.cost_vec(j, t)) for t in usable)
        for j in range(inst.num_jobs)
    ]
    return max(floors), sum(floors, ZERO)


def makespan_ptas(inst: Instance, eps_user, mode) -> MakespanResult:
    """Schedule with makespan <= (1 + eps_user) * OPT."""
    require_valid(inst)
    eps_user = parse_rational(eps_user)
    eps = calibrate_eps(eps_user, inst.dims)
    lower, upper = _target_bounds(inst)
    grid = [lower]
    while grid[-1] < upper:
        grid.append(grid[-1] * (ONE + eps))

    probes = 0
    probe_stats: list[RoundingStats] = []

    def probe(idx: int) -> DecisionResult | None:
        nonlocal probes
        probes += 1
        try:
            res = makespan_decision(inst, grid[idx], eps, mode)
            probe_stats.append(res.stats)
            return res
        except Infeasible:
            return None

    best = probe(0)
    if best is None:
        hi = len(grid) - 1
        best = probe(hi)
        assert best is not None, "decision rejected a valid upper bound"
        lo = 0
        while hi - lo > 1:
            mid = (lo + hi) // 2
            res = probe(mid)
            if res is None:
                lo = mid
            else:
                hi = mid
                best = res
    return MakespanResult(
        schedule=best.schedule,
        makespan=best.makespan,
        accepted_target=best.target,
        eps_internal=eps,
        oracle_lower_bound=lower,
        probes=probes,
        probe_stats=probe_stats,
        forest=best.forest,
    )
