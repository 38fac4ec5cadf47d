"""L_p-norm minimization of one-dimensional jobs on machines of K types.

Pipeline per guess (enumerated, or extracted from a certificate schedule):

  * huge machines per type (machines executing exactly one job), the very
    huge jobs pinned alone to machines, the longest non-huge job length
    c_max per type, a load scale alpha with every non-huge load inside
    [alpha*c_max, (alpha+2)*c_max], and large-job patterns for the
    non-huge machines (sizes rounded down to powers of 1+eps);
  * a convex relaxation over assignment/slot/huge-budget constraints whose
    objective charges each non-huge machine max(small_load + B_i,
    alpha*c_max)^p and each huge-routed job c^p, solved to a certified
    additive error by conditional gradients;
  * a linear program freezing each machine's allowance t*_i =
    max(small_load, alpha*c_max - B_i), rounded iteratively with the slot
    engine extended by the improper-machine case.

Slot sizes are rounded DOWN so the relaxation never exceeds the integral
optimum (the correctness chain then pays a (1+eps) factor when real jobs
replace slot masses); the load lower bound applies to the full modeled
load t_i + B_i, and the huge budget excludes the pinned very-huge
machines.  Both adjustments keep the end-to-end ratio provable and are
covered by the eps calibration (1+4e)(1+e)^2 <= 1 + eps_user.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator

from .errors import (
    BadExponent,
    BudgetExhausted,
    DimensionMismatch,
    GuessInconsistent,
    Infeasible,
    InfeasibleRegion,
)
from .lp import EQ, LE, LinearProgram
from .convex import ConvexSolveResult, solve_convex_over_polytope
from .model import Instance, Schedule, evaluate_lp_norm_pow, load_vector, require_valid
from .modes import FullEnum, Guided
from .rationals import ONE, ZERO, is_integral, parse_rational, rat, rat_ceil, rat_floor
from .rounding import (
    JobRoutes,
    RoundingEngine,
    RoundingProblem,
    RoundingStats,
    SlotInfo,
    untangle,
)

Pattern = tuple[int, ...]  # sorted size-class exponents e, size (1+eps)^e


@dataclass(frozen=True)
class TypeGuess:
    huge_count: int
    very_huge: tuple[int, ...]        # job ids, pinned alone, longest first
    c_max: object | None
    alpha: int
    profile: tuple[Pattern, ...]      # one pattern per non-huge machine


@dataclass(frozen=True)
class Guess:
    types: tuple[TypeGuess, ...]


def f_threshold(p, eps) -> int:
    """Smallest f with 1 + 2^p / f <= (1+eps)^p.

    Listing this many longest one-job machines per type makes the improper
    machine's cost absorbable: sum g^p + (2 min G)^p <= (1+eps)^p sum g^p
    for any |G| >= f.
    """
    p = parse_rational(p)
    eps = parse_rational(eps)
    if p <= 1 or eps <= 0:
        raise BadExponent("need p > 1 and eps > 0")
    if is_integral(p):
        k = int(p)
        f = rat_ceil((rat(2) ** k) / ((ONE + eps) ** k - 1))
    else:
        f = math.ceil(2 ** float(p) / ((1 + float(eps)) ** float(p) - 1))
        while 1 + 2 ** float(p) / f > (1 + float(eps)) ** float(p):
            f += 1
        while f > 1 and 1 + 2 ** float(p) / (f - 1) <= (1 + float(eps)) ** float(p):
            f -= 1
    return max(1, f)


def calibrate_eps(eps_user):
    """Largest eps_user/2^k with (1+4e)(1+e)^2 <= 1 + eps_user."""
    eps_user = parse_rational(eps_user)
    assert 0 < eps_user <= 1
    for k in range(0, 64):
        e = eps_user / (2 ** k)
        if (ONE + 4 * e) * (ONE + e) ** 2 <= ONE + eps_user:
            return e
    raise AssertionError("calibration failed to terminate")


def size_class(cost, eps) -> int:
    """Largest e with (1+eps)^e <= cost (round down to the geometric grid)."""
    cost = rat(cost)
    base = ONE + rat(eps)
    assert cost > 0
    e = 0
    power = ONE
    if cost >= 1:
        while power * base <= cost:
            power = power * base
            e += 1
    else:
        while power > cost:
            power = power / base
            e -= 1
    return e


def class_size(e: int, eps):
    return (ONE + rat(eps)) ** e


def _charge(cost, p):
    if is_integral(p):
        return rat(cost) ** int(p)
    return rat(float(cost) ** float(p))


# ---------------------------------------------------------------------------
# guess extraction and enumeration


def _pattern_caps(alpha: int, c_max, eps) -> tuple[int, object]:
    """(max slots per machine, max pattern mass) under the alpha load window."""
    count_cap = rat_floor(rat(alpha + 2) / (rat(eps) * alpha))
    mass_cap = (alpha + 2) * rat(c_max)
    return count_cap, mass_cap


def guess_from_schedule(inst: Instance, p, eps, sched: Schedule) -> Guess:
    """Structural guess induced by a schedule (certificate-guided mode).

    Raises GuessInconsistent when the schedule violates the load-difference
    properties every optimal solution has; callers then fall back to
    enumeration.
    """
    if inst.dims != 1:
        raise DimensionMismatch("L_p pipeline requires D=1")
    eps = parse_rational(eps)
    f = f_threshold(p, eps)
    loads = load_vector(inst, sched)
    jobs_on: dict[tuple[int, int], list[int]] = {m: [] for m in inst.machines()}
    for j, mk in enumerate(sched.assignment):
        jobs_on[mk].append(j)

    per_type = []
    for t in range(inst.num_types):
        m = inst.machine_counts[t]
        machines = [(t, k) for k in range(m)]
        huge = [mk for mk in machines if len(jobs_on[mk]) == 1]
        non_huge = [mk for mk in machines if len(jobs_on[mk]) != 1]
        huge_jobs = sorted(
            (jobs_on[mk][0] for mk in huge),
            key=lambda j: (-rat(inst.cost(j, t)), j),
        )
        vh = tuple(huge_jobs[: min(f, len(huge_jobs))])
        if len(vh) < len(huge_jobs):
            floor = min(rat(inst.cost(j, t)) for j in vh)
            for j in huge_jobs[len(vh):]:
                if rat(inst.cost(j, t)) > floor:
                    raise GuessInconsistent("non-listed huge job longer than a listed one")

        hosted = [j for mk in non_huge for j in jobs_on[mk]]
        if not hosted:
            per_type.append(
                TypeGuess(len(huge), vh, None, 1, tuple(() for _ in non_huge))
            )
            continue
        c_max = max(rat(inst.cost(j, t)) for j in hosted)
        nh_loads = [loads[mk][0] for mk in non_huge]
        if min(nh_loads) < c_max or max(nh_loads) - min(nh_loads) > c_max:
            raise GuessInconsistent("non-huge loads violate the load-difference property")
        alpha = max(1, min(inst.num_jobs, rat_floor(min(nh_loads) / c_max)))
        if max(nh_loads) > (alpha + 2) * c_max:
            raise GuessInconsistent("no load window of width 2*c_max fits")
        if len(vh) < len(huge_jobs):
            spill = [j for j in huge_jobs[len(vh):] if rat(inst.cost(j, t)) <= c_max]
            if spill:
                raise GuessInconsistent("huge machine hosts a job not huge on its type")

        threshold = eps * alpha * c_max
        count_cap, mass_cap = _pattern_caps(alpha, c_max, eps)
        pats = []
        for mk in non_huge:
            classes = sorted(
                size_class(inst.cost(j, t), eps)
                for j in jobs_on[mk]
                if rat(inst.cost(j, t)) > threshold
            )
            if len(classes) > count_cap:
                raise GuessInconsistent("pattern slot count exceeds its cap")
            mass = sum((class_size(e, eps) for e in classes), ZERO)
            if mass > mass_cap:
                raise GuessInconsistent("pattern mass exceeds the load window")
            pats.append(tuple(classes))
        per_type.append(TypeGuess(len(huge), vh, c_max, alpha, tuple(sorted(pats))))
    return Guess(tuple(per_type))


def _type_guess_options(inst: Instance, t: int, p, eps) -> Iterator[TypeGuess]:
    n = inst.num_jobs
    m = inst.machine_counts[t]
    f = f_threshold(p, eps)
    costs = sorted({rat(inst.cost(j, t)) for j in range(n)})
    for h in range(0, m + 1):
        nvh = min(f, h)
        for vh in itertools.combinations(range(n), nvh):
            vh_sorted = tuple(sorted(vh, key=lambda j: (-rat(inst.cost(j, t)), j)))
            non_huge = m - h
            yield TypeGuess(h, vh_sorted, None, 1, tuple(() for _ in range(non_huge)))
            if non_huge == 0:
                continue
            for c_max in costs:
                for alpha in range(1, n + 1):
                    for profile in _profiles_for(inst, t, non_huge, c_max, alpha, eps):
                        yield TypeGuess(h, vh_sorted, c_max, alpha, profile)


def _profiles_for(inst, t, machines, c_max, alpha, eps) -> Iterator[tuple[Pattern, ...]]:
    threshold = rat(eps) * alpha * rat(c_max)
    counts: dict[int, int] = {}
    for j in range(inst.num_jobs):
        c = rat(inst.cost(j, t))
        if threshold < c <= rat(c_max):
            e = size_class(c, eps)
            counts[e] = counts.get(e, 0) + 1
    count_cap, mass_cap = _pattern_caps(alpha, c_max, eps)
    klasses = sorted(counts)
    patterns: list[Pattern] = []

    def extend(idx, chosen, mass):
        patterns.append(tuple(chosen))
        for i in range(idx, len(klasses)):
            e = klasses[i]
            if len(chosen) >= count_cap or chosen.count(e) >= counts[e]:
                continue
            size = class_size(e, eps)
            if mass + size > mass_cap:
                continue
            chosen.append(e)
            extend(i, chosen, mass + size)
            chosen.pop()

    extend(0, [], ZERO)
    for combo in itertools.combinations_with_replacement(sorted(set(patterns)), machines):
        used: dict[int, int] = {}
        for pat in combo:
            for e in pat:
                used[e] = used.get(e, 0) + 1
        if all(used[e] <= counts[e] for e in used):
            yield combo


def enumerate_guesses(inst: Instance, p, eps, budget: int) -> Iterator[Guess]:
    """Lazily yield structural guesses; BudgetExhausted when truncated.

    Guesses that leave some job without any route are skipped before being
    charged against the budget (they can never be feasible).
    """
    if inst.dims != 1:
        raise DimensionMismatch("L_p pipeline requires D=1")
    eps = parse_rational(eps)
    options = [list(_type_guess_options(inst, t, p, eps)) for t in range(inst.num_types)]
    yielded = 0
    for combo in itertools.product(*options):
        pinned: set[int] = set()
        clash = False
        for tg in combo:
            for j in tg.very_huge:
                if j in pinned:
                    clash = True
                    break
                pinned.add(j)
            if clash:
                break
        if clash:
            continue
        guess = Guess(tuple(combo))
        if not _all_jobs_routable(inst, eps, guess, pinned):
            continue
        if yielded >= budget:
            raise BudgetExhausted(f"guess budget {budget} exhausted")
        yielded += 1
        yield guess


def _all_jobs_routable(inst, eps, guess: Guess, pinned: set[int]) -> bool:
    for j in range(inst.num_jobs):
        if j in pinned:
            continue
        ok = False
        for t, tg in enumerate(guess.types):
            if inst.machine_counts[t] == 0:
                continue
            c = rat(inst.cost(j, t))
            free_huge = tg.huge_count - len(tg.very_huge)
            if tg.c_max is None:
                if free_huge > 0 and _in_h(c, tg, inst, t):
                    ok = True
            elif c > rat(tg.c_max):
                if free_huge > 0 and _in_h(c, tg, inst, t):
                    ok = True
            elif c > rat(eps) * tg.alpha * rat(tg.c_max):
                e = size_class(c, eps)
                if any(e in pat for pat in tg.profile):
                    ok = True
            else:
                if inst.machine_counts[t] - tg.huge_count > 0:
                    ok = True
            if ok:
                break
        if not ok:
            return False
    return True


def _in_h(cost, tg: TypeGuess, inst, t) -> bool:
    if not tg.very_huge:
        return False
    floor = min(rat(inst.cost(j, t)) for j in tg.very_huge)
    return rat(cost) <= floor


# ---------------------------------------------------------------------------
# Slot-CP model


@dataclass
class CpModel:
    inst: Instance
    p: object
    eps: object
    guess: Guess
    small_machines: list[tuple[int, int]]
    pattern_mass: dict[tuple[int, int], object]      # B_i
    load_floor: dict[tuple[int, int], object]        # alpha_l * c_max_l
    slots: dict[int, SlotInfo]
    routes: dict[int, JobRoutes]
    budgets: dict[int, int]
    vh_machines: dict[int, tuple[int, int]]          # job -> pinned machine
    vh_loads: dict[tuple[int, int], object]          # t*_i of very huge machines
    small_caps: dict[tuple[int, int], object]


@dataclass
class CpSolution:
    x: dict[str, object]
    t_star: dict[tuple[int, int], object]
    objective_value: float
    duality_gap: float
    iterations: int


def build_cp_model(inst: Instance, p, eps, guess: Guess) -> CpModel:
    if inst.dims != 1:
        raise DimensionMismatch("L_p pipeline requires D=1")
    p = parse_rational(p)
    eps = parse_rational(eps)
    if len(guess.types) != inst.num_types:
        raise GuessInconsistent("guess covers the wrong number of types")

    small_machines: list[tuple[int, int]] = []
    pattern_mass: dict[tuple[int, int], object] = {}
    load_floor: dict[tuple[int, int], object] = {}
    small_caps: dict[tuple[int, int], object] = {}
    slots: dict[int, SlotInfo] = {}
    vh_machines: dict[int, tuple[int, int]] = {}
    vh_loads: dict[tuple[int, int], object] = {}
    budgets: dict[int, int] = {}
    sid = 0

    for t, tg in enumerate(guess.types):
        m = inst.machine_counts[t]
        if tg.huge_count > m or len(tg.very_huge) > tg.huge_count:
            raise GuessInconsistent(f"type {t}: huge counts exceed machines")
        non_huge = m - tg.huge_count
        if len(tg.profile) != non_huge:
            raise GuessInconsistent(f"type {t}: profile does not cover non-huge machines")
        for r, j in enumerate(tg.very_huge):
            mk = (t, non_huge + r)
            vh_machines[j] = mk
            vh_loads[mk] = rat(inst.cost(j, t))
        free_huge = tg.huge_count - len(tg.very_huge)
        if free_huge > 0:
            budgets[t] = free_huge
        for i in range(non_huge):
            mk = (t, i)
            small_machines.append(mk)
            if tg.c_max is None:
                if tg.profile[i]:
                    raise GuessInconsistent(f"type {t}: pattern without c_max")
                pattern_mass[mk] = ZERO
                load_floor[mk] = ZERO
                small_caps[mk] = ZERO
                continue
            mass = ZERO
            for e in tg.profile[i]:
                size = class_size(e, eps)
                slots[sid] = SlotInfo(sid, mk, e, (size,))
                sid += 1
                mass += size
            pattern_mass[mk] = mass
            load_floor[mk] = tg.alpha * rat(tg.c_max)
            small_caps[mk] = eps * tg.alpha * rat(tg.c_max)

    routes: dict[int, JobRoutes] = {}
    for j in range(inst.num_jobs):
        if j in vh_machines:
            continue
        machine_costs: dict[tuple[int, int], tuple] = {}
        slot_ids: set[int] = set()
        huge: dict[int, tuple] = {}
        for t, tg in enumerate(guess.types):
            if inst.machine_counts[t] == 0:
                continue
            c = rat(inst.cost(j, t))
            hugeworthy = tg.c_max is None or c > rat(tg.c_max)
            if hugeworthy:
                if t in budgets and _in_h(c, tg, inst, t):
                    huge[t] = (c, _charge(c, p))
                continue
            if c > rat(eps) * tg.alpha * rat(tg.c_max):
                e = size_class(c, eps)
                for s, info in slots.items():
                    if info.machine[0] == t and info.klass == e:
                        slot_ids.add(s)
            else:
                for i in range(inst.machine_counts[t] - tg.huge_count):
                    machine_costs[(t, i)] = (c,)
        routes[j] = JobRoutes(machine_costs, slot_ids, huge)

    return CpModel(
        inst=inst,
        p=p,
        eps=eps,
        guess=guess,
        small_machines=small_machines,
        pattern_mass=pattern_mass,
        load_floor=load_floor,
        slots=slots,
        routes=routes,
        budgets=budgets,
        vh_machines=vh_machines,
        vh_loads=vh_loads,
        small_caps=small_caps,
    )


def _var_names(j: int, routes: JobRoutes):
    for mk in routes.machine_costs:
        yield f"m|{j}|{mk[0]}|{mk[1]}", ("m", mk)
    for s in sorted(routes.slots):
        yield f"s|{j}|{s}", ("s", s)
    for t in sorted(routes.huge):
        yield f"h|{j}|{t}", ("h", t)


def _load_var(mk) -> str:
    return f"t|{mk[0]}|{mk[1]}"


def build_cp_region(model: CpModel, with_loads: bool = False) -> LinearProgram:
    """Assignment, huge-budget and slot rows; loads live in the objective.

    with_loads adds one allowance variable per non-huge machine together
    with the rows  small_load <= t_i  and  t_i >= alpha*c_max - B_i; the
    solver iterates on this smooth formulation (the eliminated max() form
    puts a kink exactly where optima sit, which stalls float iterates and
    inflates subgradient-based gap certificates).
    """
    lp = LinearProgram()
    slot_vars: dict[int, list] = {s: [] for s in model.slots}
    budget_vars: dict[int, list] = {t: [] for t in model.budgets}
    machine_terms: dict[tuple, dict] = {mk: {} for mk in model.small_machines}
    for j in sorted(model.routes):
        row = {}
        routes = model.routes[j]
        for name, (kind, target) in _var_names(j, routes):
            lp.add_variable(name)
            row[name] = 1
            if kind == "s":
                slot_vars[target].append(name)
            elif kind == "h":
                budget_vars[target].append(name)
            else:
                machine_terms[target][name] = routes.machine_costs[target][0]
        lp.add_constraint(row, EQ, 1)
    for s in sorted(model.slots):
        if slot_vars[s]:
            lp.add_constraint({v: 1 for v in slot_vars[s]}, LE, 1)
    for t in sorted(model.budgets):
        if budget_vars[t]:
            lp.add_constraint({v: 1 for v in budget_vars[t]}, LE, model.budgets[t])
    if with_loads:
        from .lp import GE

        for mk in model.small_machines:
            tvar = lp.add_variable(_load_var(mk))
            coeffs = dict(machine_terms[mk])
            coeffs[tvar] = -1
            lp.add_constraint(coeffs, LE, 0)
            floor_val = model.load_floor[mk] - model.pattern_mass[mk]
            if floor_val > 0:
                lp.add_constraint({tvar: 1}, GE, floor_val)
    return lp


class LoadPowObjective:
    """sum over non-huge machines of max(u_i + B_i, alpha*c_max)^p plus the
    linear huge charges and the constant very-huge term."""

    def __init__(self, model: CpModel):
        self.p = model.p
        self.exact_p = is_integral(model.p)
        self.machines = []
        coeff_of: dict[tuple[int, int], dict[str, object]] = {
            mk: {} for mk in model.small_machines
        }
        self.linear: dict[str, object] = {}
        for j, routes in model.routes.items():
            for name, (kind, target) in _var_names(j, routes):
                if kind == "m":
                    coeff_of[target][name] = routes.machine_costs[target][0]
                elif kind == "h":
                    self.linear[name] = routes.huge[target][1]
        for mk in model.small_machines:
            self.machines.append(
                (mk, coeff_of[mk], model.pattern_mass[mk], model.load_floor[mk])
            )
        self.const = sum((_charge(v, model.p) for v in model.vh_loads.values()), ZERO)
        if self.exact_p:
            # expose the exact paths only when p is integral; the convex
            # solver certifies in rational arithmetic iff they exist
            self.exact_value = self._exact_value
            self.exact_gradient = self._exact_gradient
        else:
            self.const = float(self.const)

    def _pow_f(self, x: float) -> float:
        return x ** float(self.p)

    def value(self, x: dict[str, float]) -> float:
        total = float(self.const)
        for _, coeffs, B, floor_val in self.machines:
            u = sum(float(c) * x.get(v, 0.0) for v, c in coeffs.items())
            total += self._pow_f(max(u + float(B), float(floor_val)))
        total += sum(float(c) * x.get(v, 0.0) for v, c in self.linear.items())
        return total

    def gradient(self, x: dict[str, float]) -> dict[str, float]:
        g = {v: float(c) for v, c in self.linear.items()}
        pf = float(self.p)
        for _, coeffs, B, floor_val in self.machines:
            u = sum(float(c) * x.get(v, 0.0) for v, c in coeffs.items())
            load = u + float(B)
            if load >= float(floor_val):
                scale = pf * load ** (pf - 1)
                for v, c in coeffs.items():
                    g[v] = g.get(v, 0.0) + scale * float(c)
        return g

    def _exact_value(self, x: dict):
        k = int(self.p)
        total = rat(self.const)
        for _, coeffs, B, floor_val in self.machines:
            u = sum((rat(c) * x.get(v, ZERO) for v, c in coeffs.items()), ZERO)
            total += max(u + B, floor_val) ** k
        total += sum((rat(c) * x.get(v, ZERO) for v, c in self.linear.items()), ZERO)
        return total

    def _exact_gradient(self, x: dict) -> dict:
        k = int(self.p)
        g = {v: rat(c) for v, c in self.linear.items()}
        for _, coeffs, B, floor_val in self.machines:
            u = sum((rat(c) * x.get(v, ZERO) for v, c in coeffs.items()), ZERO)
            load = u + B
            if load >= floor_val:
                scale = k * load ** (k - 1)
                for v, c in coeffs.items():
                    g[v] = g.get(v, ZERO) + scale * rat(c)
        return g


class _SmoothLoadObjective:
    """(t_i + B_i)^p over explicit allowance variables, plus linear charges.

    Differentiable everywhere; the conditional-gradient certificate is the
    plain gradient gap.  Used only inside the solver; reporting and the
    frozen-allowance LP use the eliminated form.
    """

    def __init__(self, model: CpModel):
        self.p = model.p
        self.exact_p = is_integral(model.p)
        self.terms = [
            (_load_var(mk), model.pattern_mass[mk]) for mk in model.small_machines
        ]
        self.linear: dict[str, object] = {}
        for j, routes in model.routes.items():
            for t in routes.huge:
                self.linear[f"h|{j}|{t}"] = routes.huge[t][1]
        self.const = sum((_charge(v, model.p) for v in model.vh_loads.values()), ZERO)
        if self.exact_p:
            self.exact_value = self._exact_value
            self.exact_gradient = self._exact_gradient
        else:
            self.const = float(self.const)

    def value(self, x: dict[str, float]) -> float:
        pf = float(self.p)
        total = float(self.const)
        for tvar, B in self.terms:
            total += (x.get(tvar, 0.0) + float(B)) ** pf
        total += sum(float(c) * x.get(v, 0.0) for v, c in self.linear.items())
        return total

    def gradient(self, x: dict[str, float]) -> dict[str, float]:
        pf = float(self.p)
        g = {v: float(c) for v, c in self.linear.items()}
        for tvar, B in self.terms:
            g[tvar] = pf * (x.get(tvar, 0.0) + float(B)) ** (pf - 1)
        return g

    def _exact_value(self, x: dict):
        k = int(self.p)
        total = rat(self.const)
        for tvar, B in self.terms:
            total += (x.get(tvar, ZERO) + B) ** k
        total += sum((rat(c) * x.get(v, ZERO) for v, c in self.linear.items()), ZERO)
        return total

    def _exact_gradient(self, x: dict) -> dict:
        k = int(self.p)
        g = {v: rat(c) for v, c in self.linear.items()}
        for tvar, B in self.terms:
            g[tvar] = k * (x.get(tvar, ZERO) + B) ** (k - 1)
        return g


def additive_tolerance(model: CpModel, incumbent: float) -> float:
    """eps^p (min alpha*c_max)^p / 4, floored at 1e-6 of the incumbent."""
    floors = [v for v in model.load_floor.values() if v > 0]
    if floors:
        base = float(rat(model.eps) ** 1) ** float(model.p) * float(min(floors)) ** float(model.p) / 4
    else:
        base = 0.0
    return max(base, 1e-6 * abs(incumbent), 1e-9)


def solve_slot_cp(
    model: CpModel, additive_tol: float | None = None, start: dict | None = None
) -> CpSolution:
    """Certified additive-error solve of the convex relaxation.

    The solver iterates over explicit allowance variables (smooth
    objective); the returned allowances are then the analytic elimination
    t_i = max(small_load, alpha*c_max - B_i), which never increases the
    objective, so the certificate carries over to the reported values.
    """
    region = build_cp_region(model, with_loads=True)
    eliminated = LoadPowObjective(model)
    smooth = _SmoothLoadObjective(model)
    if start is not None:
        start = dict(start)
        for mk, coeffs, B, floor_val in eliminated.machines:
            u = sum((rat(c) * rat(start.get(v, 0)) for v, c in coeffs.items()), ZERO)
            start[_load_var(mk)] = max(u, floor_val - B)
        _assert_region_point(region, start)
    if additive_tol is None:
        probe = start or {v: 0 for v in region.variables}
        incumbent = smooth.value({v: float(rat(x)) for v, x in probe.items()})
        additive_tol = additive_tolerance(model, incumbent)
    res: ConvexSolveResult = solve_convex_over_polytope(
        region, smooth, additive_tol, start=start
    )
    # drop the allowance coordinates and re-evaluate at their eliminated
    # values; the point only improves, so f(x) - f* <= gap still holds
    x_routes = {v: val for v, val in res.x.items() if not v.startswith("t|")}
    t_star = {}
    for mk, coeffs, B, floor_val in eliminated.machines:
        u = sum((rat(c) * x_routes.get(v, ZERO) for v, c in coeffs.items()), ZERO)
        t_star[mk] = max(u, floor_val - B)
    if eliminated.exact_p:
        reported = float(eliminated.exact_value(x_routes))
    else:
        reported = eliminated.value({v: float(val) for v, val in x_routes.items()})
    return CpSolution(
        x=x_routes,
        t_star=t_star,
        objective_value=reported,
        duality_gap=res.duality_gap,
        iterations=res.iterations,
    )


def _assert_region_point(region: LinearProgram, point: dict) -> None:
    from .lp import GE

    vals = {v: rat(point.get(v, 0)) for v in region.variables}
    for c in region.constraints:
        lhs = sum((a * vals[v] for v, a in c.coeffs.items()), ZERO)
        if c.rel == LE:
            ok = lhs <= c.rhs
        elif c.rel == GE:
            ok = lhs >= c.rhs
        else:
            ok = lhs == c.rhs
        assert ok, "warm-start point is not exactly feasible"


def build_rounding_from_cp(model: CpModel, t_star: dict) -> RoundingProblem:
    return RoundingProblem(
        dims=1,
        jobs=model.routes,
        slots=model.slots,
        capacities={mk: (t_star[mk],) for mk in model.small_machines},
        small_caps={mk: model.small_caps[mk] for mk in model.small_machines},
        type_budgets=dict(model.budgets),
        job_class=lambda j, t: _lp_job_class(model, j, t),
        leaf_raw_cost=lambda j, t: rat(model.inst.cost(j, t)),
    )


def _lp_job_class(model: CpModel, j: int, t: int):
    tg = model.guess.types[t]
    if tg.c_max is None:
        return None
    c = rat(model.inst.cost(j, t))
    if c > rat(tg.c_max) or c <= rat(model.eps) * tg.alpha * rat(tg.c_max):
        return None
    return size_class(c, model.eps)


def build_lp_from_cp(model: CpModel, t_star: dict) -> LinearProgram:
    """The frozen-allowance Slot-LP (objective: huge charges only)."""
    lp, _, _ = RoundingEngine(build_rounding_from_cp(model, t_star))._build_lp()
    return lp


# ---------------------------------------------------------------------------
# full pipeline


@dataclass
class LpnormRun:
    schedule: Schedule
    objective_pow: object
    cp_objective: float
    cp_gap: float
    cp_tolerance: float
    guess: Guess
    stats: RoundingStats
    forest: dict = field(default_factory=dict)


@dataclass
class LpnormResult:
    schedule: Schedule
    objective_pow: object
    eps_internal: object
    guesses_tried: int
    run: LpnormRun


def _warm_start(model: CpModel, sched: Schedule) -> dict:
    """Exact CP point induced by a schedule consistent with the guess."""
    inst = model.inst
    eps = model.eps
    point: dict[str, object] = {}
    slot_pool: dict[tuple[tuple[int, int], int], list[int]] = {}
    for s, info in sorted(model.slots.items()):
        slot_pool.setdefault((info.machine, info.klass), []).append(s)
    # map original machines to canonical pattern positions, per type
    for t, tg in enumerate(model.guess.types):
        if inst.machine_counts[t] == 0:
            continue
        jobs_by_machine: dict[int, list[int]] = {
            k: [] for k in range(inst.machine_counts[t])
        }
        for j, (tt, k) in enumerate(sched.assignment):
            if tt == t:
                jobs_by_machine[k].append(j)
        non_huge_orig = [k for k in jobs_by_machine if len(jobs_by_machine[k]) != 1]
        if tg.c_max is None:
            continue
        threshold = rat(eps) * tg.alpha * rat(tg.c_max)

        def pattern_of(k):
            return tuple(
                sorted(
                    size_class(inst.cost(j, t), eps)
                    for j in jobs_by_machine[k]
                    if rat(inst.cost(j, t)) > threshold
                )
            )

        ordered = sorted(non_huge_orig, key=lambda k: (pattern_of(k), k))
        for canon, orig in enumerate(ordered):
            mk = (t, canon)
            assert pattern_of(orig) == tg.profile[canon], "profile out of sync"
            for j in jobs_by_machine[orig]:
                c = rat(inst.cost(j, t))
                if c > threshold:
                    e = size_class(c, eps)
                    s = slot_pool[(mk, e)].pop(0)
                    point[f"s|{j}|{s}"] = ONE
                else:
                    point[f"m|{j}|{mk[0]}|{mk[1]}"] = ONE
    # remaining unpinned jobs on huge machines travel the huge route
    pinned = set(model.vh_machines)
    for j, routes in model.routes.items():
        covered = any(
            point.get(name, ZERO) == ONE for name, _ in _var_names(j, routes)
        )
        if not covered and j not in pinned:
            t = sched.assignment[j][0]
            assert t in routes.huge, "guided schedule routed a job outside the guess"
            point[f"h|{j}|{t}"] = ONE
    return point


def _assemble_schedule(model: CpModel, final) -> Schedule:
    inst = model.inst
    assignment: list = [None] * inst.num_jobs
    for j, mk in model.vh_machines.items():
        assignment[j] = mk
    for j, mk in final.machine_assign.items():
        assert assignment[j] is None
        assignment[j] = mk
    for s, j in final.slot_assign.items():
        assert assignment[j] is None
        assignment[j] = model.slots[s].machine
    free_huge: dict[int, list[tuple[int, int]]] = {}
    for t, tg in enumerate(model.guess.types):
        non_huge = inst.machine_counts[t] - tg.huge_count
        first_free = non_huge + len(tg.very_huge)
        free_huge[t] = [(t, k) for k in range(first_free, inst.machine_counts[t])]
    for j in sorted(final.huge_assign):
        t = final.huge_assign[j]
        assert free_huge[t], "huge budget exceeded the free machines"
        mk = free_huge[t].pop(0)
        assert assignment[j] is None
        assignment[j] = mk
    for t, members in sorted(final.improper.items()):
        if not members:
            continue
        assert free_huge[t], "no free machine left for the improper lineup"
        mk = free_huge[t].pop(0)
        for j in members:
            assert assignment[j] is None
            assignment[j] = mk
    assert all(a is not None for a in assignment), "schedule not total"
    return Schedule(tuple(assignment))


def _run_guess(inst: Instance, p, eps, guess: Guess, start_schedule=None, cp_tol=None) -> LpnormRun:
    model = build_cp_model(inst, p, eps, guess)
    start = _warm_start(model, start_schedule) if start_schedule is not None else None
    if cp_tol is not None:
        tol = cp_tol
    else:
        objective = LoadPowObjective(model)
        if start is not None:
            incumbent = float(objective.exact_value({v: rat(x) for v, x in start.items()})
                              if objective.exact_p else objective.value({v: float(x) for v, x in start.items()}))
        else:
            incumbent = objective.value({v: 0.0 for v in build_cp_region(model).variables})
        tol = additive_tolerance(model, incumbent)
    cp = solve_slot_cp(model, tol, start=start)
    problem = build_rounding_from_cp(model, cp.t_star)
    engine = RoundingEngine(problem)
    outcome = engine.run()  # CP point is LP-feasible, so Infeasible cannot fire
    final = untangle(problem, outcome)
    schedule = _assemble_schedule(model, final)
    total = evaluate_lp_norm_pow(inst, schedule, p)
    _assert_quality_chain(model, cp, final, total, tol)
    return LpnormRun(
        schedule=schedule,
        objective_pow=total,
        cp_objective=cp.objective_value,
        cp_gap=cp.duality_gap,
        cp_tolerance=tol,
        guess=guess,
        stats=engine.stats,
        forest=outcome.forest,
    )


def _assert_quality_chain(model: CpModel, cp: CpSolution, final, total, tol) -> None:
    eps = rat(model.eps)
    # per-machine bound: g_i <= (1+eps) B_i + t*_i + 3 eps alpha c_max
    for mk in model.small_machines:
        load = final.final_loads.get(mk, [ZERO])[0]
        slot_true = ZERO
        for s, j in final.slot_assign.items():
            if model.slots[s].machine == mk:
                slot_true += rat(model.inst.cost(j, mk[0]))
        g = load + slot_true
        bound = (ONE + eps) * model.pattern_mass[mk] + cp.t_star[mk] + 3 * model.small_caps[mk]
        assert g <= bound, "per-machine load above the rounding bound"
    if is_integral(model.p):
        # whole-solution chain against the certified relaxation value
        factor = float((ONE + 4 * eps) ** int(model.p))
        assert float(total) <= factor * (cp.objective_value + 1e-9) * (1 + 1e-9), (
            "final cost above (1+4eps)^p times the relaxation value"
        )


def lpnorm_ptas(inst: Instance, p, eps_user, mode, cp_tol=None) -> LpnormResult:
    """Schedule with ||g||_p <= (1 + eps_user) * OPT_p."""
    require_valid(inst)
    if inst.dims != 1:
        raise DimensionMismatch("L_p pipeline requires D=1")
    p = parse_rational(p)
    if p <= 1:
        raise BadExponent(f"need p > 1, got {p}")
    eps_user = parse_rational(eps_user)
    eps = calibrate_eps(eps_user)

    if isinstance(mode, Guided):
        guess = guess_from_schedule(inst, p, eps, mode.schedule)
        run = _run_guess(inst, p, eps, guess, start_schedule=mode.schedule, cp_tol=cp_tol)
        return LpnormResult(run.schedule, run.objective_pow, eps, 1, run)

    best: LpnormRun | None = None
    tried = 0
    for guess in enumerate_guesses(inst, p, eps, mode.budget):
        tried += 1
        if best is not None and _guess_lower_bound(inst, p, eps, guess) > rat(best.objective_pow):
            continue
        try:
            run = _run_guess(inst, p, eps, guess, cp_tol=cp_tol)
        except (Infeasible, InfeasibleRegion, GuessInconsistent):
            continue  # wrong guess, not an instance failure
        if best is None or rat(run.objective_pow) < rat(best.objective_pow):
            best = run
    assert best is not None, "no guess produced a schedule"
    return LpnormResult(best.schedule, best.objective_pow, eps, tried, best)


def _guess_lower_bound(inst: Instance, p, eps, guess: Guess):
    """Cheap certified lower bound on any schedule consistent with the guess."""
    total = ZERO
    for t, tg in enumerate(guess.types):
        for j in tg.very_huge:
            total += _charge(inst.cost(j, t), p)
        if tg.c_max is None:
            continue
        floor_val = tg.alpha * rat(tg.c_max)
        for pat in tg.profile:
            mass = sum((class_size(e, eps) for e in pat), ZERO)
            total += _charge(max(floor_val, mass), p)
    return total
