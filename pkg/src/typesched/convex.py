"""Convex minimization over a polytope with a duality-gap certificate.

Conditional-gradient (Frank-Wolfe) scheme: every linear subproblem is an
exact extreme-point LP solve, iterates are kept as convex combinations of
the returned vertices, and line search keeps the objective monotone.  The
additive-error certificate is the standard gap  g(x) = grad f(x) . (x - s)
with s the linearization minimizer; for objectives that expose exact
rational gradients the final gap is certified in exact arithmetic at an
exactly feasible point (the convex combination is re-normalized in
rationals), so the reported bound f(x) - f* <= gap carries no float slack.

Away/pairwise steps are used when they descend faster than the plain
Frank-Wolfe step; the step size 2/(k+2) bounds the default step, with the
univariate line search only ever shrinking it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

from .errors import Infeasible, InfeasibleRegion, ToleranceNotReached
from .lp import EQ, LE, LinearProgram, solve_extreme_point
from .rationals import ZERO, rat


class ConvexObjective(Protocol):
    def value(self, x: dict[str, float]) -> float: ...

    def gradient(self, x: dict[str, float]) -> dict[str, float]: ...

    # optional: exact_value(x) / exact_gradient(x) over rationals


@dataclass
class ConvexSolveResult:
    x: dict[str, object]           # exact rationals, exactly feasible
    objective_value: float
    duality_gap: float
    iterations: int
    objective_trace: list[float] = field(default_factory=list)


def _feasibility_vertex(lp: LinearProgram) -> dict[str, object]:
    probe = LinearProgram()
    for v in lp.variables:
        probe.add_variable(v)
    probe.constraints = lp.constraints
    try:
        return dict(solve_extreme_point(probe).values)
    except Infeasible as exc:
        raise InfeasibleRegion("empty polytope") from exc


def _lmo(lp: LinearProgram, gradient: dict) -> dict[str, object]:
    """Vertex minimizing the linearization; gradient entries may be float or rational."""
    lp.objective = {v: rat(g) for v, g in gradient.items() if g != 0}
    return dict(solve_extreme_point(lp).values)


def _line_search(fun, lo: float, hi: float, evals: int = 64) -> float:
    """Minimize a convex univariate function on [lo, hi] by ternary search."""
    a, b = lo, hi
    for _ in range(evals):
        m1 = a + (b - a) / 3
        m2 = b - (b - a) / 3
        if fun(m1) <= fun(m2):
            b = m2
        else:
            a = m1
    return (a + b) / 2


def _diameter_estimate(lp: LinearProgram) -> float:
    """Crude per-variable upper bounds from all-nonnegative rows, default 1."""
    ub = {v: None for v in lp.variables}
    for c in lp.constraints:
        if c.rel not in (LE, EQ) or c.rhs < 0:
            continue
        if any(a < 0 for a in c.coeffs.values()):
            continue
        for v, a in c.coeffs.items():
            if a > 0:
                bound = c.rhs / a
                if ub[v] is None or bound < ub[v]:
                    ub[v] = bound
    return math.sqrt(sum(float(b if b is not None else 1) ** 2 for b in ub.values())) or 1.0


def _exactify(active: list[tuple[dict, float]], variables) -> dict[str, object]:
    """Exactly feasible point: rationalized weights renormalized to sum 1."""
    weights = []
    scale = 1 << 48
    for _, w in active:
        weights.append(rat(max(0, round(w * scale)), scale))
    total = sum(weights, ZERO)
    assert total > 0
    x = {v: ZERO for v in variables}
    for (vertex, _), w in zip(active, weights):
        if w == 0:
            continue
        share = w / total
        for v, val in vertex.items():
            if val != 0:
                x[v] = x[v] + share * val
    return x


def solve_convex_over_polytope(
    region: LinearProgram,
    objective: ConvexObjective,
    additive_tol: float,
    start: dict | None = None,
    max_iterations: int | None = None,
) -> ConvexSolveResult:
    """Minimize a convex differentiable objective to additive_tol over region.

    region carries the constraints (its objective, if any, is ignored);
    start may supply an exactly feasible warm-start point.
    """
    if additive_tol <= 0:
        raise ValueError("additive_tol must be positive")
    lp = LinearProgram()
    for v in region.variables:
        lp.add_variable(v)
    lp.constraints = region.constraints

    if start is not None:
        base = {v: rat(start.get(v, 0)) for v in region.variables}
    else:
        base = _feasibility_vertex(lp)
    active: list[tuple[dict, float]] = [(base, 1.0)]
    x = {v: float(val) for v, val in base.items()}

    if max_iterations is None:
        max_iterations = min(
            500_000, max(1000, int(10 * math.ceil(1 / additive_tol) * _diameter_estimate(lp)))
        )

    exact_mode = hasattr(objective, "exact_gradient")
    trace = [objective.value(x)]
    last_gap = math.inf

    def certify() -> ConvexSolveResult | None:
        x_ex = _exactify(active, region.variables)
        if exact_mode:
            g_ex = objective.exact_gradient(x_ex)
            s_ex = _lmo(lp, g_ex)
            gap_ex = sum(
                (g * (x_ex[v] - s_ex[v]) for v, g in g_ex.items()), ZERO
            )
            assert gap_ex >= 0
            if gap_ex <= rat(additive_tol):
                value = objective.exact_value(x_ex) if hasattr(objective, "exact_value") else None
                fval = float(value) if value is not None else objective.value(
                    {v: float(val) for v, val in x_ex.items()}
                )
                return ConvexSolveResult(x_ex, fval, float(gap_ex), iteration, trace)
            return None
        xf = {v: float(val) for v, val in x_ex.items()}
        g = objective.gradient(xf)
        s = _lmo(lp, g)
        gap = sum(g.get(v, 0.0) * (xf[v] - float(s[v])) for v in region.variables)
        gap = max(gap, 0.0)
        if gap <= additive_tol * (1 - 1e-9):
            return ConvexSolveResult(x_ex, objective.value(xf), gap, iteration, trace)
        return None

    def value_at(point):
        return objective.value(point)

    def correct_over_active() -> float:
        """Pairwise weight transfers among the active vertices (no LP calls).

        These fully-corrective passes remove the zig-zagging that makes the
        plain conditional-gradient step slow once the optimal face is known.
        """
        current = trace[-1]
        for _ in range(40):
            if len(active) < 2:
                break
            g = objective.gradient(x)
            scores = [
                sum(g.get(v, 0.0) * float(val) for v, val in vert.items())
                for vert, _ in active
            ]
            hi = max(
                (i for i in range(len(active)) if active[i][1] > 1e-15),
                key=lambda i: scores[i],
            )
            lo = min(range(len(active)), key=lambda i: scores[i])
            if hi == lo or scores[hi] - scores[lo] <= 1e-14 * (1 + abs(current)):
                break
            hi_vert, hi_weight = active[hi]
            lo_vert = active[lo][0]
            d = {
                v: float(lo_vert.get(v, 0)) - float(hi_vert.get(v, 0))
                for v in set(lo_vert) | set(hi_vert)
            }
            gamma = _line_search(
                lambda t: value_at({v: x[v] + t * d.get(v, 0.0) for v in x}),
                0.0,
                hi_weight,
            )
            probe = {v: x[v] + gamma * d.get(v, 0.0) for v in x}
            val = value_at(probe)
            if val >= current:
                break
            active[hi] = (hi_vert, hi_weight - gamma)
            active[lo] = (lo_vert, active[lo][1] + gamma)
            x.update(probe)
            current = val
            active[:] = [(vert, w) for vert, w in active if w > 1e-15]
        return current

    iteration = 0
    while iteration < max_iterations:
        iteration += 1
        g = objective.gradient(x)
        s = _lmo(lp, g)
        sf = {v: float(val) for v, val in s.items()}
        gap = sum(g.get(v, 0.0) * (x[v] - sf[v]) for v in region.variables)
        last_gap = gap

        if gap <= 0.5 * additive_tol:
            result = certify()
            if result is not None:
                return result

        d_fw = {v: sf.get(v, 0.0) - x[v] for v in x}
        g_fw = _line_search(
            lambda t: value_at({v: x[v] + t * d_fw.get(v, 0.0) for v in x}), 0.0, 1.0
        )
        moved = {v: x[v] + g_fw * d_fw.get(v, 0.0) for v in x}
        val_fw = value_at(moved)

        current = trace[-1]
        if val_fw <= current:
            active[:] = [(vert, w * (1 - g_fw)) for vert, w in active]
            _add_vertex(active, s, g_fw)
            x.update(moved)
            trace.append(val_fw)
        else:
            trace.append(current)
        trace[-1] = correct_over_active()
        active[:] = [(vert, w) for vert, w in active if w > 1e-15]

        if val_fw > current and trace[-1] >= current:
            # no float-visible descent in any direction; certification decides
            result = certify()
            if result is not None:
                return result

    result = certify()
    if result is not None:
        return result
    raise ToleranceNotReached(last_gap, additive_tol, iteration)


def _add_vertex(active: list, vertex: dict, weight: float) -> None:
    if weight <= 0:
        return
    for i, (vert, w) in enumerate(active):
        if vert == vertex:
            active[i] = (vert, w + weight)
            return
    active.append((vertex, weight))
