"""Exact-arithmetic linear programming with extreme-point guarantees.

The rounding arguments of both approximation pipelines count *exactly*
fractional variables, so the solver works in rational arithmetic end to
end and "fractional" means value not in {0, 1} with no tolerance.  The
two-phase simplex below uses Bland's rule (termination without cycling)
and returns basic feasible solutions: the number of variables with
positive value never exceeds the number of constraint rows, which is the
sparsity the rounding counting arguments rely on.

Equality constraints are handled natively via phase-1 artificials rather
than split into inequality pairs, keeping row counts aligned with the
counting arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import Infeasible, Unbounded
from .rationals import ONE, ZERO, rat, rat_str

LE, EQ, GE = "<=", "=", ">="
_RELATIONS = (LE, EQ, GE)


@dataclass
class Constraint:
    coeffs: dict[str, object]
    rel: str
    rhs: object

    def __post_init__(self):
        if self.rel not in _RELATIONS:
            raise ValueError(f"unknown relation {self.rel!r}")
        self.coeffs = {v: rat(c) for v, c in self.coeffs.items() if rat(c) != 0}
        self.rhs = rat(self.rhs)


@dataclass
class LinearProgram:
    """min c.x  s.t. rows, x >= 0.  Empty objective = pure feasibility."""

    variables: list[str] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        self._index = {v: j for j, v in enumerate(self.variables)}

    def add_variable(self, name: str, objective=0) -> str:
        if name in self._index:
            raise ValueError(f"duplicate variable {name!r}")
        self._index[name] = len(self.variables)
        self.variables.append(name)
        coeff = rat(objective)
        if coeff != 0:
            self.objective[name] = coeff
        return name

    def add_constraint(self, coeffs: dict, rel: str, rhs) -> None:
        for v in coeffs:
            if v not in self._index:
                raise ValueError(f"constraint references undeclared variable {v!r}")
        self.constraints.append(Constraint(dict(coeffs), rel, rhs))

    @property
    def num_rows(self) -> int:
        return len(self.constraints)


@dataclass(frozen=True)
class ExtremePointSolution:
    values: dict[str, object]
    basis: tuple[str, ...]
    objective_value: object

    def positives(self) -> dict[str, object]:
        return {v: x for v, x in self.values.items() if x > 0}

    def fractionals(self) -> dict[str, object]:
        return {v: x for v, x in self.values.items() if 0 < x < 1}


class _Tableau:
    """Dense simplex tableau over exact rationals."""

    def __init__(self, rows, rhs, ncols):
        self.rows = rows            # list of lists, len ncols each
        self.rhs = rhs              # list
        self.ncols = ncols
        self.basis = [-1] * len(rows)

    def pivot(self, r: int, c: int) -> None:
        row = self.rows[r]
        piv = row[c]
        if piv != ONE:
            inv = ONE / piv
            self.rows[r] = row = [a * inv for a in row]
            self.rhs[r] = self.rhs[r] * inv
        for k, other in enumerate(self.rows):
            if k == r:
                continue
            factor = other[c]
            if factor == 0:
                continue
            self.rows[k] = [a - factor * b for a, b in zip(other, row)]
            self.rhs[k] = self.rhs[k] - factor * self.rhs[r]
        self.basis[r] = c


def _reduced_costs(tab: _Tableau, cost):
    """Cost row for the current basis: c - c_B B^-1 A, plus objective offset."""
    red = list(cost)
    offset = ZERO
    for r, b in enumerate(tab.basis):
        cb = red[b]
        if cb == 0:
            continue
        row = tab.rows[r]
        red = [a - cb * e for a, e in zip(red, row)]
        offset = offset + cb * tab.rhs[r]
    return red, offset


def _run_simplex(tab: _Tableau, cost, banned: set[int]):
    """Bland's-rule simplex to optimality.  Returns objective value."""
    red, offset = _reduced_costs(tab, cost)
    guard = 0
    limit = 2000 + 200 * (len(tab.rows) + tab.ncols)
    while True:
        guard += 1
        if guard > limit:  # Bland's rule terminates; this is a bug trip-wire
            raise RuntimeError("simplex exceeded its pivot guard")
        enter = -1
        for c in range(tab.ncols):
            if c in banned:
                continue
            if red[c] < 0:
                enter = c
                break
        if enter < 0:
            return offset
        leave = -1
        best = None
        for r, row in enumerate(tab.rows):
            a = row[enter]
            if a > 0:
                ratio = tab.rhs[r] / a
                if best is None or ratio < best or (
                    ratio == best and tab.basis[r] < tab.basis[leave]
                ):
                    best = ratio
                    leave = r
        if leave < 0:
            raise Unbounded("objective unbounded below")
        piv_cost = red[enter]
        tab.pivot(leave, enter)
        row = tab.rows[leave]
        red = [a - piv_cost * b for a, b in zip(red, row)]
        red[enter] = ZERO
        offset = offset + piv_cost * tab.rhs[leave]


def solve_extreme_point(lp: LinearProgram) -> ExtremePointSolution:
    """Optimal basic feasible solution of lp, exact.

    Raises Infeasible when no point satisfies the constraints and Unbounded
    when the minimum does not exist.  For feasibility-sense programs (empty
    objective) any vertex of the feasible region is returned.
    """
    nvars = len(lp.variables)
    index = {v: j for j, v in enumerate(lp.variables)}

    nslack = sum(1 for c in lp.constraints if c.rel != EQ)
    rows: list[list] = []
    rhs: list = []
    seed_col: list[int | None] = []

    # Normalize every row to  a.x (+ slack) = b with b >= 0.  A slack whose
    # coefficient stays +1 after the sign flip seeds the basis; every other
    # row gets a phase-1 artificial.
    col = nvars
    for c in lp.constraints:
        coeffs = [ZERO] * (nvars + nslack)
        for v, a in c.coeffs.items():
            coeffs[index[v]] = a
        b = c.rhs
        slack = None
        if c.rel != EQ:
            coeffs[col] = ONE if c.rel == LE else -ONE
            slack = col
            col += 1
        if b < 0:
            coeffs = [-a for a in coeffs]
            b = -b
        rows.append(coeffs)
        rhs.append(b)
        seed_col.append(slack if slack is not None and coeffs[slack] == ONE else None)

    nart = sum(1 for s in seed_col if s is None)
    total = nvars + nslack + nart
    art_cols = set()
    ai = nvars + nslack
    tab_rows = []
    basis_seed = []
    for r in range(len(rows)):
        row = rows[r] + [ZERO] * nart
        if seed_col[r] is None:
            row[ai] = ONE
            basis_seed.append(ai)
            art_cols.add(ai)
            ai += 1
        else:
            basis_seed.append(seed_col[r])
        tab_rows.append(row)

    tab = _Tableau(tab_rows, list(rhs), total)
    tab.basis = basis_seed

    if art_cols:
        phase1 = [ZERO] * total
        for c in art_cols:
            phase1[c] = ONE
        value = _run_simplex(tab, phase1, banned=set())
        if value > 0:
            raise Infeasible("phase-1 optimum positive")
        # Drive leftover zero-valued artificials out of the basis; a row with
        # no structural pivot candidate is redundant and can be dropped.
        drop = []
        for r in range(len(tab.rows)):
            if tab.basis[r] in art_cols:
                for c in range(total):
                    if c not in art_cols and tab.rows[r][c] != 0:
                        tab.pivot(r, c)
                        break
                else:
                    drop.append(r)
        for r in reversed(drop):
            del tab.rows[r]
            del tab.rhs[r]
            del tab.basis[r]

    cost = [ZERO] * total
    for v, a in lp.objective.items():
        cost[index[v]] = rat(a)
    _run_simplex(tab, cost, banned=art_cols)

    values = {v: ZERO for v in lp.variables}
    for r, b in enumerate(tab.basis):
        if b < nvars:
            values[lp.variables[b]] = tab.rhs[r]
    objective_value = sum(
        (rat(a) * values[v] for v, a in lp.objective.items()), ZERO
    )
    basis_names = tuple(
        lp.variables[b] if b < nvars else f"_col{b}" for b in sorted(tab.basis)
    )
    sol = ExtremePointSolution(values=values, basis=basis_names, objective_value=objective_value)
    assert len(sol.positives()) <= lp.num_rows, "extreme point lost basic sparsity"
    return sol


def lp_format(lp: LinearProgram) -> str:
    """Text rendering in LP-file style, for eyeballing and external cross-checks."""
    def term(v, a):
        a = rat(a)
        sign = "+" if a >= 0 else "-"
        mag = abs(a)
        return f"{sign} {rat_str(mag)} {v}"

    lines = ["Minimize"]
    obj = " ".join(term(v, a) for v, a in lp.objective.items()) or "+ 0 zero"
    lines.append(f" obj: {obj}")
    lines.append("Subject To")
    for i, c in enumerate(lp.constraints):
        body = " ".join(term(v, a) for v, a in c.coeffs.items()) or "+ 0 zero"
        lines.append(f" r{i}: {body} {c.rel} {rat_str(c.rhs)}")
    lines.append("Bounds")
    for v in lp.variables:
        lines.append(f" 0 <= {v}")
    lines.append("End")
    return "\n".join(lines)
