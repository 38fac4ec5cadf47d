"""Batch front end: instance generation, solving, auditing, reporting.

Subcommands
  gen     write a random instance file
  solve   run an approximation pipeline on an instance file
  oracle  exact brute-force solve
  bench   seeded experiment batch with oracle-relative ratios and audits
  audit   standalone invariant audits (LP equivalence, power-mean, loads)

Reports are emitted as sorted-key JSON (byte-stable for a given config and
seed) or as a plain text table.  Exit code 0 means every trial succeeded
and every audited bound held.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

from . import audits, lpnorm, makespan
from .errors import BudgetExhausted, Infeasible, TypeschedError
from .model import (
    GeneratorSpec,
    Instance,
    generate_instance,
    instance_digest,
    instance_from_json,
    instance_to_json,
)
from .oracle import exact_solve
from .rationals import parse_rational, rat, rat_str
from .rounding import forest_dot


@dataclass(frozen=True)
class ExperimentConfig:
    objective: str               # "makespan" | "lp_norm"
    trials: int
    seed: int
    eps_user: object
    p: object = 2
    mode: str = "guided"         # "guided" | "full"
    enum_budget: int = 10**6
    jobs_max: int = 7
    machines_max: int = 4
    num_types: int = 2
    dims_choices: tuple[int, ...] = (1, 2)
    cost_min: int = 1
    cost_max: int = 10

    def trial_spec(self, index: int) -> GeneratorSpec:
        """Deterministic instance shape for one trial (spec + seed fix it)."""
        s = self.seed + index
        n = 2 + s % (self.jobs_max - 1)
        choices = self.dims_choices if self.objective == "makespan" else (1,)
        dims = choices[s % len(choices)]
        m_total = 2 + (s // 2) % (self.machines_max - 1)
        counts = [1] * self.num_types
        for i in range(m_total - self.num_types):
            counts[(s + i) % self.num_types] += 1
        return GeneratorSpec(n, dims, tuple(counts), self.cost_min, self.cost_max)


@dataclass
class Report:
    config: dict
    rows: list[dict] = field(default_factory=list)

    def summary(self) -> dict:
        ratios = [rat(parse_rational(r["ratio"])) for r in self.rows if r.get("ratio")]
        failures = [r for r in self.rows if not r.get("ok")]
        out = {
            "trials": len(self.rows),
            "failures": len(failures),
            "max_ratio": rat_str(max(ratios)) if ratios else None,
            "mean_ratio": rat_str(sum(ratios, rat(0)) / len(ratios)) if ratios else None,
        }
        return out

    @property
    def ok(self) -> bool:
        return all(r.get("ok") for r in self.rows)

    def to_json(self) -> str:
        doc = {"config": self.config, "rows": self.rows, "summary": self.summary()}
        return json.dumps(doc, indent=2, sort_keys=True)

    def to_table(self) -> str:
        header = f"{'trial':>5} {'digest':>18} {'oracle':>10} {'algo':>10} {'ratio':>10} {'ok':>4}  note"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            lines.append(
                f"{r['trial']:>5} {r['digest']:>18} {r.get('oracle', '-'):>10} "
                f"{r.get('algorithm', '-'):>10} {r.get('ratio', '-'):>10} "
                f"{'yes' if r.get('ok') else 'NO':>4}  {r.get('error', '')}"
            )
        s = self.summary()
        lines.append("-" * len(header))
        lines.append(
            f"trials={s['trials']} failures={s['failures']} "
            f"max_ratio={s['max_ratio']} mean_ratio={s['mean_ratio']}"
        )
        return "\n".join(lines)


def _stats_row(stats) -> dict:
    return {
        "lp_solves": stats.lp_solves,
        "rounding_iterations": stats.iterations,
        "machine_drops": stats.case_machine_drop,
        "slot_merges": stats.case_slot_merge,
        "improper_types": stats.case_improper,
        "counting_checks": stats.counting_checks,
        "art_lp_solves": stats.art_lp_solves,
    }


def run_experiment(cfg: ExperimentConfig) -> Report:
    """Execute trials; every pipeline invariant stays asserted (always on)."""
    bound = 1 + rat(parse_rational(cfg.eps_user))
    report = Report(
        config={
            "objective": cfg.objective,
            "trials": cfg.trials,
            "seed": cfg.seed,
            "eps_user": rat_str(parse_rational(cfg.eps_user)),
            "p": rat_str(parse_rational(cfg.p)),
            "mode": cfg.mode,
            "enum_budget": cfg.enum_budget,
        }
    )
    for i in range(cfg.trials):
        inst = generate_instance(cfg.trial_spec(i), cfg.seed + i)
        row = {"trial": i, "digest": instance_digest(inst)}
        try:
            if cfg.objective == "makespan":
                opt = exact_solve(inst)
                mode = (
                    makespan.Guided(opt.witness)
                    if cfg.mode == "guided"
                    else makespan.FullEnum(cfg.enum_budget)
                )
                res = makespan.makespan_ptas(inst, cfg.eps_user, mode)
                algo_val = rat(res.makespan)
                oracle_val = rat(opt.optimum)
                ratio = algo_val / oracle_val
                row["probes"] = res.probes
                merged = _merge_stats(res.probe_stats)
            else:
                opt = exact_solve(inst, "lp_norm", p=cfg.p)
                mode = (
                    lpnorm.Guided(opt.witness)
                    if cfg.mode == "guided"
                    else lpnorm.FullEnum(cfg.enum_budget)
                )
                res = lpnorm.lpnorm_ptas(inst, cfg.p, cfg.eps_user, mode)
                # compare the norms, not their p-th powers
                pval = parse_rational(cfg.p)
                algo_val = rat(res.objective_pow)
                oracle_val = rat(opt.optimum)
                ratio_pow = algo_val / oracle_val
                ratio = rat(float(ratio_pow) ** (1 / float(pval)))
                row["cp_gap"] = res.run.cp_gap
                merged = _merge_stats([res.run.stats])
            row["oracle"] = rat_str(oracle_val)
            row["algorithm"] = rat_str(algo_val)
            row["ratio"] = rat_str(ratio)
            row.update(_stats_row(merged))
            within = (
                ratio <= bound
                if cfg.objective == "makespan"
                else algo_val <= bound ** int(parse_rational(cfg.p)) * oracle_val
                if parse_rational(cfg.p).denominator == 1
                else float(algo_val) <= float(bound) ** float(parse_rational(cfg.p)) * float(oracle_val)
            )
            row["ok"] = bool(within)
            if not within:
                row["error"] = "ratio bound exceeded"
        except TypeschedError as exc:
            row["ok"] = False
            row["error"] = f"{type(exc).__name__}: {exc}"
        except AssertionError as exc:
            row["ok"] = False
            row["error"] = f"InvariantViolation: {exc}"
        report.rows.append(row)
    return report


def _merge_stats(stats_list):
    from .rounding import RoundingStats

    merged = RoundingStats()
    for st in stats_list:
        merged.lp_solves += st.lp_solves
        merged.iterations += st.iterations
        merged.case_machine_drop += st.case_machine_drop
        merged.case_slot_merge += st.case_slot_merge
        merged.case_slot_single += st.case_slot_single
        merged.case_improper += st.case_improper
        merged.counting_checks += st.counting_checks
        merged.art_lp_solves += st.art_lp_solves
    return merged


# ---------------------------------------------------------------------------
# argument parsing


def _add_common_instance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--instance", required=True, help="instance JSON file")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="typesched",
        description="Approximation schemes for scheduling machines of few types",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random instance file")
    g.add_argument("--jobs", type=int, required=True)
    g.add_argument("--dims", type=int, default=1)
    g.add_argument("--machines", required=True, help="comma-separated counts per type")
    g.add_argument("--cost-min", type=int, default=1)
    g.add_argument("--cost-max", type=int, default=10)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="output path (default: stdout)")

    s = sub.add_parser("solve", help="run an approximation pipeline")
    _add_common_instance_flags(s)
    s.add_argument("--objective", choices=["makespan", "lpnorm"], default="makespan")
    s.add_argument("--eps", default="1/2", help="target accuracy eps_user (rational)")
    s.add_argument("--p", default="2", help="norm exponent for lpnorm")
    s.add_argument("--mode", choices=["guided", "full"], default="guided")
    s.add_argument("--enum-budget", type=int, default=10**6)
    s.add_argument("--cp-tol-override", type=float, default=None)
    s.add_argument("--emit-forest", action="store_true", help="dump the subsumption forest")
    s.add_argument("--format", choices=["json", "table"], default="table")
    s.add_argument("--out", help="output path (default: stdout)")

    o = sub.add_parser("oracle", help="exact brute-force solve")
    _add_common_instance_flags(o)
    o.add_argument("--objective", choices=["makespan", "lpnorm"], default="makespan")
    o.add_argument("--p", default="2")

    b = sub.add_parser("bench", help="seeded experiment batch")
    b.add_argument("--objective", choices=["makespan", "lpnorm"], default="makespan")
    b.add_argument("--trials", type=int, default=20)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--eps", default="1/2")
    b.add_argument("--p", default="2")
    b.add_argument("--mode", choices=["guided", "full"], default="guided")
    b.add_argument("--enum-budget", type=int, default=10**6)
    b.add_argument("--jobs-max", type=int, default=7)
    b.add_argument("--machines-max", type=int, default=4)
    b.add_argument("--types", type=int, default=2)
    b.add_argument("--dims", default="1,2", help="comma-separated dimension choices")
    b.add_argument("--cost-min", type=int, default=1)
    b.add_argument("--cost-max", type=int, default=10)
    b.add_argument("--format", choices=["json", "table"], default="table")
    b.add_argument("--out", help="output path (default: stdout)")

    a = sub.add_parser("audit", help="standalone invariant audits")
    a.add_argument(
        "--suite",
        choices=["lp-equiv", "power-mean", "load-diff", "all"],
        default="all",
    )
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--samples", type=int, default=None)
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _load_instance(path: str) -> Instance:
    with open(path) as fh:
        return instance_from_json(fh.read())


def _cmd_gen(args) -> int:
    counts = tuple(int(x) for x in args.machines.split(","))
    spec = GeneratorSpec(args.jobs, args.dims, counts, args.cost_min, args.cost_max)
    _emit(instance_to_json(generate_instance(spec, args.seed)), args.out)
    return 0


def _cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    eps = parse_rational(args.eps)
    doc: dict = {"objective": args.objective, "eps_user": rat_str(eps), "mode": args.mode}
    try:
        if args.objective == "makespan":
            if args.mode == "guided":
                opt = exact_solve(inst)
                mode = makespan.Guided(opt.witness)
                doc["oracle"] = rat_str(rat(opt.optimum))
            else:
                mode = makespan.FullEnum(args.enum_budget)
            res = makespan.makespan_ptas(inst, eps, mode)
            doc["makespan"] = rat_str(rat(res.makespan))
            doc["accepted_target"] = rat_str(rat(res.accepted_target))
            doc["eps_internal"] = rat_str(rat(res.eps_internal))
            doc["probes"] = res.probes
            doc["stats"] = _stats_row(_merge_stats(res.probe_stats))
            doc["schedule"] = [list(mk) for mk in res.schedule.assignment]
            forest = res.forest
        else:
            p = parse_rational(args.p)
            if args.mode == "guided":
                opt = exact_solve(inst, "lp_norm", p=p)
                mode = lpnorm.Guided(opt.witness)
                doc["oracle_pow"] = rat_str(rat(opt.optimum))
            else:
                mode = lpnorm.FullEnum(args.enum_budget)
            res = lpnorm.lpnorm_ptas(inst, p, eps, mode, cp_tol=args.cp_tol_override)
            doc["objective_pow"] = rat_str(rat(res.objective_pow))
            doc["cp_objective"] = res.run.cp_objective
            doc["cp_gap"] = res.run.cp_gap
            doc["cp_tolerance"] = res.run.cp_tolerance
            doc["guesses_tried"] = res.guesses_tried
            doc["stats"] = _stats_row(res.run.stats)
            doc["schedule"] = [list(mk) for mk in res.schedule.assignment]
            forest = res.run.forest
            if "oracle_pow" in doc:
                ratio_pow = rat(res.objective_pow) / parse_rational(doc["oracle_pow"])
                doc["norm_ratio"] = float(ratio_pow) ** (1 / float(p))
        if "oracle" in doc:
            doc["ratio"] = rat_str(rat(parse_rational(doc["makespan"])) / parse_rational(doc["oracle"]))
    except (Infeasible, BudgetExhausted) as exc:
        doc["error"] = f"{type(exc).__name__}: {exc}"
        _emit(json.dumps(doc, indent=2, sort_keys=True), args.out)
        return 1
    if args.emit_forest:
        doc["forest_dot"] = forest_dot(forest)
    if args.format == "json":
        _emit(json.dumps(doc, indent=2, sort_keys=True), args.out)
    else:
        lines = [f"{k}: {v}" for k, v in doc.items() if k not in ("schedule", "forest_dot")]
        lines.append(f"schedule: {doc['schedule']}")
        if args.emit_forest:
            lines.append(doc["forest_dot"])
        _emit("\n".join(lines), args.out)
    return 0


def _cmd_oracle(args) -> int:
    inst = _load_instance(args.instance)
    if args.objective == "makespan":
        res = exact_solve(inst)
    else:
        res = exact_solve(inst, "lp_norm", p=parse_rational(args.p))
    doc = {
        "optimum": rat_str(rat(res.optimum)) if not isinstance(res.optimum, float) else res.optimum,
        "explored": res.explored,
        "schedule": [list(mk) for mk in res.witness.assignment],
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def _cmd_bench(args) -> int:
    cfg = ExperimentConfig(
        objective="makespan" if args.objective == "makespan" else "lp_norm",
        trials=args.trials,
        seed=args.seed,
        eps_user=parse_rational(args.eps),
        p=parse_rational(args.p),
        mode=args.mode,
        enum_budget=args.enum_budget,
        jobs_max=args.jobs_max,
        machines_max=args.machines_max,
        num_types=args.types,
        dims_choices=tuple(int(d) for d in args.dims.split(",")),
        cost_min=args.cost_min,
        cost_max=args.cost_max,
    )
    report = run_experiment(cfg)
    _emit(report.to_json() if args.format == "json" else report.to_table(), args.out)
    return 0 if report.ok else 1


def _cmd_audit(args) -> int:
    runs = []
    if args.suite in ("lp-equiv", "all"):
        runs.append(audits.lp_equivalence_audit(args.samples or 100, args.seed))
    if args.suite in ("power-mean", "all"):
        runs.append(audits.power_mean_audit(args.samples or 1000, args.seed))
    if args.suite in ("load-diff", "all"):
        runs.append(audits.load_difference_audit(args.samples or 40, args.seed))
    ok = True
    for res in runs:
        status = "pass" if res.ok else "FAIL"
        print(f"[{status}] {res.name}: {res.samples} samples, {res.failures} failures {res.detail}")
        ok = ok and res.ok
    return 0 if ok else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "gen": _cmd_gen,
        "solve": _cmd_solve,
        "oracle": _cmd_oracle,
        "bench": _cmd_bench,
        "audit": _cmd_audit,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
