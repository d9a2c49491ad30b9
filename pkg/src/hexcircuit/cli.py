"""Command line front end: ``python -m hexcircuit <command>``.

``--tubes`` is the total tube count t (two rows, so t must be even).
"""
from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

from .circuitry import ContractError, CircuitryDesign, CircuitryVector, base_vector, decode, orient, validate
from .config import RunConfig, load_config
from .enumeration import EnumerationCapError, count_deviation, count_oracle, enumerate_vectors
from .harness import (
    ComparisonRow,
    ExperimentPlan,
    UsageError,
    comparison_row,
    make_instance,
    run_enumeration_study,
    run_solver,
    run_solver_comparison,
    verify_against_oracle,
    write_manifest,
    write_table,
)
from .simulator import DP_FLOOR, Evaluator
from .solvers import PenaltyConfig
from .thermo import load_table

__all__ = ["main", "build_parser"]


def _tube_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="sectioned key-value config file")
    common.add_argument("--table", type=Path, help="saturation table file overriding the bundled one")
    common.add_argument("--out", type=Path, help="output directory for tables, logs and manifest")
    common.add_argument("--q-lim", type=float, help="heat-capacity floor for the ratio objective, W")

    budget = argparse.ArgumentParser(add_help=False)
    budget.add_argument("--budget-evals", type=int, help="max simulator calls per run")
    budget.add_argument("--budget-seconds", type=float, help="max wall seconds per run")
    budget.add_argument("--seed", type=int, action="append", help="rng seed (repeatable)")
    budget.add_argument("--workers", type=int, default=1, help="simulation threads per run")

    p = argparse.ArgumentParser(prog="hexcircuit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("enumerate", parents=[common], help="list every feasible circuitry vector")
    s.add_argument("--tubes", type=int, required=True)
    s.add_argument("--override-enum-cap", action="store_true")

    s = sub.add_parser("study", parents=[common], help="simulate every directed combination")
    s.add_argument("--tubes", type=_tube_list, required=True, help="e.g. 4,6,8")
    s.add_argument("--override-enum-cap", action="store_true")

    s = sub.add_parser("simulate", parents=[common], help="simulate one design")
    s.add_argument("--tubes", type=int, required=True)
    s.add_argument("--vector", help="t=<t>;bits=<0/1...>; default: far-end bends only")
    s.add_argument("--design", help="circuits as '1->2->7->8;4->3->6->5'")
    s.add_argument("--orientation", type=int, default=0)

    s = sub.add_parser("solve", parents=[common, budget], help="run one solver")
    s.add_argument("--tubes", type=int, required=True)
    s.add_argument("--objective", choices=["q", "ratio"], default="q")
    s.add_argument("--solver", choices=["direct", "evo", "local"], default="direct")

    s = sub.add_parser("compare", parents=[common, budget], help="solver comparison tables")
    s.add_argument("--tubes", type=_tube_list, default=list(range(4, 37, 2)))
    s.add_argument("--objective", choices=["q", "ratio"], action="append")
    s.add_argument("--solver", choices=["direct", "evo", "local"], action="append")
    s.add_argument("--jobs", type=int, default=1, help="instance-level processes")
    s.add_argument("--resume", action="store_true", help="skip runs already in the output tables")

    s = sub.add_parser("verify", parents=[common, budget], help="compare solvers to the enumerated optimum")
    s.add_argument("--tubes", type=int, required=True)
    s.add_argument("--objective", choices=["q", "ratio"], action="append")
    s.add_argument("--solver", choices=["direct", "evo", "local"], action="append")
    s.add_argument("--threshold", type=float, default=1.0, help="max gap, percent")

    s = sub.add_parser("count-oracle", help="closed-form solution and combination counts")
    s.add_argument("--tubes", type=int, required=True)
    return p


def _run_config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "table", None):
        cfg.table = str(args.table)
    if getattr(args, "q_lim", None) is not None:
        cfg.penalty = PenaltyConfig(cfg.penalty.lam, args.q_lim)
    b = cfg.budget
    if getattr(args, "budget_evals", None) is not None:
        b = replace(b, max_simulator_calls=args.budget_evals)
    if getattr(args, "budget_seconds", None) is not None:
        b = replace(b, max_wall_seconds=args.budget_seconds)
    if getattr(args, "seed", None):
        b = replace(b, seed=args.seed[0])
    cfg.budget = b
    return cfg


def _instance(args, cfg):
    if args.tubes % 2:
        raise UsageError(f"--tubes must be even, got {args.tubes}")
    return make_instance(args.tubes // 2, **cfg.instance)


def _cmd_enumerate(args, cfg) -> int:
    inst = _instance(args, cfg)
    start = time.perf_counter()
    solutions = combinations = 0
    out = sys.stdout
    for x in enumerate_vectors(inst.layout, override=args.override_enum_cap):
        out.write(x.to_text() + "\n")
        solutions += 1
        combinations += 1 << decode(x).c
    wall = time.perf_counter() - start
    out.write(f"stats,t={inst.layout.t},solutions={solutions},combinations={combinations},wall_seconds={wall:.6f}\n")
    note = count_deviation(inst.layout.t, solutions, combinations)
    if note:
        print(f"note: {note}", file=sys.stderr)
    return 0


def _cmd_study(args, cfg) -> int:
    plan = ExperimentPlan(instances=tuple(args.tubes), solvers=("direct",), config=cfg,
                          out_dir=args.out, override_enum_cap=args.override_enum_cap)
    rows, _ = run_enumeration_study(plan)
    for r in rows:
        print(f"t={r.t} solutions={r.solutions} combinations={r.combinations} "
              f"Q>={r.q_lim:g}: {r.n_q_at_least_lim}  Q {r.q_min:.1f}/{r.q_mean:.1f}/{r.q_max:.1f} W  "
              f"Q/dP {r.ratio_min:.1f}/{r.ratio_mean:.1f}/{r.ratio_max:.1f}  {r.wall_seconds:.1f}s")
    return 0


def _cmd_simulate(args, cfg) -> int:
    inst = _instance(args, cfg)
    if args.vector and args.design:
        raise UsageError("give either --vector or --design")
    if args.design:
        design = CircuitryDesign.from_text(args.design.replace(";", "\n"), inst.layout)
        label = "design"
    else:
        x = CircuitryVector.from_text(args.vector) if args.vector else base_vector(inst.layout)
        if x.t != inst.layout.t:
            raise UsageError(f"vector has t={x.t} but --tubes is {inst.layout.t}")
        rep = validate(x)
        if not rep:
            print(f"infeasible: {rep.rule}: {rep.message}", file=sys.stderr)
            return 1
        variants = orient(decode(x))
        if not 0 <= args.orientation < len(variants):
            raise UsageError(f"orientation must be in 0..{len(variants) - 1}")
        design = variants[args.orientation]
        label = x.to_text()
    log = None
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        log = open(args.out / "simulate.jsonl", "a")
    try:
        table = load_table(cfg.table) if cfg.table else None
        res, _ = Evaluator(inst, cfg.simulator, log=log, table=table).simulate(design, None, args.orientation)
    finally:
        if log:
            log.close()
    print(label)
    print(design.to_text())
    print(f"Q_W,{res.Q!r}")
    print(f"dP_kPa,{res.delta_p!r}")
    print(f"Q_per_dP,{res.Q / max(res.delta_p, DP_FLOOR)!r}")
    print(f"iterations,{res.iterations}")
    return 0


def _plan(args, cfg, solvers, objectives) -> ExperimentPlan:
    tubes = args.tubes if isinstance(args.tubes, list) else [args.tubes]
    return ExperimentPlan(
        instances=tuple(tubes), objectives=tuple(objectives), solvers=tuple(solvers),
        budget=cfg.budget, out_dir=args.out, seeds=tuple(args.seed or [cfg.budget.seed]),
        config=cfg, jobs=getattr(args, "jobs", 1), workers=args.workers,
    )


def _cmd_solve(args, cfg) -> int:
    inst = _instance(args, cfg)
    log = args.out / "logs" / f"{args.objective}_t{inst.layout.t}_{args.solver}.jsonl" if args.out else None
    table = load_table(cfg.table) if cfg.table else None
    rep = run_solver(inst, args.solver, args.objective, cfg.budget, cfg, log, args.workers, table)
    row = comparison_row(rep, None if args.solver == "direct" else cfg.budget.seed)
    print(",".join(ComparisonRow.columns()))
    print(",".join(row.to_row()))
    print(f"# status={rep.status} stop={rep.stop_reason} candidates={rep.candidates} "
          f"penalised={rep.best_value!r}", file=sys.stderr)
    if args.out:
        write_table(args.out / f"solve_{args.objective}_t{inst.layout.t}_{args.solver}.csv", [row])
        write_manifest(args.out, _plan(args, cfg, [args.solver], [args.objective]))
    return 0


def _cmd_compare(args, cfg) -> int:
    plan = _plan(args, cfg, args.solver or ["direct", "evo", "local"], args.objective or ["q", "ratio"])
    tables = run_solver_comparison(plan, resume=args.resume)
    for objective, rows in tables.items():
        print(f"[{objective}]")
        print(",".join(["instance", "solver", "seed", "value", "time_s", "evaluations"]))
        for r in rows:
            vals = [r.instance, r.solver, r.seed, r.value, r.time_s, r.evaluations]
            print(",".join("-" if v is None else (f"{v:.6g}" if isinstance(v, float) else str(v)) for v in vals))
    return 0


def _cmd_verify(args, cfg) -> int:
    table = load_table(cfg.table) if cfg.table else None
    rows = verify_against_oracle(
        args.tubes, args.solver or ("direct", "evo", "local"), args.objective or ("q", "ratio"),
        args.threshold, cfg.budget, cfg, table,
    )
    for r in rows:
        gap = "-" if r.gap_pct is None else f"{r.gap_pct:.2f}%"
        print(f"{r.verdict} t={r.t} {r.solver} {r.objective} gap={gap} optimum={r.optimum:.6g}")
    if args.out:
        write_table(args.out / f"verify_t{args.tubes}.csv", rows)
    return 0 if all(r.verdict == "PASS" for r in rows) else 1


def _cmd_count_oracle(args, cfg) -> int:
    if args.tubes % 2 or args.tubes < 2:
        raise UsageError(f"--tubes must be a positive even number, got {args.tubes}")
    solutions, combinations = count_oracle(args.tubes // 2)
    print(f"t={args.tubes},solutions={solutions},combinations={combinations}")
    return 0


COMMANDS = {
    "enumerate": _cmd_enumerate,
    "study": _cmd_study,
    "simulate": _cmd_simulate,
    "solve": _cmd_solve,
    "compare": _cmd_compare,
    "verify": _cmd_verify,
    "count-oracle": _cmd_count_oracle,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _run_config(args)
        return COMMANDS[args.command](args, cfg)
    except (ContractError, EnumerationCapError, ValueError, OSError) as exc:
        print(f"hexcircuit {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        print("interrupted; completed rows are on disk", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
