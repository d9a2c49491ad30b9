"""Experiment runner: enumeration studies, solver comparisons, oracle checks.

All tables are CSV files written atomically (temp file + rename).  Missing
values are written as ``-``, which is also what the comparison tables use
for runs that found nothing acceptable.  Floats are written with ``repr`` so
every row reads back to an identical record.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .circuitry import ContractError, CircuitryVector, HexLayout, decode, orient
from .config import RunConfig, config_hash
from .enumeration import (
    DEFAULT_ENUM_CAP,
    PUBLISHED_COUNTS,
    count_deviation,
    enumerate_vectors,
)
from .simulator import DP_FLOOR, Evaluator, HexInstance
from .solvers import SOLVERS, Budget, Objective, Problem, SolverReport, penalized
from .thermo import load_table

__all__ = [
    "UsageError",
    "make_instance",
    "ExperimentPlan",
    "EnumerationRow",
    "HistogramRow",
    "ComparisonRow",
    "VerifyRow",
    "run_enumeration_study",
    "run_solver_comparison",
    "run_solver",
    "comparison_row",
    "verify_against_oracle",
    "solver_oracle",
    "relative_gap",
    "geometric_mean",
    "write_table",
    "read_table",
    "write_manifest",
    "DASH",
    "GEOMEAN_LABEL",
    "N_BINS",
]

DASH = "-"
GEOMEAN_LABEL = "geomean"
N_BINS = 25
GEOMEAN_NOTE = "geomean rows use only instances the solver solved; '-' = nothing acceptable found"


class UsageError(ContractError):
    pass


def make_instance(tubes_per_row: int, **overrides) -> HexInstance:
    """Reference coil with ``2 * tubes_per_row`` tubes; keyword overrides allowed."""
    if isinstance(tubes_per_row, bool) or not isinstance(tubes_per_row, (int, np.integer)):
        raise UsageError(f"tubes_per_row must be an integer, got {tubes_per_row!r}")
    if not 1 <= tubes_per_row <= 18:
        raise UsageError(f"tubes_per_row must be in 1..18, got {tubes_per_row}")
    try:
        return HexInstance(HexLayout(int(tubes_per_row)), **overrides)
    except TypeError as exc:
        raise UsageError(str(exc)) from exc


@dataclass
class ExperimentPlan:
    instances: tuple[int, ...] = tuple(range(4, 37, 2))  # total tube counts t
    objectives: tuple[str, ...] = ("q", "ratio")
    solvers: tuple[str, ...] = ("direct", "evo", "local")
    budget: Budget = field(default_factory=Budget)
    out_dir: Path | None = None
    seeds: tuple[int, ...] = (0,)
    config: RunConfig = field(default_factory=RunConfig)
    jobs: int = 1  # instance-level processes
    workers: int = 1  # per-solver simulation threads
    override_enum_cap: bool = False

    def __post_init__(self):
        self.instances = tuple(int(t) for t in self.instances)
        self.objectives = tuple(Objective(o).value for o in self.objectives)
        self.solvers = tuple(self.solvers)
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.instances:
            raise UsageError("plan needs at least one instance")
        if not self.solvers:
            raise UsageError("plan needs at least one solver")
        if not self.objectives or not self.seeds:
            raise UsageError("plan needs at least one objective and one seed")
        for t in self.instances:
            if t % 2 or not 2 <= t <= 36:
                raise UsageError(f"instance tube count must be even and in 2..36, got {t}")
        unknown = set(self.solvers) - set(SOLVERS)
        if unknown:
            raise UsageError(f"unknown solver(s): {sorted(unknown)}")
        if self.out_dir is not None:
            self.out_dir = Path(self.out_dir)

    def instance(self, t: int) -> HexInstance:
        return make_instance(t // 2, **self.config.instance)

    def table(self):
        return load_table(self.config.table) if self.config.table else None


# ---------------------------------------------------------------- CSV records

def _fmt(v) -> str:
    if v is None:
        return DASH
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(raw: str, kind: str):
    if raw == DASH and "None" in kind:
        return None
    base = kind.replace("| None", "").strip()
    if base == "int":
        return int(raw)
    if base == "float":
        return float(raw)
    if base == "bool":
        return raw == "true"
    return raw


class _Record:
    """Mixin for dataclass rows that serialize to and from CSV strings."""

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def to_row(self) -> list[str]:
        return [_fmt(v) for v in astuple(self)]

    @classmethod
    def from_row(cls, row: Sequence[str]):
        hints = {f.name: str(f.type) for f in fields(cls)}
        names = cls.columns()
        if len(row) != len(names):
            raise ValueError(f"expected {len(names)} columns, got {len(row)}")
        return cls(**{n: _parse(r, hints[n]) for n, r in zip(names, row)})


@dataclass(frozen=True)
class EnumerationRow(_Record):
    t: int
    solutions: int
    combinations: int
    published_solutions: int | None
    published_combinations: int | None
    q_lim: float
    n_q_at_least_lim: int
    q_min: float
    q_mean: float
    q_max: float
    ratio_min: float
    ratio_mean: float
    ratio_max: float
    ratio_max_constrained: float | None  # over combinations with Q >= q_lim
    oracle_q: float  # best first-orientation Q (what the solvers can reach)
    oracle_q_vector: str
    oracle_ratio: float  # best first-orientation penalised ratio
    oracle_ratio_vector: str
    simulator_calls: int
    wall_seconds: float
    note: str | None


@dataclass(frozen=True)
class HistogramRow(_Record):
    t: int
    quantity: str
    bin: int
    lo: float
    hi: float
    count: int


@dataclass(frozen=True)
class ComparisonRow(_Record):
    instance: str  # tube count, or the geomean label
    solver: str
    objective: str
    seed: int | None
    value: float | None  # Q (W) or Q/dP (W/kPa); '-' when unsolved
    time_s: float | None
    evaluations: float | None  # simulator calls; geomean rows hold a float
    q_w: float | None
    dp_kpa: float | None
    vector: str | None


@dataclass(frozen=True)
class VerifyRow(_Record):
    t: int
    solver: str
    objective: str
    optimum: float
    value: float | None
    gap_pct: float | None
    threshold_pct: float
    verdict: str


def write_table(path: str | Path, records: Iterable[_Record], cls=None, notes: Sequence[str] = ()) -> Path:
    """Write rows atomically; ``notes`` become trailing ``#`` lines."""
    records = list(records)
    cls = cls or type(records[0])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cls.columns())
    for r in records:
        w.writerow(r.to_row())
    for note in notes:
        buf.write(f"# {note}\n")
    _atomic_write(path, buf.getvalue())
    return path


def read_table(path: str | Path, cls) -> list:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows:
        return []
    if rows[0] != cls.columns():
        raise ValueError(f"{path}: header does not match {cls.__name__}")
    return [cls.from_row(r) for r in rows[1:]]


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_manifest(out_dir: str | Path, plan: ExperimentPlan, extra: dict | None = None) -> Path:
    """Plain-text manifest: versions, seeds, config hash."""
    from . import __version__

    lines = {
        "package": f"hexcircuit {__version__}",
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "platform": platform.platform(),
        "instances": " ".join(map(str, plan.instances)),
        "objectives": " ".join(plan.objectives),
        "solvers": " ".join(plan.solvers),
        "seeds": " ".join(map(str, plan.seeds)),
        "budget": json.dumps(_budget_dict(plan.budget), sort_keys=True),
        "config_hash": config_hash(plan.config),
        "config": json.dumps(plan.config.as_dict(), sort_keys=True, default=str),
        "evaluations": "simulator calls only (cache hits and infeasible rejects excluded)",
    }
    lines.update(extra or {})
    path = Path(out_dir) / "manifest.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    _atomic_write(path, "".join(f"{k}: {v}\n" for k, v in lines.items()))
    return path


def _budget_dict(b: Budget) -> dict:
    return {f.name: getattr(b, f.name) for f in fields(b)}


# ---------------------------------------------------------------- helpers

def relative_gap(value: float | None, optimum: float) -> float | None:
    """Shortfall of ``value`` below ``optimum`` in percent (0 for a match or better)."""
    if value is None:
        return None
    if value >= optimum:
        return 0.0
    return (optimum - value) / abs(optimum) * 100.0 if optimum else math.inf


def geometric_mean(values: Iterable[float | None]) -> float | None:
    """Geometric mean of the positive entries given; None if there are none."""
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    if any(v <= 0 for v in vals):
        raise ValueError("geometric mean needs positive values")
    return float(math.exp(sum(math.log(v) for v in vals) / len(vals)))


def _histogram(t: int, quantity: str, values: np.ndarray) -> list[HistogramRow]:
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(values, bins=N_BINS, range=(lo, hi))
    return [
        HistogramRow(t, quantity, k, float(edges[k]), float(edges[k + 1]), int(c))
        for k, c in enumerate(counts)
    ]


def _check_enum_size(t: int, override: bool) -> None:
    if t > DEFAULT_ENUM_CAP and not override:
        raise UsageError(f"enumeration above t={DEFAULT_ENUM_CAP} needs the override flag (t={t})")


# ---------------------------------------------------------------- enumeration study

def _enumerate_instance(plan: ExperimentPlan, t: int, log_path: Path | None):
    inst = plan.instance(t)
    layout = inst.layout
    q_lim = plan.config.penalty.q_lim
    start = time.perf_counter()
    log = open(log_path, "w") if log_path else None
    try:
        ev = Evaluator(inst, plan.config.simulator, log=log, table=plan.table())
        qs, ratios = [], []
        solutions = 0
        best_q = best_r = None
        for x in enumerate_vectors(layout, override=plan.override_enum_cap):
            solutions += 1
            for k, design in enumerate(orient(decode(x))):
                res, _ = ev.simulate(design, x, k)
                ratio = res.Q / max(res.delta_p, DP_FLOOR)
                qs.append(res.Q)
                ratios.append(ratio)
                if k == 0:
                    pr = penalized(ratio, res.Q, plan.config.penalty)
                    if best_q is None or res.Q > best_q[0]:
                        best_q = (res.Q, x)
                    if best_r is None or pr > best_r[0]:
                        best_r = (pr, x)
    finally:
        if log:
            log.close()
    qa, ra = np.array(qs), np.array(ratios)
    ok = qa >= q_lim
    pub = PUBLISHED_COUNTS.get(t)
    row = EnumerationRow(
        t=t,
        solutions=solutions,
        combinations=len(qs),
        published_solutions=pub[0] if pub else None,
        published_combinations=pub[1] if pub else None,
        q_lim=float(q_lim),
        n_q_at_least_lim=int(ok.sum()),
        q_min=float(qa.min()),
        q_mean=float(qa.mean()),
        q_max=float(qa.max()),
        ratio_min=float(ra.min()),
        ratio_mean=float(ra.mean()),
        ratio_max=float(ra.max()),
        ratio_max_constrained=float(ra[ok].max()) if ok.any() else None,
        oracle_q=float(best_q[0]),
        oracle_q_vector=best_q[1].to_text(),
        oracle_ratio=float(best_r[0]),
        oracle_ratio_vector=best_r[1].to_text(),
        simulator_calls=ev.calls,
        wall_seconds=time.perf_counter() - start,
        note=count_deviation(t, solutions, len(qs)),
    )
    hist = _histogram(t, "Q_W", qa) + _histogram(t, "Q_per_dP", ra)
    return row, hist


def run_enumeration_study(plan: ExperimentPlan, echo=None) -> tuple[list[EnumerationRow], list[HistogramRow]]:
    """Simulate every directed combination of every planned instance.

    Writes ``enumeration.csv``, ``histograms.csv`` and one JSONL evaluation
    log per instance when the plan has an output directory.  Deviation notes
    against the published counts are passed to ``echo`` (default: stderr).
    """
    echo = echo or (lambda s: print(s, file=sys.stderr))
    for t in plan.instances:
        _check_enum_size(t, plan.override_enum_cap)
    out = plan.out_dir
    rows, hists = [], []
    for t in plan.instances:
        log_path = out / "logs" / f"enumerate_t{t}.jsonl" if out else None
        if log_path:
            log_path.parent.mkdir(parents=True, exist_ok=True)
        row, hist = _enumerate_instance(plan, t, log_path)
        rows.append(row)
        hists.extend(hist)
        if row.note:
            echo(f"note: {row.note}")
        if out:
            write_table(out / "enumeration.csv", rows, EnumerationRow)
            write_table(out / "histograms.csv", hists, HistogramRow)
    if out:
        write_manifest(out, plan)
    return rows, hists


def solver_oracle(instance: HexInstance, objective: str, config: RunConfig | None = None,
                  table=None) -> tuple[float, CircuitryVector]:
    """Best value any solver can reach: max over feasible vectors, first orientation."""
    config = config or RunConfig()
    prob = Problem(instance, Objective(objective), config.penalty, config.simulator,
                   Evaluator(instance, config.simulator, table=table))
    best = None
    for x in enumerate_vectors(instance.layout):
        res = prob.evaluator.evaluate(x)
        v = prob.value_of(res)
        if best is None or v > best[0]:
            best = (v, x)
    return best


# ---------------------------------------------------------------- solver runs

def run_solver(instance: HexInstance, solver: str, objective: str, budget: Budget,
               config: RunConfig | None = None, log_path: str | Path | None = None,
               workers: int = 1, table=None) -> SolverReport:
    """One solver run with a fresh evaluator (so calls and the log are per run)."""
    config = config or RunConfig()
    if solver not in SOLVERS:
        raise UsageError(f"unknown solver {solver!r}")
    log = None
    if log_path is not None:
        Path(log_path).parent.mkdir(parents=True, exist_ok=True)
        log = open(log_path, "w")
    try:
        ev = Evaluator(instance, config.simulator, log=log, table=table)
        prob = Problem(instance, Objective(objective), config.penalty, config.simulator, ev)
        if solver == "direct":
            return SOLVERS[solver](prob, budget)
        if solver == "evo":
            return SOLVERS[solver](prob, budget, config.evolution, workers=workers)
        return SOLVERS[solver](prob, budget, workers=workers)
    finally:
        if log:
            log.close()


def comparison_row(rep: SolverReport, seed: int | None) -> ComparisonRow:
    value = rep.table_value
    return ComparisonRow(
        instance=str(rep.t),
        solver=rep.solver,
        objective=rep.objective,
        seed=seed,
        value=value,
        time_s=rep.wall_seconds,
        evaluations=float(rep.calls),
        q_w=rep.best_Q,
        dp_kpa=rep.best_delta_p,
        vector=rep.best_vector,
    )


def _geomean_rows(rows: list[ComparisonRow], objective: str, solvers: Sequence[str]) -> list[ComparisonRow]:
    out = []
    for s in solvers:
        solved = [r for r in rows if r.solver == s and r.objective == objective and r.value is not None]
        out.append(ComparisonRow(
            instance=GEOMEAN_LABEL, solver=s, objective=objective, seed=None,
            value=geometric_mean(r.value for r in solved),
            time_s=geometric_mean(max(r.time_s, 1e-9) for r in solved),
            evaluations=geometric_mean(max(r.evaluations, 1.0) for r in solved),
            q_w=None, dp_kpa=None, vector=None,
        ))
    return out


def _task_key(t: int, solver: str, objective: str, seed: int | None) -> tuple:
    return (str(t), solver, objective, seed)


def _run_task(args) -> tuple[tuple, ComparisonRow]:
    plan, t, solver, objective, seed = args
    budget = replace(plan.budget, seed=seed if seed is not None else plan.budget.seed)
    log_path = None
    if plan.out_dir is not None:
        tag = "direct" if seed is None else f"{solver}_s{seed}"
        log_path = plan.out_dir / "logs" / f"{objective}_t{t}_{tag}.jsonl"
    rep = run_solver(plan.instance(t), solver, objective, budget, plan.config, log_path,
                     plan.workers, plan.table())
    return _task_key(t, solver, objective, seed), comparison_row(rep, seed)


def run_solver_comparison(plan: ExperimentPlan, resume: bool = False) -> dict[str, list[ComparisonRow]]:
    """Run every (instance, solver, objective, seed) and build one table per objective.

    DIRECT is deterministic and runs once per instance (seed column ``-``).
    Tables are rewritten after every finished run, so an interrupt leaves
    the completed rows on disk; with ``resume`` those rows are not rerun.
    """
    tasks = []
    for objective in plan.objectives:
        for t in plan.instances:
            for solver in plan.solvers:
                for seed in ((None,) if solver == "direct" else plan.seeds):
                    tasks.append((t, solver, objective, seed))
    done: dict[tuple, ComparisonRow] = {}
    out = plan.out_dir
    if resume and out is not None:
        for objective in plan.objectives:
            path = out / f"compare_{objective}.csv"
            if path.exists():
                for r in read_table(path, ComparisonRow):
                    if r.instance != GEOMEAN_LABEL:
                        done[(r.instance, r.solver, r.objective, r.seed)] = r
    todo = [tk for tk in tasks if _task_key(*tk) not in done]

    def flush():
        if out is not None:
            _write_comparison(out, plan, tasks, done)

    try:
        if plan.jobs > 1 and len(todo) > 1:
            with ProcessPoolExecutor(plan.jobs) as pool:
                for key, row in pool.map(_run_task, [(plan, *tk) for tk in todo]):
                    done[key] = row
                    flush()
        else:
            for tk in todo:
                key, row = _run_task((plan, *tk))
                done[key] = row
                flush()
    finally:
        flush()
    if out is not None:
        write_manifest(out, plan)
    return _tables(plan, tasks, done)


def _tables(plan, tasks, done) -> dict[str, list[ComparisonRow]]:
    tables = {}
    for objective in plan.objectives:
        rows = [done[_task_key(*tk)] for tk in tasks if tk[2] == objective and _task_key(*tk) in done]
        tables[objective] = rows + _geomean_rows(rows, objective, plan.solvers)
    return tables


def _write_comparison(out: Path, plan, tasks, done) -> None:
    for objective, rows in _tables(plan, tasks, done).items():
        write_table(out / f"compare_{objective}.csv", rows, ComparisonRow, notes=[
            GEOMEAN_NOTE,
            "evaluations = simulator calls; time_s measures this simulator only",
        ])


# ---------------------------------------------------------------- oracle check

def verify_against_oracle(t: int, solvers: Sequence[str] = ("direct", "evo", "local"),
                          objectives: Sequence[str] = ("q", "ratio"), threshold: float = 1.0,
                          budget: Budget | None = None, config: RunConfig | None = None,
                          table=None) -> list[VerifyRow]:
    """Gap of each solver's best value to the enumerated optimum, with a PASS/FAIL verdict."""
    if t % 2 or not 2 <= t <= DEFAULT_ENUM_CAP:
        raise UsageError(f"oracle check needs an even t in 2..{DEFAULT_ENUM_CAP}, got {t}")
    config = config or RunConfig()
    budget = budget or config.budget
    inst = make_instance(t // 2, **config.instance)
    rows = []
    for objective in objectives:
        optimum, _ = solver_oracle(inst, objective, config, table)
        for solver in solvers:
            rep = run_solver(inst, solver, objective, budget, config, table=table)
            gap = relative_gap(rep.best_value, optimum)
            ok = gap is not None and gap <= threshold
            rows.append(VerifyRow(t, solver, objective, float(optimum), rep.best_value, gap,
                                  float(threshold), "PASS" if ok else "FAIL"))
    return rows
