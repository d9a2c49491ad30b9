import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hexcircuit.circuitry import ContractError
from hexcircuit.config import RunConfig, config_hash, load_config, parse_config, DEFAULT_CONFIG_TEXT
from hexcircuit.harness import (
    DASH,
    GEOMEAN_LABEL,
    N_BINS,
    ComparisonRow,
    EnumerationRow,
    ExperimentPlan,
    HistogramRow,
    UsageError,
    VerifyRow,
    geometric_mean,
    make_instance,
    read_table,
    relative_gap,
    run_enumeration_study,
    run_solver_comparison,
    verify_against_oracle,
    write_table,
)
from hexcircuit.solvers import Budget, PenaltyConfig


def config(q_lim=3900.0):
    cfg = RunConfig()
    cfg.penalty = PenaltyConfig(q_lim=q_lim)
    return cfg


# -------------------------------------------------------------- instances and plans

@pytest.mark.parametrize("tpr,t,n", [(2, 4, 6), (4, 8, 28), (18, 36, 630), (1, 2, 1)])
def test_make_instance(tpr, t, n):
    inst = make_instance(tpr)
    assert inst.layout.t == t and inst.layout.n == n
    assert inst.tube_length == 1143.0 and inst.refrigerant_pressure == 350.0


@pytest.mark.parametrize("bad", [0, 19, -1, 2.5, True])
def test_make_instance_usage_errors(bad):
    with pytest.raises(UsageError):
        make_instance(bad)


def test_plan_defaults_and_contracts(tmp_path):
    plan = ExperimentPlan()
    assert plan.instances == tuple(range(4, 37, 2)) and len(plan.instances) == 17
    assert plan.objectives == ("q", "ratio")
    with pytest.raises(UsageError):
        ExperimentPlan(instances=())
    with pytest.raises(UsageError):
        ExperimentPlan(solvers=())
    with pytest.raises(UsageError):
        ExperimentPlan(solvers=("nomad",))
    with pytest.raises(UsageError):
        ExperimentPlan(instances=(5,))
    with pytest.raises(ValueError):
        ExperimentPlan(objectives=("cost",))


# -------------------------------------------------------------- small helpers

def test_geometric_mean():
    assert geometric_mean([2.0, 8.0]) == pytest.approx(4.0)
    assert geometric_mean([None, 2.0, None, 8.0]) == pytest.approx(4.0)
    assert geometric_mean([]) is None
    assert geometric_mean([None, None]) is None
    with pytest.raises(ValueError):
        geometric_mean([1.0, -2.0])


def test_relative_gap():
    assert relative_gap(3977.0, 3977.0) == 0.0
    assert f"{relative_gap(3975.0, 3977.0):.2f}" == "0.05"
    assert relative_gap(4000.0, 3977.0) == 0.0
    assert relative_gap(None, 1.0) is None
    assert relative_gap(-2.0, -1.0) == pytest.approx(100.0)


# -------------------------------------------------------------- CSV round trip

floats = st.floats(allow_nan=False, allow_infinity=False)
maybe = lambda s: st.one_of(st.none(), s)  # noqa: E731
text = st.text(alphabet=st.characters(blacklist_categories=("Cs", "Cc")), min_size=1).filter(
    lambda s: s != DASH and not s.startswith("#")
)


@settings(max_examples=60, deadline=None)
@given(
    rows=st.lists(
        st.builds(
            ComparisonRow,
            instance=text, solver=text, objective=text, seed=maybe(st.integers()),
            value=maybe(floats), time_s=maybe(floats), evaluations=maybe(floats),
            q_w=maybe(floats), dp_kpa=maybe(floats), vector=maybe(text),
        ),
        min_size=1, max_size=5,
    )
)
def test_comparison_rows_round_trip(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("csv") / "t.csv"
    write_table(path, rows, notes=["a note"])
    assert read_table(path, ComparisonRow) == rows


@settings(max_examples=30, deadline=None)
@given(
    row=st.builds(
        HistogramRow, t=st.integers(0, 40), quantity=text, bin=st.integers(0, 24),
        lo=floats, hi=floats, count=st.integers(0, 10**9),
    )
)
def test_histogram_rows_round_trip(tmp_path_factory, row):
    path = tmp_path_factory.mktemp("csv") / "h.csv"
    write_table(path, [row])
    assert read_table(path, HistogramRow) == [row]


def test_read_table_rejects_wrong_header(tmp_path):
    path = write_table(tmp_path / "v.csv", [VerifyRow(4, "direct", "q", 1.0, 1.0, 0.0, 1.0, "PASS")])
    with pytest.raises(ValueError):
        read_table(path, ComparisonRow)


def test_atomic_write_leaves_no_temp_files(tmp_path):
    write_table(tmp_path / "x.csv", [VerifyRow(4, "direct", "q", 1.0, None, None, 1.0, "FAIL")])
    assert [p.name for p in tmp_path.iterdir()] == ["x.csv"]


# -------------------------------------------------------------- enumeration study

@pytest.fixture(scope="module")
def study(tmp_path_factory):
    out = tmp_path_factory.mktemp("study")
    plan = ExperimentPlan(instances=(4, 6), solvers=("direct",), out_dir=out)
    notes = []
    rows, hists = run_enumeration_study(plan, echo=notes.append)
    return out, rows, hists, notes


def test_study_rows(study):
    out, rows, hists, notes = study
    r4, r6 = rows
    assert (r4.solutions, r4.combinations) == (5, 12)
    assert (r6.solutions, r6.combinations) == (37, 104)
    for r in rows:
        assert r.q_min <= r.q_mean <= r.q_max
        assert r.ratio_min <= r.ratio_mean <= r.ratio_max
        assert r.simulator_calls == r.combinations
        assert r.note is None
        assert r.oracle_q <= r.q_max
    assert notes == []
    assert read_table(out / "enumeration.csv", EnumerationRow) == rows


def test_study_histograms(study):
    out, rows, hists, _ = study
    for r in rows:
        for quantity in ("Q_W", "Q_per_dP"):
            bins = [h for h in hists if h.t == r.t and h.quantity == quantity]
            assert len(bins) == N_BINS
            assert sum(h.count for h in bins) == r.combinations
            assert bins[0].lo == pytest.approx(r.q_min if quantity == "Q_W" else r.ratio_min)
    assert read_table(out / "histograms.csv", HistogramRow) == hists


def test_study_optimum_matches_log(study):
    out, rows, _, _ = study
    for r in rows:
        lines = [json.loads(ln) for ln in (out / "logs" / f"enumerate_t{r.t}.jsonl").read_text().splitlines()]
        assert len(lines) == r.combinations
        assert max(ln["Q_W"] for ln in lines) == r.q_max
        first = [ln for ln in lines if ln["orientation"] == 0]
        assert max(ln["Q_W"] for ln in first) == r.oracle_q


def test_study_needs_override_above_cap():
    with pytest.raises(UsageError):
        run_enumeration_study(ExperimentPlan(instances=(14,), solvers=("direct",)))


def test_study_prints_deviation_note(monkeypatch):
    import hexcircuit.harness as h

    fake = h.EnumerationRow(*([10] + [0] * 19 + ["deviation"]))
    monkeypatch.setattr(h, "_enumerate_instance", lambda plan, t, log: (fake, []))
    notes = []
    run_enumeration_study(ExperimentPlan(instances=(10,), solvers=("direct",)), echo=notes.append)
    assert notes == ["note: deviation"]


# -------------------------------------------------------------- comparison

@pytest.fixture(scope="module")
def comparison(tmp_path_factory):
    out = tmp_path_factory.mktemp("cmp")
    plan = ExperimentPlan(
        instances=(4,), solvers=("direct", "local"), out_dir=out, seeds=(0, 1),
        budget=Budget(max_candidates=2000), config=config(3600.0),
    )
    return plan, run_solver_comparison(plan)


def test_comparison_structure(comparison):
    plan, tables = comparison
    assert set(tables) == {"q", "ratio"}
    q = tables["q"]
    assert [(r.instance, r.solver, r.seed) for r in q] == [
        ("4", "direct", None), ("4", "local", 0), ("4", "local", 1),
        (GEOMEAN_LABEL, "direct", None), (GEOMEAN_LABEL, "local", None),
    ]
    for objective, rows in tables.items():
        assert read_table(plan.out_dir / f"compare_{objective}.csv", ComparisonRow) == rows
    text = (plan.out_dir / "compare_q.csv").read_text()
    assert text.splitlines()[0].startswith("instance,solver,objective,seed,value,time_s,evaluations")
    assert "# geomean" in text
    manifest = (plan.out_dir / "manifest.txt").read_text()
    assert f"config_hash: {config_hash(plan.config)}" in manifest
    assert "seeds: 0 1" in manifest and "numpy:" in manifest


def test_comparison_matches_enumeration_optimum(comparison, study):
    _, tables = comparison
    _, rows, _, _ = study
    for r in tables["q"]:
        if r.instance == "4":
            assert r.value == rows[0].oracle_q


def test_ratio_dash_convention(comparison):
    # no t=4 design reaches 3600 W, so every ratio run is unsolved
    _, tables = comparison
    ratio = tables["ratio"]
    assert all(r.value is None for r in ratio)
    assert all(r.q_w is not None for r in ratio if r.instance != GEOMEAN_LABEL)
    geo = [r for r in ratio if r.instance == GEOMEAN_LABEL]
    assert all(r.value is None and r.time_s is None for r in geo)


def test_geomean_row_values(comparison):
    _, tables = comparison
    q = tables["q"]
    local = [r.value for r in q if r.solver == "local" and r.instance != GEOMEAN_LABEL]
    geo = next(r for r in q if r.solver == "local" and r.instance == GEOMEAN_LABEL)
    assert geo.value == pytest.approx(math.sqrt(local[0] * local[1]))


def test_comparison_reproducible(comparison, tmp_path):
    plan, tables = comparison
    again = run_solver_comparison(ExperimentPlan(
        instances=plan.instances, solvers=plan.solvers, seeds=plan.seeds,
        budget=plan.budget, config=plan.config, out_dir=tmp_path,
    ))

    def strip(rows):
        return [(r.instance, r.solver, r.seed, r.value, r.evaluations, r.q_w, r.dp_kpa, r.vector)
                for r in rows if r.instance != GEOMEAN_LABEL]

    for objective in tables:
        assert strip(again[objective]) == strip(tables[objective])
    for name in ("q_t4_direct.jsonl", "q_t4_local_s1.jsonl"):
        a = [json.loads(ln) for ln in (plan.out_dir / "logs" / name).read_text().splitlines()]
        b = [json.loads(ln) for ln in (tmp_path / "logs" / name).read_text().splitlines()]
        for ln in a + b:
            ln.pop("wall_ms")
        assert a == b


def test_comparison_resume_skips_done_runs(comparison, monkeypatch):
    import hexcircuit.harness as h

    plan, tables = comparison

    def boom(*a, **k):
        raise AssertionError("rerun")

    monkeypatch.setattr(h, "run_solver", boom)
    again = run_solver_comparison(plan, resume=True)
    assert again == tables


def test_interrupt_keeps_finished_rows(tmp_path, monkeypatch):
    import hexcircuit.harness as h

    real = h.run_solver
    calls = []

    def flaky(*a, **k):
        if calls:
            raise KeyboardInterrupt
        calls.append(1)
        return real(*a, **k)

    monkeypatch.setattr(h, "run_solver", flaky)
    plan = ExperimentPlan(instances=(4,), objectives=("q",), solvers=("direct", "local"), out_dir=tmp_path,
                          budget=Budget(max_candidates=500))
    with pytest.raises(KeyboardInterrupt):
        run_solver_comparison(plan)
    rows = read_table(tmp_path / "compare_q.csv", ComparisonRow)
    assert [(r.instance, r.solver) for r in rows if r.instance != GEOMEAN_LABEL] == [("4", "direct")]


def test_parallel_instances_match_serial(tmp_path):
    kw = dict(instances=(4, 6), objectives=("q",), solvers=("direct",), budget=Budget(max_candidates=2000))
    serial = run_solver_comparison(ExperimentPlan(**kw))
    parallel = run_solver_comparison(ExperimentPlan(jobs=2, **kw))
    pick = lambda rows: [(r.instance, r.value, r.evaluations, r.vector) for r in rows if r.instance != GEOMEAN_LABEL]  # noqa: E731
    assert pick(serial["q"]) == pick(parallel["q"])


# -------------------------------------------------------------- oracle check

def test_verify_against_oracle():
    rows = verify_against_oracle(4, solvers=("direct", "local"), objectives=("q",),
                                 budget=Budget(max_candidates=2000))
    assert [(r.solver, r.verdict) for r in rows] == [("direct", "PASS"), ("local", "PASS")]
    assert all(r.gap_pct == 0.0 for r in rows)


def test_verify_threshold_fail():
    # a two-call budget cannot find the t=6 optimum
    rows = verify_against_oracle(6, solvers=("direct",), objectives=("q",), threshold=0.0,
                                 budget=Budget(max_simulator_calls=2))
    assert rows[0].verdict == "FAIL" and rows[0].gap_pct > 0


def test_verify_rejects_large_instances():
    with pytest.raises(UsageError):
        verify_against_oracle(14)


# -------------------------------------------------------------- config

def test_default_config_text_parses():
    cfg = parse_config(DEFAULT_CONFIG_TEXT)
    assert cfg.penalty.q_lim == 3900 and cfg.budget.max_simulator_calls == 2500
    assert cfg.instance["air_temperature"] == 24.0
    assert config_hash(cfg) == config_hash(parse_config(DEFAULT_CONFIG_TEXT))


def test_config_overrides(tmp_path):
    (tmp_path / "table.csv").write_text("x")
    path = tmp_path / "run.ini"
    path.write_text(
        "[instance]\nair_temperature = 30  # degC\n"
        "[simulator]\nsegments_per_tube = 12\n"
        "[budget]\nseed = 9\nmax_wall_seconds = 60\n"
        "[thermo]\ntable = table.csv\n"
    )
    cfg = load_config(path)
    assert cfg.instance == {"air_temperature": 30.0}
    assert cfg.simulator.segments_per_tube == 12
    assert cfg.budget.seed == 9 and cfg.budget.max_wall_seconds == 60.0
    assert cfg.table == str(tmp_path / "table.csv")
    assert config_hash(cfg) != config_hash(RunConfig())


@pytest.mark.parametrize(
    "text",
    [
        "[instance]\nwidth = 3\n",
        "[colour]\nx = 1\n",
        "[budget]\nmax_simulator_calls = many\n",
        "[budget]\nmax_simulator_calls = 0\n",
        "[thermo]\npath = x\n",
    ],
)
def test_config_errors(text):
    with pytest.raises(ContractError):
        parse_config(text)
