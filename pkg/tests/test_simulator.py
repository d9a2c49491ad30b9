import io
import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hexcircuit.circuitry import CircuitryVector, HexLayout, base_vector, decode, orient
from hexcircuit.enumeration import enumerate_vectors
from hexcircuit.simulator import (
    Evaluator,
    HexInstance,
    SimulationError,
    SimulatorConfig,
    evaluate_Q,
    evaluate_ratio,
    simulate,
    with_air_temperature,
)
from hexcircuit.solvers.moves import random_feasible
from hexcircuit.thermo import sat_props

L8 = HexLayout(4)
TWO_CIRCUIT = CircuitryVector.from_text("t=8;bits=1000000000010101000000100001")
T_SAT = sat_props(350.0).T_sat


def balance_error(res):
    return abs(res.air_duty - res.refrigerant_duty) / max(abs(res.refrigerant_duty), 1e-9)


def test_reference_coil_in_expected_range():
    inst = HexInstance(L8)
    for x in (TWO_CIRCUIT, base_vector(L8)):
        res = simulate(orient(decode(x))[0], inst)
        assert 1500.0 <= res.Q <= 6000.0
        assert res.delta_p > 0
        assert res.residual <= SimulatorConfig().tolerance


def test_regression_value_two_circuit_design():
    # frozen from this model; guards against unintended changes
    res = simulate(orient(decode(TWO_CIRCUIT))[0], HexInstance(L8))
    assert res.Q == pytest.approx(3612.8842247915463, rel=1e-9)
    assert res.delta_p == pytest.approx(3.7772832893692794, rel=1e-9)


def test_energy_balance_all_t8_designs():
    inst = HexInstance(L8)
    worst = 0.0
    for k, x in enumerate(enumerate_vectors(L8)):
        if k % 7:
            continue
        for d in orient(decode(x))[:2]:
            worst = max(worst, balance_error(simulate(d, inst)))
    assert worst <= 1e-3


@settings(max_examples=25, deadline=None)
@given(
    tpr=st.integers(1, 8),
    seed=st.integers(0, 10**6),
    T_air=st.floats(8.0, 40.0),
    mdot=st.floats(0.005, 0.05),
)
def test_energy_balance_property(tpr, seed, T_air, mdot):
    layout = HexLayout(tpr)
    x = random_feasible(layout, np.random.default_rng(seed))
    inst = HexInstance(layout, air_temperature=T_air, refrigerant_mass_flow=mdot)
    res = simulate(orient(decode(x))[0], inst)
    assert balance_error(res) <= 1e-3
    assert res.Q >= 0


def test_zero_duty_when_air_at_saturation():
    inst = HexInstance(L8, air_temperature=T_SAT)
    for x in (TWO_CIRCUIT, base_vector(L8)):
        for d in orient(decode(x)):
            assert abs(simulate(d, inst).Q) <= 1e-6


@settings(max_examples=20, deadline=None)
@given(T1=st.floats(T_SAT, 45.0), dT=st.floats(0.05, 10.0))
def test_duty_monotone_in_air_temperature(T1, dT):
    d = orient(decode(TWO_CIRCUIT))[0]
    base = HexInstance(L8)
    q1 = simulate(d, with_air_temperature(base, T1)).Q
    q2 = simulate(d, with_air_temperature(base, T1 + dT)).Q
    assert q2 > q1


def test_all_two_phase_duty_independent_of_circuitry():
    # with a large refrigerant flow nothing dries out, so every segment sees
    # the same saturation temperature and circuitry cannot matter
    inst = HexInstance(
        HexLayout(3), refrigerant_mass_flow=0.1, refrigerant_quality=0.05,
        refrigerant_pressure=900.0, air_temperature=45.0,
    )
    qs = []
    for x in enumerate_vectors(HexLayout(3)):
        for d in orient(decode(x)):
            res = simulate(d, inst)
            assert all(c.quality_out < 1 for c in res.per_circuit)
            qs.append(res.Q)
    # left over: the row-coupling sweep tolerance
    assert max(qs) - min(qs) <= 1e-5 * max(qs)


def test_segment_refinement_converges():
    d = orient(decode(TWO_CIRCUIT))[0]
    inst = HexInstance(L8)
    q10 = simulate(d, inst, SimulatorConfig(segments_per_tube=10)).Q
    q40 = simulate(d, inst, SimulatorConfig(segments_per_tube=40)).Q
    assert abs(q10 - q40) / q40 < 1e-3


def test_orientation_changes_duty_only_slightly():
    inst = HexInstance(L8)
    qs = [simulate(d, inst).Q for d in orient(decode(TWO_CIRCUIT))]
    assert max(qs) - min(qs) > 0
    assert (max(qs) - min(qs)) / max(qs) < 0.02


def test_pressure_drop_falls_with_more_circuits():
    inst = HexInstance(L8)
    one = CircuitryVector.from_edges(L8, [(1, 2), (3, 4), (5, 6), (7, 8), (2, 3), (4, 5), (6, 7)])
    assert decode(one).c == 1
    dps = {decode(x).c: simulate(orient(decode(x))[0], inst).delta_p for x in (one, TWO_CIRCUIT, base_vector(L8))}
    assert dps[1] > dps[2] > dps[4]


def test_per_circuit_results_add_up():
    res = simulate(orient(decode(TWO_CIRCUIT))[0], HexInstance(L8))
    assert sum(c.Q for c in res.per_circuit) == pytest.approx(res.Q, rel=1e-12)
    assert res.delta_p == max(c.delta_p for c in res.per_circuit)
    assert sum(c.mass_flow for c in res.per_circuit) == pytest.approx(0.02)


def test_segment_records():
    res = simulate(orient(decode(TWO_CIRCUIT))[0], HexInstance(L8), SimulatorConfig(record_segments=True))
    assert len(res.segments) == 8 * 10
    assert sum(s.Q for s in res.segments) == pytest.approx(res.Q, rel=1e-9)
    assert all(s.T_air_out <= s.T_air_in for s in res.segments)


def test_deterministic():
    d = orient(decode(TWO_CIRCUIT))[2]
    assert simulate(d, HexInstance(L8)) == simulate(d, HexInstance(L8))


def test_non_convergence_raises():
    with pytest.raises(SimulationError) as exc:
        simulate(orient(decode(TWO_CIRCUIT))[0], HexInstance(L8), SimulatorConfig(max_iterations=1))
    assert exc.value.trace


@pytest.mark.parametrize(
    "kw",
    [
        {"refrigerant_quality": 1.5},
        {"refrigerant_mass_flow": 0.0},
        {"tube_od": 9.0},
        {"air_flow": -1.0},
    ],
)
def test_bad_instance_rejected(kw):
    with pytest.raises(ValueError):
        HexInstance(L8, **kw)


@pytest.mark.parametrize("kw", [{"segments_per_tube": 0}, {"relaxation": 1.5}, {"tolerance": 1.0}])
def test_bad_config_rejected(kw):
    with pytest.raises(ValueError):
        SimulatorConfig(**kw)


def test_layout_mismatch_rejected():
    with pytest.raises(ValueError):
        simulate(orient(decode(TWO_CIRCUIT))[0], HexInstance(HexLayout(3)))


def test_wrappers_skip_infeasible():
    bad = TWO_CIRCUIT.with_bit(1, 0)
    inst = HexInstance(L8)
    assert evaluate_Q(bad, inst) is None
    assert evaluate_ratio(bad, inst) is None
    r = evaluate_ratio(TWO_CIRCUIT, inst, q_lim=3600)
    assert r.satisfied and r.value == pytest.approx(r.Q / r.delta_p)
    assert not evaluate_ratio(TWO_CIRCUIT, inst, q_lim=3900).satisfied


def test_evaluator_cache_and_log():
    buf = io.StringIO()
    ev = Evaluator(HexInstance(L8), log=buf)
    d = orient(decode(TWO_CIRCUIT))[1]
    r1, hit1 = ev.simulate(d, TWO_CIRCUIT, 1)
    r2, hit2 = ev.simulate(d, TWO_CIRCUIT, 1)
    assert (hit1, hit2) == (False, True)
    assert r1 is r2
    assert (ev.calls, ev.hits) == (1, 1)
    lines = [json.loads(ln) for ln in buf.getvalue().splitlines()]
    assert [ln["cache_hit"] for ln in lines] == [False, True]
    assert set(lines[0]) == {"vector", "orientation", "Q_W", "dP_kPa", "wall_ms", "cache_hit"}
    assert lines[0]["vector"] == TWO_CIRCUIT.to_text() and lines[0]["orientation"] == 1
    assert ev.evaluate(TWO_CIRCUIT.with_bit(1, 0)) is None


def test_evaluator_preload_resumes_without_calls():
    buf = io.StringIO()
    ev = Evaluator(HexInstance(L8), log=buf)
    q = ev.evaluate_Q(TWO_CIRCUIT)
    fresh = Evaluator(HexInstance(L8))
    assert fresh.preload(buf.getvalue().splitlines()) == 1
    assert fresh.evaluate_Q(TWO_CIRCUIT) == q
    assert fresh.calls == 0 and fresh.hits == 1


def test_instance_copy_helpers():
    inst = with_air_temperature(HexInstance(L8), 30.0)
    assert inst.air_temperature == 30.0
    assert replace(inst, air_temperature=24.0) == HexInstance(L8)
