"""Segment-by-segment crossflow evaporator model used as the black box.

Each circuit is marched from its inlet tube to its outlet tube; every tube
is cut into ``segments_per_tube`` pieces along its length.  Refrigerant
enters each circuit at the near (front) end, so odd tubes of a circuit are
traversed front-to-far and even tubes far-to-front.  Air crosses row 1
first; the air leaving a row-1 segment enters the row-2 segment directly
behind it.  Because a circuit may wind back and forth between rows, the
row-2 inlet air field is solved by relaxed Gauss-Seidel sweeps.

The heat-transfer march uses saturation properties at the refrigerant inlet
pressure.  The pressure drop is computed afterwards along the converged
enthalpy profile using local-pressure properties.

This is a desk-scale stand-in, not a validated coil model.  Every
correlation constant lives in :class:`SimulatorConfig`.
"""
from __future__ import annotations

import json
import math
import threading
import time
from concurrent.futures import Future
from dataclasses import asdict, dataclass, field, replace
from typing import IO, Sequence

from .circuitry import (
    CircuitryDesign,
    CircuitryVector,
    HexLayout,
    decode,
    orient,
    validate,
)
from .thermo import AIR_CP, SaturationTable, air_density, default_table

__all__ = [
    "HexInstance",
    "SimulatorConfig",
    "CircuitResult",
    "SegmentRecord",
    "SimulationResult",
    "SimulationError",
    "simulate",
    "evaluate_Q",
    "evaluate_ratio",
    "RatioResult",
    "Evaluator",
    "DP_FLOOR",
]

DP_FLOOR = 1e-6  # kPa
_INCH = 0.0254


class SimulationError(RuntimeError):
    def __init__(self, message: str, trace: Sequence[float] = ()):
        super().__init__(message)
        self.trace = list(trace)


@dataclass(frozen=True)
class HexInstance:
    """Coil geometry (mm) and operating point; defaults are the reference test coil."""

    layout: HexLayout
    tube_length: float = 1143.0
    tube_id: float = 9.40
    tube_od: float = 10.06
    tube_thickness: float = 0.33
    spacing_horizontal: float = 19.05
    spacing_vertical: float = 25.40
    fin_spacing: float = 1.17
    fin_thickness: float = 0.10
    fins_per_inch: float = 20.0
    refrigerant: str = "R134a"
    refrigerant_pressure: float = 350.0  # kPa
    refrigerant_quality: float = 0.15
    refrigerant_mass_flow: float = 0.02  # kg/s
    refrigerant_temperature: float = 7.0  # degC, nominal; not used by the model
    air_temperature: float = 24.0  # degC
    air_pressure: float = 101.325  # kPa
    air_flow: float = 2.0  # m3/s

    def __post_init__(self):
        dims = (
            self.tube_length, self.tube_id, self.tube_od, self.tube_thickness,
            self.spacing_horizontal, self.spacing_vertical, self.fin_spacing,
            self.fin_thickness, self.fins_per_inch, self.refrigerant_pressure,
            self.refrigerant_mass_flow, self.air_pressure, self.air_flow,
        )
        if any(v <= 0 for v in dims):
            raise ValueError("all dimensions and flows must be positive")
        if not 0.0 <= self.refrigerant_quality <= 1.0:
            raise ValueError(f"inlet quality {self.refrigerant_quality} outside [0, 1]")
        if self.tube_od <= self.tube_id:
            raise ValueError("tube OD must exceed ID")
        if self.spacing_vertical <= self.tube_od:
            raise ValueError("vertical tube spacing must exceed tube OD")


@dataclass(frozen=True)
class SimulatorConfig:
    segments_per_tube: int = 10
    h_two_phase: float = 2500.0  # W/(m2 K)
    j_factor: float = 0.010
    fin_efficiency: float = 0.85
    air_prandtl: float = 0.71
    vapor_prandtl: float = 0.80
    dittus_boelter: float = 0.023
    friction_coefficient: float = 0.046
    friction_exponent: float = 0.2
    bend_loss: float = 1.5  # velocity heads per U-bend
    tolerance: float = 1e-4  # K
    max_iterations: int = 100
    relaxation: float = 0.7
    record_segments: bool = False

    def __post_init__(self):
        for name in (
            "segments_per_tube", "h_two_phase", "j_factor", "fin_efficiency",
            "air_prandtl", "vapor_prandtl", "dittus_boelter", "friction_coefficient",
            "friction_exponent", "bend_loss", "tolerance", "max_iterations", "relaxation",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.tolerance >= 0.1:
            raise ValueError("tolerance must be below 0.1 K")
        if self.fin_efficiency > 1 or self.relaxation > 1:
            raise ValueError("fin_efficiency and relaxation must not exceed 1")


@dataclass(frozen=True)
class CircuitResult:
    tubes: tuple[int, ...]
    mass_flow: float  # kg/s
    h_in: float  # kJ/kg
    h_out: float
    quality_out: float  # capped at 1
    superheat_out: float  # K
    delta_p: float  # kPa
    Q: float  # W


@dataclass(frozen=True)
class SegmentRecord:
    circuit: int
    tube: int
    segment: int  # spatial index, 0 at the front end
    T_air_in: float
    T_air_out: float
    Q: float
    quality_out: float


@dataclass(frozen=True)
class SimulationResult:
    Q: float  # W
    delta_p: float  # kPa
    per_circuit: tuple[CircuitResult, ...]
    iterations: int
    residual: float  # K
    air_duty: float  # W, from coil-level air temperatures
    refrigerant_duty: float  # W, from circuit enthalpy rise
    segments: tuple[SegmentRecord, ...] = ()

    @property
    def ratio(self) -> float:
        return self.Q / max(self.delta_p, DP_FLOOR)


@dataclass
class _Geometry:
    n_rows_pos: int
    seg_len: float  # m
    d_in: float
    flow_area: float
    c_air: float  # W/K per segment
    ua_air: float  # W/K per segment, air side only
    area_in: float  # m2 per segment, refrigerant side


def _geometry(inst: HexInstance, cfg: SimulatorConfig) -> _Geometry:
    npos = inst.layout.tubes_per_row
    S = cfg.segments_per_tube
    L = inst.tube_length / 1e3
    d_i = inst.tube_id / 1e3
    d_o = inst.tube_od / 1e3
    s_v = inst.spacing_vertical / 1e3
    s_h = inst.spacing_horizontal / 1e3
    t_f = inst.fin_thickness / 1e3
    pitch = _INCH / inst.fins_per_inch
    cp = AIR_CP * 1e3

    m_air = air_density(inst.air_pressure, inst.air_temperature) * inst.air_flow
    face = L * npos * s_v
    sigma = (s_v - d_o) / s_v * max(pitch - t_f, 1e-9) / pitch
    g_max = m_air / (face * sigma)
    h_air = cfg.j_factor * g_max * cp / cfg.air_prandtl ** (2.0 / 3.0)

    a_fin = 2.0 * (s_v * s_h - math.pi * d_o**2 / 4.0) * (L / pitch)
    a_base = math.pi * d_o * L * (1.0 - t_f / pitch)
    a_out = a_fin + a_base
    eta_o = 1.0 - a_fin / a_out * (1.0 - cfg.fin_efficiency)

    return _Geometry(
        n_rows_pos=npos,
        seg_len=L / S,
        d_in=d_i,
        flow_area=math.pi * d_i**2 / 4.0,
        c_air=m_air * cp / (npos * S),
        ua_air=h_air * eta_o * a_out / S,
        area_in=math.pi * d_i * L / S,
    )


def _eps_unmixed(ntu: float, cr: float) -> float:
    if ntu <= 0.0:
        return 0.0
    if cr < 1e-9:
        return 1.0 - math.exp(-ntu)
    return 1.0 - math.exp(ntu**0.22 / cr * (math.exp(-cr * ntu**0.78) - 1.0))


def _validate_design(design: CircuitryDesign) -> None:
    if not design.directed:
        raise ValueError("simulate needs a directed design (use orient())")
    if design.c < 1:
        raise ValueError("design has no circuits")
    tubes = sorted(t for c in design.circuits for t in c)
    if tubes != list(range(1, design.layout.t + 1)):
        raise ValueError("circuits must cover every tube exactly once")


def simulate(
    design: CircuitryDesign,
    instance: HexInstance,
    config: SimulatorConfig | None = None,
    table: SaturationTable | None = None,
) -> SimulationResult:
    cfg = config or SimulatorConfig()
    table = table or default_table()
    _validate_design(design)
    layout = instance.layout
    if design.layout != layout:
        raise ValueError("design and instance layouts differ")
    geo = _geometry(instance, cfg)
    S = cfg.segments_per_tube
    npos = geo.n_rows_pos

    sat = table(instance.refrigerant_pressure)
    T_sat = sat.T_sat
    h_f = sat.h_f * 1e3
    h_g = sat.h_g * 1e3
    cp_g = sat.cp_g * 1e3
    h_in = h_f + instance.refrigerant_quality * (h_g - h_f)

    c = design.c
    m_c = instance.refrigerant_mass_flow / c
    G = m_c / geo.flow_area

    # refrigerant-side conductances per segment
    ua_tp = 1.0 / (1.0 / geo.ua_air + 1.0 / (cfg.h_two_phase * geo.area_in))
    re_v = G * geo.d_in / sat.mu_g
    k_v = sat.mu_g * cp_g / cfg.vapor_prandtl
    h_sh = cfg.dittus_boelter * re_v**0.8 * cfg.vapor_prandtl**0.4 * k_v / geo.d_in
    ua_sh = 1.0 / (1.0 / geo.ua_air + 1.0 / (h_sh * geo.area_in))
    c_air = geo.c_air
    c_ref = m_c * cp_g
    eps_tp = 1.0 - math.exp(-ua_tp / c_air)

    def superheat_q(T_r: float, T_a: float, frac: float) -> float:
        if frac <= 0.0:
            return 0.0
        ca = frac * c_air
        cmin, cmax = (ca, c_ref) if ca < c_ref else (c_ref, ca)
        eps = _eps_unmixed(frac * ua_sh / cmin, cmin / cmax)
        return eps * cmin * (T_a - T_r)

    # per-circuit segment schedule: (tube, spatial segment, air slot, is_row1)
    schedule = []
    for circuit in design.circuits:
        segs = []
        for pos, tube in enumerate(circuit):
            row, vpos = layout.position(tube)
            js = range(S) if pos % 2 == 0 else range(S - 1, -1, -1)
            for j in js:
                segs.append((tube, j, (vpos - 1) * S + j, row == 1))
        schedule.append(segs)

    T_air = instance.air_temperature
    row2_in = [T_air] * (npos * S)
    row1_out = [T_air] * (npos * S)
    trace: list[float] = []
    omega = cfg.relaxation

    for it in range(1, cfg.max_iterations + 1):
        residual = 0.0
        profiles = []
        air_in = []
        air_out = []
        for segs in schedule:
            h = h_in
            prof = [h]
            a_in = []
            a_out = []
            for _, _, slot, first_row in segs:
                T_a = T_air if first_row else row2_in[slot]
                if h < h_g:
                    dT = T_a - T_sat
                    if dT > 0.0:
                        q = eps_tp * c_air * dT
                        need = m_c * (h_g - h)
                        if q > need:
                            frac = need / q
                            q2 = superheat_q(T_sat, T_a, 1.0 - frac)
                            q = need + q2
                            h = h_g + q2 / m_c
                        else:
                            h += q / m_c
                    else:
                        q = 0.0
                else:
                    q = superheat_q(T_sat + (h - h_g) / cp_g, T_a, 1.0)
                    h += q / m_c
                prof.append(h)
                out = T_a - q / c_air
                a_in.append(T_a)
                a_out.append(out)
                if first_row:
                    row1_out[slot] = out
                    old = row2_in[slot]
                    diff = out - old
                    if abs(diff) > residual:
                        residual = abs(diff)
                    row2_in[slot] = old + omega * diff
            profiles.append(prof)
            air_in.append(a_in)
            air_out.append(a_out)
        trace.append(residual)
        if residual < cfg.tolerance:
            break
    else:
        raise SimulationError(
            f"air coupling did not converge in {cfg.max_iterations} sweeps "
            f"(last residual {trace[-1]:.3g} K)",
            trace,
        )

    records = []
    circuits_out = []
    air_duty = 0.0
    for ci, (segs, prof) in enumerate(zip(schedule, profiles)):
        q_c = 0.0
        for k, (tube, j, _, _) in enumerate(segs):
            q = m_c * (prof[k + 1] - prof[k])
            q_c += q
            T_a, T_o = air_in[ci][k], air_out[ci][k]
            air_duty += c_air * (T_a - T_o)
            if cfg.record_segments:
                x_out = min((prof[k + 1] - h_f) / (h_g - h_f), 1.0)
                records.append(SegmentRecord(ci, tube, j, T_a, T_o, q, x_out))
        circuits_out.append(q_c)
    ref_duty = sum(m_c * (prof[-1] - prof[0]) for prof in profiles)
    Q_total = sum(circuits_out)

    # hydraulics
    dps = [
        _circuit_dp(prof, len(circuit), S, G, geo, cfg, table, instance.refrigerant_pressure,
                    h_f, h_g, T_sat, cp_g)
        for prof, circuit in zip(profiles, design.circuits)
    ]

    per_circuit = []
    for circuit, prof, q_c, dp in zip(design.circuits, profiles, circuits_out, dps):
        h_out = prof[-1]
        per_circuit.append(
            CircuitResult(
                tubes=tuple(circuit),
                mass_flow=m_c,
                h_in=h_in / 1e3,
                h_out=h_out / 1e3,
                quality_out=min((h_out - h_f) / (h_g - h_f), 1.0),
                superheat_out=max(0.0, (h_out - h_g) / cp_g),
                delta_p=dp,
                Q=q_c,
            )
        )
    return SimulationResult(
        Q=Q_total,
        delta_p=max(dps),
        per_circuit=tuple(per_circuit),
        iterations=len(trace),
        residual=trace[-1],
        air_duty=air_duty,
        refrigerant_duty=ref_duty,
        segments=tuple(records),
    )


def _circuit_dp(prof, n_tubes, S, G, geo, cfg, table, p_in, h_f, h_g, T_sat, cp_g) -> float:
    """Friction along the tubes plus one bend loss per tube-to-tube connection [kPa]."""
    p = p_in
    dyn = G * G / 2.0
    l_over_d = geo.seg_len / geo.d_in
    h_fg = h_g - h_f
    for tube in range(n_tubes):
        for s in range(S):
            k = tube * S + s
            h_mid = 0.5 * (prof[k] + prof[k + 1])
            v, mu = _specific_volume(table, p, h_mid, h_f, h_fg, h_g, T_sat, cp_g)
            re = G * geo.d_in / mu
            f = cfg.friction_coefficient * re ** (-cfg.friction_exponent)
            p -= f * dyn * v * l_over_d / 1e3
        if tube < n_tubes - 1:
            v, _ = _specific_volume(table, p, prof[(tube + 1) * S], h_f, h_fg, h_g, T_sat, cp_g)
            p -= cfg.bend_loss * dyn * v / 1e3
    return p_in - p


def _specific_volume(table, p, h, h_f, h_fg, h_g, T_sat_in, cp_g):
    """Homogeneous specific volume [m3/kg] and McAdams viscosity at local pressure."""
    _, T_sat, _, _, rho_f, rho_g, mu_f, mu_g, _ = table.interp(p)
    x = (h - h_f) / h_fg
    if x < 1.0:
        x = max(x, 0.0)
        v = x / rho_g + (1.0 - x) / rho_f
        mu = 1.0 / (x / mu_g + (1.0 - x) / mu_f)
        return v, mu
    T = T_sat_in + (h - h_g) / cp_g
    v = (T + 273.15) / ((T_sat + 273.15) * rho_g)
    return v, mu_g


@dataclass(frozen=True)
class RatioResult:
    value: float  # W/kPa
    Q: float
    delta_p: float
    satisfied: bool


def evaluate_Q(
    x: CircuitryVector, instance: HexInstance, config: SimulatorConfig | None = None
) -> float | None:
    """Heat capacity of the first orientation of ``x``; None when infeasible."""
    if not validate(x):
        return None
    return simulate(orient(decode(x))[0], instance, config).Q


def ratio_from(Q: float, delta_p: float, q_lim: float) -> RatioResult:
    return RatioResult(Q / max(delta_p, DP_FLOOR), Q, delta_p, Q >= q_lim)


def evaluate_ratio(
    x: CircuitryVector,
    instance: HexInstance,
    config: SimulatorConfig | None = None,
    q_lim: float = 3900.0,
) -> RatioResult | None:
    if q_lim <= 0:
        raise ValueError("q_lim must be positive")
    if not validate(x):
        return None
    res = simulate(orient(decode(x))[0], instance, config)
    return ratio_from(res.Q, res.delta_p, q_lim)


@dataclass
class Evaluator:
    """Memoizing, call-counting front end to :func:`simulate`.

    Thread safe: concurrent requests for the same design wait on a single
    simulation, and only cache misses count as simulator calls.  When
    ``log`` is given, one JSON object is appended per request (hits included).
    """

    instance: HexInstance
    config: SimulatorConfig = field(default_factory=SimulatorConfig)
    log: IO[str] | None = None
    calls: int = 0
    hits: int = 0
    table: SaturationTable | None = None

    def __post_init__(self):
        self._cache: dict[str, Future] = {}
        self._lock = threading.Lock()
        self._table = self.table or default_table()

    def simulate(self, design: CircuitryDesign, vector: CircuitryVector | None = None,
                 orientation: int = 0) -> tuple[SimulationResult, bool]:
        key = design.key()
        start = time.perf_counter()
        with self._lock:
            fut = self._cache.get(key)
            hit = fut is not None
            if hit:
                self.hits += 1
            else:
                fut = Future()
                self._cache[key] = fut
                self.calls += 1
        if not hit:
            try:
                fut.set_result(simulate(design, self.instance, self.config, self._table))
            except BaseException as exc:
                fut.set_exception(exc)
        result = fut.result()
        if self.log is not None:
            rec = {
                "vector": (vector or _encode(design)).to_text(),
                "orientation": orientation,
                "Q_W": result.Q,
                "dP_kPa": result.delta_p,
                "wall_ms": (time.perf_counter() - start) * 1e3,
                "cache_hit": hit,
            }
            with self._lock:
                self.log.write(json.dumps(rec) + "\n")
        return result, hit

    def is_cached(self, design: CircuitryDesign) -> bool:
        with self._lock:
            return design.key() in self._cache

    def evaluate(self, x: CircuitryVector, orientation: int = 0) -> SimulationResult | None:
        if not validate(x):
            return None
        return self.simulate(orient(decode(x))[orientation], x, orientation)[0]

    def evaluate_Q(self, x: CircuitryVector) -> float | None:
        res = self.evaluate(x)
        return None if res is None else res.Q

    def evaluate_ratio(self, x: CircuitryVector, q_lim: float = 3900.0) -> RatioResult | None:
        res = self.evaluate(x)
        return None if res is None else ratio_from(res.Q, res.delta_p, q_lim)

    def preload(self, lines) -> int:
        """Seed the cache from a previous JSONL log; returns entries added.

        Preloaded entries keep Q and delta_p only; they are not counted as calls.
        """
        added = 0
        for line in lines:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            x = CircuitryVector.from_text(rec["vector"])
            design = orient(decode(x))[rec["orientation"]]
            key = design.key()
            with self._lock:
                if key in self._cache:
                    continue
                fut = Future()
                fut.set_result(SimulationResult(rec["Q_W"], rec["dP_kPa"], (), 0, 0.0, rec["Q_W"], rec["Q_W"]))
                self._cache[key] = fut
            added += 1
        return added


def _encode(design: CircuitryDesign) -> CircuitryVector:
    from .circuitry import encode

    return encode(design)


def config_dict(obj) -> dict:
    d = asdict(obj)
    d.pop("layout", None)
    return d


def with_air_temperature(instance: HexInstance, T: float) -> HexInstance:
    return replace(instance, air_temperature=T)
