"""Sectioned key-value run configuration (INI syntax).

Recognised sections and keys::

    [instance]      any HexInstance field except the layout (mm, kPa, kg/s, degC, m3/s)
    [simulator]     any SimulatorConfig field
    [penalty]       lam, q_lim (W)
    [budget]        max_simulator_calls, max_wall_seconds, seed, max_candidates
    [evolution]     mu, lam, relink_prob
    [thermo]        table = path to a saturation table file

Unknown sections or keys are rejected so typos do not silently fall back to
defaults.
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .circuitry import ContractError
from .simulator import HexInstance, SimulatorConfig
from .solvers import Budget, EvolutionConfig, PenaltyConfig

__all__ = ["RunConfig", "load_config", "parse_config", "config_hash", "DEFAULT_CONFIG_TEXT"]

DEFAULT_CONFIG_TEXT = """\
# hexcircuit run configuration; every key is optional
[instance]
# refrigerant inlet pressure, kPa
refrigerant_pressure = 350.0
# refrigerant inlet quality, -
refrigerant_quality = 0.15
# refrigerant mass flow, kg/s
refrigerant_mass_flow = 0.02
# air inlet temperature, degC
air_temperature = 24.0
# air volume flow, m3/s
air_flow = 2.0

[simulator]
segments_per_tube = 10
# relaxation factor for the row-coupling sweeps, -
relaxation = 0.7

[penalty]
lam = 1e6
# heat-capacity floor, W
q_lim = 3900

[budget]
max_simulator_calls = 2500
# s
max_wall_seconds = 86400
seed = 0

[evolution]
mu = 20
lam = 40
relink_prob = 0.5
"""


@dataclass
class RunConfig:
    instance: dict = field(default_factory=dict)
    simulator: SimulatorConfig = field(default_factory=SimulatorConfig)
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    budget: Budget = field(default_factory=Budget)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    table: str | None = None

    def as_dict(self) -> dict:
        return {
            "instance": dict(sorted(self.instance.items())),
            "simulator": asdict(self.simulator),
            "penalty": asdict(self.penalty),
            "budget": asdict(self.budget),
            "evolution": asdict(self.evolution),
            "table": self.table,
        }


def _coerce(cls, section: configparser.SectionProxy, skip=()) -> dict:
    types = {f.name: f.type for f in fields(cls) if f.name not in skip}
    out = {}
    for key, raw in section.items():
        if key not in types:
            raise ContractError(f"unknown key {key!r} in [{section.name}]")
        kind = str(types[key])
        try:
            if kind.startswith("int"):
                out[key] = int(raw)
            elif kind.startswith("float"):
                out[key] = float(raw)
            elif kind.startswith("bool"):
                out[key] = section.getboolean(key)
            else:
                out[key] = raw.strip()
        except ValueError as exc:
            raise ContractError(f"bad value for {key!r} in [{section.name}]: {raw!r}") from exc
    return out


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    cp.read_string(text)
    known = {"instance", "simulator", "penalty", "budget", "evolution", "thermo"}
    extra = set(cp.sections()) - known
    if extra:
        raise ContractError(f"unknown config sections: {sorted(extra)}")
    cfg = RunConfig()
    try:
        if cp.has_section("instance"):
            cfg.instance = _coerce(HexInstance, cp["instance"], skip=("layout",))
        if cp.has_section("simulator"):
            cfg.simulator = SimulatorConfig(**_coerce(SimulatorConfig, cp["simulator"]))
        if cp.has_section("penalty"):
            cfg.penalty = PenaltyConfig(**_coerce(PenaltyConfig, cp["penalty"]))
        if cp.has_section("budget"):
            cfg.budget = Budget(**_coerce(Budget, cp["budget"]))
        if cp.has_section("evolution"):
            cfg.evolution = EvolutionConfig(**_coerce(EvolutionConfig, cp["evolution"]))
    except ContractError:
        raise
    except ValueError as exc:
        raise ContractError(str(exc)) from exc
    if cp.has_section("thermo"):
        keys = set(cp["thermo"])
        if keys - {"table"}:
            raise ContractError(f"unknown key(s) {sorted(keys - {'table'})} in [thermo]")
        cfg.table = cp["thermo"].get("table")
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    cfg = parse_config(path.read_text())
    if cfg.table and not Path(cfg.table).is_absolute():
        cfg.table = str((path.parent / cfg.table).resolve())
    return cfg


def config_hash(cfg: RunConfig) -> str:
    blob = json.dumps(cfg.as_dict(), sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
