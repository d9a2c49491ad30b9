"""R134a saturation properties and dry-air constants.

Properties come from a small embedded saturation table (``data/``) with
linear interpolation in pressure.  Units follow the table header: kPa, degC,
kJ/kg, kg/m3, Pa.s, kJ/(kg K).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, fields
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
    "PropertyDomainError",
    "SaturationRow",
    "SaturationTable",
    "RefrigerantState",
    "default_table",
    "load_table",
    "sat_props",
    "enthalpy_at",
    "quality_at",
    "state_from_enthalpy",
    "AIR_CP",
    "AIR_GAS_CONSTANT",
    "air_density",
]

AIR_CP = 1.006  # kJ/(kg K)
AIR_GAS_CONSTANT = 0.287055  # kJ/(kg K)

_COLUMNS = ("pressure", "T_sat", "h_f", "h_g", "rho_f", "rho_g", "mu_f", "mu_g", "cp_g")


class PropertyDomainError(ValueError):
    """Raised for states outside the embedded property range."""


@dataclass(frozen=True)
class SaturationRow:
    pressure: float
    T_sat: float
    h_f: float
    h_g: float
    rho_f: float
    rho_g: float
    mu_f: float
    mu_g: float
    cp_g: float

    @property
    def h_fg(self) -> float:
        return self.h_g - self.h_f


class SaturationTable:
    """Saturation rows ordered by strictly increasing pressure."""

    def __init__(self, rows: list[SaturationRow], name: str = "R134a"):
        if len(rows) < 2:
            raise ValueError("need at least two rows")
        self.name = name
        self.rows = tuple(rows)
        self._data = np.array([[getattr(r, c) for c in _COLUMNS] for r in rows], dtype=float)
        p = self._data[:, 0]
        if np.any(np.diff(p) <= 0):
            raise ValueError("pressures must be strictly increasing")
        for r in rows:
            if r.h_g <= r.h_f or r.rho_f <= r.rho_g:
                raise ValueError(f"inconsistent saturation row at {r.pressure} kPa")
        self._p = p.tolist()

    @property
    def p_min(self) -> float:
        return self._p[0]

    @property
    def p_max(self) -> float:
        return self._p[-1]

    def __call__(self, p: float) -> SaturationRow:
        return SaturationRow(*self.interp(p))

    def interp(self, p: float) -> tuple[float, ...]:
        """Interpolated row values as a tuple, in column order."""
        if not self.p_min <= p <= self.p_max:
            raise PropertyDomainError(
                f"pressure {p:.3f} kPa outside table range [{self.p_min}, {self.p_max}] kPa"
            )
        k = int(np.searchsorted(self._p, p, side="right")) - 1
        k = min(k, len(self._p) - 2)
        lo, hi = self._data[k], self._data[k + 1]
        w = (p - self._p[k]) / (self._p[k + 1] - self._p[k])
        if w == 0.0:
            return tuple(lo.tolist())
        if w == 1.0:
            return tuple(hi.tolist())
        return tuple((lo + w * (hi - lo)).tolist())


def _parse(text: str, name: str) -> SaturationTable:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(io.StringIO("\n".join(lines)))
    header = next(reader)
    if len(header) != len(_COLUMNS):
        raise ValueError(f"expected {len(_COLUMNS)} columns, got {header}")
    rows = [SaturationRow(*(float(v) for v in rec)) for rec in reader if rec]
    return SaturationTable(rows, name)


def load_table(path: str | Path) -> SaturationTable:
    path = Path(path)
    return _parse(path.read_text(), path.stem)


@lru_cache(maxsize=1)
def default_table() -> SaturationTable:
    text = resources.files("hexcircuit").joinpath("data/r134a_saturation.csv").read_text()
    return _parse(text, "R134a")


def sat_props(p: float, table: SaturationTable | None = None) -> SaturationRow:
    return (table or default_table())(p)


def enthalpy_at(p: float, quality: float, table: SaturationTable | None = None) -> float:
    if not 0.0 <= quality <= 1.0:
        raise PropertyDomainError(f"quality {quality} outside [0, 1]")
    row = sat_props(p, table)
    return row.h_f + quality * (row.h_g - row.h_f)


def quality_at(p: float, h: float, table: SaturationTable | None = None) -> float:
    """Vapour quality for enthalpy ``h``; not clipped, so >1 means superheated."""
    row = sat_props(p, table)
    return (h - row.h_f) / (row.h_g - row.h_f)


@dataclass(frozen=True)
class RefrigerantState:
    pressure: float
    enthalpy: float
    temperature: float
    quality: float
    superheat: float = 0.0

    @property
    def two_phase(self) -> bool:
        return self.quality < 1.0


def state_from_enthalpy(p: float, h: float, table: SaturationTable | None = None) -> RefrigerantState:
    """State at pressure ``p`` and enthalpy ``h``; vapour cp taken constant at saturation."""
    row = sat_props(p, table)
    if h < row.h_f:
        raise PropertyDomainError(f"subcooled state h={h:.3f} < h_f={row.h_f:.3f} kJ/kg")
    if h <= row.h_g:
        x = (h - row.h_f) / row.h_fg
        return RefrigerantState(p, h, row.T_sat, x)
    dT = (h - row.h_g) / row.cp_g
    return RefrigerantState(p, h, row.T_sat + dT, 1.0, dT)


def air_density(p_kpa: float, T_c: float) -> float:
    """Dry-air density from the ideal-gas law [kg/m3]."""
    return p_kpa / (AIR_GAS_CONSTANT * (T_c + 273.15))


def table_columns() -> tuple[str, ...]:
    return tuple(f.name for f in fields(SaturationRow))
