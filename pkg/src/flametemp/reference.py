"""Published adiabatic flame temperatures for the eight stoichiometric benchmark cases.

Reactants at 298.15 K and 1 atm. ``cearun_K`` is the NASA CEA (CEARUN) value;
``grimech_K`` is the GRI-Mech 3.0 value (spreadsheet goal-seek for complete
combustion, Cantera for equilibrium). Air for the GRI-Mech values is
N2/O2/Ar = 78/21/1 by mole.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType


@dataclass(frozen=True)
class ReferenceCase:
    fuel: str
    oxidizer: str
    mode: str
    cearun_K: float
    grimech_K: float
    deviation_pct: float

    @property
    def label(self) -> str:
        ox = "oxy" if self.oxidizer == "o2" else "air"
        return f"{ox}-{self.fuel.lower()} {self.mode}"


_ROWS = (
    ReferenceCase("CH4", "o2", "complete", 5166.47, 5153.68, 0.248),
    ReferenceCase("H2", "o2", "complete", 4930.56, 4890.21, 0.818),
    ReferenceCase("CH4", "air3", "complete", 2326.35, 2330.55, 0.181),
    ReferenceCase("H2", "air3", "complete", 2520.33, 2524.36, 0.160),
    ReferenceCase("CH4", "o2", "equilibrium", 3050.12, 3052.06, 0.064),
    ReferenceCase("H2", "o2", "equilibrium", 3074.51, 3076.92, 0.078),
    ReferenceCase("CH4", "air3", "equilibrium", 2224.25, 2156.25, 3.057),
    ReferenceCase("H2", "air3", "equilibrium", 2378.62, 2295.29, 3.503),
)

REFERENCE_TABLE = MappingProxyType({(r.fuel, r.oxidizer, r.mode): r for r in _ROWS})


def lookup(fuel: str, oxidizer: str, mode: str) -> ReferenceCase | None:
    """Reference row for a case; AIR4 cases share the AIR3 row's values."""
    ox = "air3" if oxidizer.lower() == "air4" else oxidizer.lower()
    return REFERENCE_TABLE.get((fuel.upper(), ox, mode.lower()))


def deviation_percent(t_ad: float, reference_K: float, cearun_K: float) -> float:
    """Absolute difference from ``reference_K`` as a percentage of the CEA value."""
    return abs(t_ad - reference_K) / cearun_K * 100.0
