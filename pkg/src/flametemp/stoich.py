"""Reactant and product mixtures, oxidizer presets and element bookkeeping."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Mapping

from .errors import RichMixtureError, UnknownSpecies, UnsupportedFuel
from .thermo import ThermoDatabase, T_REF, h_molar

ONE_ATM = 101325.0  # Pa

# relative tolerance for treating a leftover O2 amount as exactly zero
_O2_SNAP = 1e-12


@dataclass(frozen=True)
class Component:
    species: str
    moles: float
    temperature: float = T_REF

    def __post_init__(self):
        object.__setattr__(self, "species", self.species.strip().upper())
        if not self.moles >= 0:
            raise ValueError(f"moles of {self.species} must be >= 0, got {self.moles}")
        if not self.temperature > 0:
            raise ValueError(f"temperature of {self.species} must be > 0, got {self.temperature}")


@dataclass(frozen=True)
class MixtureSpec:
    entries: tuple[Component, ...]
    pressure: float = ONE_ATM

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if not any(c.moles > 0 for c in self.entries):
            raise ValueError("mixture needs at least one entry with positive moles")
        if not self.pressure > 0:
            raise ValueError(f"pressure must be positive, got {self.pressure}")

    @classmethod
    def from_moles(cls, moles: Mapping[str, float], temperature: float = T_REF, pressure: float = ONE_ATM):
        return cls(tuple(Component(sp, n, temperature) for sp, n in moles.items()), pressure)

    @property
    def moles(self) -> dict[str, float]:
        """Moles per species; repeated species are summed."""
        out: dict[str, float] = {}
        for c in self.entries:
            out[c.species] = out.get(c.species, 0.0) + c.moles
        return out

    @property
    def total_moles(self) -> float:
        return sum(c.moles for c in self.entries)

    def mole_fractions(self) -> dict[str, float]:
        total = self.total_moles
        return {sp: n / total for sp, n in self.moles.items()}

    def at_temperature(self, T: float) -> "MixtureSpec":
        return replace(self, entries=tuple(replace(c, temperature=T) for c in self.entries))

    def scaled(self, factor: float) -> "MixtureSpec":
        return replace(self, entries=tuple(replace(c, moles=c.moles * factor) for c in self.entries))

    def __add__(self, other: "MixtureSpec") -> "MixtureSpec":
        return MixtureSpec(self.entries + other.entries, self.pressure)


class Oxidizer(enum.Enum):
    PURE_O2 = "o2"
    AIR3 = "air3"
    AIR4 = "air4"

    @property
    def fractions(self) -> dict[str, float]:
        """Mole fractions of the oxidizer stream, normalized to sum to one."""
        raw = _OXIDIZER_PERCENT[self]
        total = sum(raw.values())
        return {sp: v / total for sp, v in raw.items()}


_OXIDIZER_PERCENT = {
    Oxidizer.PURE_O2: {"O2": 100.0},
    Oxidizer.AIR3: {"N2": 78.0, "O2": 21.0, "AR": 1.0},
    Oxidizer.AIR4: {"N2": 78.0840, "O2": 20.9476, "AR": 0.9365, "CO2": 0.0319},
}


@dataclass(frozen=True)
class FuelSpec:
    name: str
    carbon: float
    hydrogen: float

    def __post_init__(self):
        object.__setattr__(self, "name", self.name.strip().upper())
        if self.carbon < 0 or not self.hydrogen > 0:
            raise UnsupportedFuel(f"fuel {self.name} needs x >= 0 carbon and y > 0 hydrogen atoms")

    @property
    def o2_per_mole(self) -> float:
        return self.carbon + self.hydrogen / 4

    @classmethod
    def from_db(cls, name: str, db: ThermoDatabase) -> "FuelSpec":
        comp = db[name].composition
        extra = set(comp) - {"C", "H"}
        if extra:
            raise UnsupportedFuel(f"fuel {name} contains {sorted(extra)}; only CxHy fuels are supported")
        return cls(db[name].name, comp.get("C", 0.0), comp.get("H", 0.0))


def element_totals(mix: MixtureSpec, db: ThermoDatabase) -> dict[str, float]:
    """Element moles b_k = sum_j a_jk n_j, in database element order."""
    b: dict[str, float] = {}
    for c in mix.entries:
        for el, count in db[c.species].composition.items():
            b[el] = b.get(el, 0.0) + count * c.moles
    return {el: b[el] for el in db.elements if el in b}


def mixture_enthalpy(mix: MixtureSpec, db: ThermoDatabase, T_override: float | None = None) -> tuple[float, bool]:
    """Total enthalpy in J and whether any term was extrapolated.

    Each entry is evaluated at its own temperature unless ``T_override`` is given.
    """
    total = 0.0
    extrapolated = False
    for c in mix.entries:
        h = h_molar(db[c.species], c.temperature if T_override is None else T_override)
        total += c.moles * h.value
        extrapolated = extrapolated or h.extrapolated
    return total, extrapolated


def stoichiometric_reactants(
    fuel: FuelSpec | str,
    ox: Oxidizer,
    fuel_moles: float = 1.0,
    T0: float = T_REF,
    P: float = ONE_ATM,
    db: ThermoDatabase | None = None,
) -> MixtureSpec:
    if isinstance(fuel, str):
        if db is None:
            raise TypeError("a thermo database is needed to resolve a fuel given by name")
        fuel = FuelSpec.from_db(fuel, db)
    elif db is not None:
        FuelSpec.from_db(fuel.name, db)
    if not fuel_moles > 0:
        raise ValueError("fuel_moles must be positive")
    n_o2 = fuel_moles * fuel.o2_per_mole
    fr = ox.fractions
    entries = [Component(fuel.name, fuel_moles, T0)]
    for sp, x in fr.items():
        n = n_o2 if sp == "O2" else n_o2 * x / fr["O2"]
        entries.append(Component(sp, n, T0))
    return MixtureSpec(tuple(entries), P)


def complete_products(reactants: MixtureSpec, db: ThermoDatabase) -> MixtureSpec:
    """Single-step complete combustion: C -> CO2, H -> H2O, inerts and excess O2 pass through."""
    b = element_totals(reactants, db)
    allowed = {"C", "H", "O", "N", "AR"}
    if set(b) - allowed:
        raise UnsupportedFuel(f"elements {sorted(set(b) - allowed)} have no complete-combustion product")
    n_c = b.get("C", 0.0)
    n_h = b.get("H", 0.0)
    n_o = b.get("O", 0.0)
    o2_left = (n_o - 2 * n_c - n_h / 2) / 2
    if o2_left < -_O2_SNAP * max(n_o, 1.0):
        raise RichMixtureError(
            f"mixture is fuel-rich: {-2 * o2_left:.6g} mol of O atoms short of complete combustion"
        )
    if abs(o2_left) <= _O2_SNAP * max(n_o, 1.0):
        o2_left = 0.0
    products = {"CO2": n_c, "H2O": n_h / 2, "O2": o2_left, "N2": b.get("N", 0.0) / 2, "AR": b.get("AR", 0.0)}
    for sp, n in products.items():
        if n > 0 and sp not in db:
            raise UnknownSpecies(f"product species {sp} missing from the thermo database")
    temps = [c.temperature for c in reactants.entries if c.moles > 0]
    T = sum(temps) / len(temps)
    return MixtureSpec(
        tuple(Component(sp, n, T) for sp, n in products.items() if n > 0),
        reactants.pressure,
    )


def mass_fractions(moles: Mapping[str, float], db: ThermoDatabase) -> dict[str, float]:
    masses = {sp: n * db[sp].molecular_weight for sp, n in moles.items()}
    total = sum(masses.values())
    return {sp: m / total for sp, m in masses.items()}
