"""
NASA 7-coefficient thermodynamic data: CHEMKIN THERMO parsing, serialization
and property evaluation for individual ideal-gas species.

Each species carries two coefficient sets a1..a7 (low and high temperature
subranges joined at ``t_mid``)::

    Cp/R  = a1 + a2 T + a3 T^2 + a4 T^3 + a5 T^4
    H/RT  = a1 + a2 T/2 + a3 T^2/3 + a4 T^3/4 + a5 T^4/5 + a6/T
    S/R   = a1 ln T + a2 T + a3 T^2/2 + a4 T^3/3 + a5 T^4/4 + a7

The low set is used for T < t_mid and the high set for T >= t_mid. Outside
[t_min, t_max] the nearest subrange is extrapolated and the result flagged.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import DomainError, DuplicateSpecies, ParseError, PatchError, SerializeError, UnknownSpecies

R_UNIVERSAL = 8.314510  # J/(mol K)
T_REF = 298.15  # K

N2_A6_LOW_ORIGINAL = -1020.8999
N2_A6_LOW_PATCHED = -1021.07188

DEFAULT_T_MID = 1000.0
BUNDLED_DB = "gri30_thermo.dat"

# g/mol; used only for mass-fraction reporting
ATOMIC_WEIGHTS = {"C": 12.011, "H": 1.008, "O": 15.999, "N": 14.007, "AR": 39.95}


@dataclass(frozen=True)
class NasaPoly7:
    t_min: float
    t_mid: float
    t_max: float
    low: tuple[float, ...]
    high: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "low", tuple(float(a) for a in self.low))
        object.__setattr__(self, "high", tuple(float(a) for a in self.high))
        if len(self.low) != 7 or len(self.high) != 7:
            raise ValueError("NASA-7 polynomials need exactly 7 coefficients per subrange")
        if not (self.t_min < self.t_mid < self.t_max):
            raise ValueError(
                f"temperature bounds must satisfy t_min < t_mid < t_max, got "
                f"{self.t_min}, {self.t_mid}, {self.t_max}"
            )
        if not all(math.isfinite(a) for a in self.low + self.high):
            raise ValueError("non-finite polynomial coefficient")

    def coeffs(self, T: float) -> tuple[float, ...]:
        return self.low if T < self.t_mid else self.high

    def in_range(self, T: float) -> bool:
        return self.t_min <= T <= self.t_max


@dataclass(frozen=True)
class SpeciesRecord:
    name: str
    composition: Mapping[str, float]
    phase: str
    poly: NasaPoly7
    note: str = ""
    source_line: int | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "name", self.name.upper())
        comp = {el.strip().upper(): float(n) for el, n in dict(self.composition).items()}
        if not comp:
            raise ValueError(f"species {self.name} has an empty composition")
        if any(n <= 0 for n in comp.values()):
            raise ValueError(f"species {self.name} has a non-positive atom count")
        object.__setattr__(self, "composition", comp)

    def __hash__(self):
        return hash((self.name, tuple(self.composition.items()), self.phase, self.poly, self.note))

    @property
    def molecular_weight(self) -> float:
        """Molar mass in g/mol from the bundled atomic-weight table."""
        try:
            return sum(ATOMIC_WEIGHTS[el] * n for el, n in self.composition.items())
        except KeyError as exc:
            raise KeyError(f"no atomic weight for element {exc.args[0]}") from None


class ThermoDatabase:
    """Immutable, ordered collection of species records with case-insensitive lookup."""

    def __init__(self, species: Iterable[SpeciesRecord]):
        self._species = tuple(species)
        by_name: dict[str, SpeciesRecord] = {}
        for sp in self._species:
            if sp.name in by_name:
                raise DuplicateSpecies(f"duplicate species {sp.name}", sp.source_line)
            by_name[sp.name] = sp
        self._by_name = by_name
        self._elements = tuple(sorted({el for sp in self._species for el in sp.composition}))

    @property
    def species(self) -> tuple[SpeciesRecord, ...]:
        return self._species

    @property
    def elements(self) -> tuple[str, ...]:
        return self._elements

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(sp.name for sp in self._species)

    def __getitem__(self, name: str) -> SpeciesRecord:
        try:
            return self._by_name[name.strip().upper()]
        except KeyError:
            raise UnknownSpecies(f"species {name!r} not in thermo database") from None

    def __contains__(self, name: object) -> bool:
        return isinstance(name, str) and name.strip().upper() in self._by_name

    def __iter__(self) -> Iterator[SpeciesRecord]:
        return iter(self._species)

    def __len__(self) -> int:
        return len(self._species)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ThermoDatabase):
            return NotImplemented
        return self._species == other._species

    def __hash__(self):
        return hash(self._species)

    def __repr__(self):
        return f"ThermoDatabase({len(self)} species, elements={list(self._elements)})"

    def index(self, name: str) -> int:
        return self.names.index(self[name].name)

    def with_record(self, record: SpeciesRecord) -> "ThermoDatabase":
        """Return a copy with the same-named record replaced."""
        self[record.name]
        return ThermoDatabase(record if sp.name == record.name else sp for sp in self._species)


@dataclass(frozen=True)
class EvalResult:
    value: float
    extrapolated: bool

    def __float__(self):
        return float(self.value)


# ---------------------------------------------------------------------------
# Parsing / serialization
# ---------------------------------------------------------------------------


def _float_field(text: str, lineno: int, what: str) -> float:
    try:
        return float(text.strip().replace("D", "E").replace("d", "e"))
    except ValueError:
        raise ParseError(f"cannot parse {what} from {text!r}", lineno) from None


def _require_width(line: str, width: int, lineno: int):
    if len(line) < width:
        raise ParseError(f"line has {len(line)} columns, need at least {width}", lineno)


def _parse_block(block: list[tuple[int, str]], default_t_mid: float) -> SpeciesRecord:
    (n1, l1), (n2, l2), (n3, l3), (n4, l4) = block
    _require_width(l1, 80, n1)
    name = l1[:18].split()[0] if l1[:18].strip() else ""
    if not name:
        raise ParseError("missing species name", n1)
    note = l1[18:24].strip()

    composition: dict[str, float] = {}
    for k in range(4):
        fld = l1[24 + 5 * k : 29 + 5 * k]
        symbol, count = fld[:2].strip().upper(), fld[2:].strip()
        if not symbol:
            continue
        n = _float_field(count, n1, f"atom count for {symbol}") if count else 0.0
        if n != 0.0:
            composition[symbol] = composition.get(symbol, 0.0) + n
    phase = l1[44]
    t_min = _float_field(l1[45:55], n1, "T_min")
    t_max = _float_field(l1[55:65], n1, "T_max")
    t_mid = _float_field(l1[65:73], n1, "T_mid") if l1[65:73].strip() else default_t_mid

    coeffs: list[float] = []
    for lineno, line, nfields in ((n2, l2, 5), (n3, l3, 5), (n4, l4, 4)):
        _require_width(line, 80, lineno)
        for k in range(nfields):
            coeffs.append(_float_field(line[15 * k : 15 * (k + 1)], lineno, f"coefficient {len(coeffs) + 1}"))

    try:
        poly = NasaPoly7(t_min, t_mid, t_max, low=coeffs[7:14], high=coeffs[0:7])
        return SpeciesRecord(name, composition, phase, poly, note=note, source_line=n1)
    except ValueError as exc:
        raise ParseError(f"species {name}: {exc}", n1) from None


def parse_thermo_text(text: str) -> ThermoDatabase:
    """Parse CHEMKIN THERMO fixed-column text into a database.

    Comment lines (leading ``!``) and blank lines are skipped. A missing
    ``END`` is tolerated with a warning; anything after ``END`` is ignored.
    """
    default_t_mid = DEFAULT_T_MID
    records: list[SpeciesRecord] = []
    block: list[tuple[int, str]] = []
    expect_globals = False
    seen_end = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r\n")
        stripped = line.strip()
        if not stripped or stripped.startswith("!"):
            continue
        if not block and not records and stripped.upper().startswith("THERMO"):
            expect_globals = True
            continue
        if expect_globals:
            expect_globals = False
            parts = stripped.split()
            if len(parts) < 3:
                raise ParseError("expected three default temperatures after THERMO", lineno)
            default_t_mid = _float_field(parts[1], lineno, "default T_mid")
            continue
        if not block and stripped.upper().startswith("END"):
            seen_end = True
            break

        marker = str(len(block) + 1)
        _require_width(line, 80, lineno)
        if line[79] != marker:
            raise ParseError(f"expected line marker {marker} in column 80, found {line[79]!r}", lineno)
        block.append((lineno, line))
        if len(block) == 4:
            rec = _parse_block(block, default_t_mid)
            if any(r.name == rec.name for r in records):
                raise DuplicateSpecies(f"duplicate species {rec.name}", lineno - 3)
            records.append(rec)
            block = []

    if block:
        raise ParseError("file ends inside a species block", block[-1][0])
    if not records:
        raise ParseError("no species found")
    if not seen_end:
        warnings.warn("thermo data has no END line; file may be truncated", stacklevel=2)
    return ThermoDatabase(records)


def _count_field(n: float, name: str) -> str:
    text = str(int(n)) if float(n).is_integer() else f"{n:g}"
    if len(text) > 3:
        raise SerializeError(f"atom count {n} of {name} does not fit in 3 columns")
    return f"{text:>3}"


def serialize_thermo(db: ThermoDatabase) -> str:
    """Write ``db`` back out in the same fixed-column format."""
    lines = ["THERMO", f"{300.0:10.3f}{DEFAULT_T_MID:10.3f}{5000.0:10.3f}"]
    for sp in db:
        if len(sp.name) > 18:
            raise SerializeError(f"species name {sp.name!r} longer than 18 characters")
        if len(sp.composition) > 4:
            raise SerializeError(f"species {sp.name} has more than 4 elements")
        if len(sp.note) > 6:
            raise SerializeError(f"species {sp.name} note longer than 6 characters")
        elems = "".join(f"{el:<2}{_count_field(n, sp.name)}" for el, n in sp.composition.items())
        p = sp.poly
        l1 = f"{sp.name:<18}{sp.note:<6}{elems:<20}{sp.phase:1}{p.t_min:10.3f}{p.t_max:10.3f}{p.t_mid:8.2f}"
        if len(l1) > 79:
            raise SerializeError(f"temperature fields of {sp.name} overflow their columns")
        c = p.high + p.low
        lines.append(f"{l1:<79}1")
        for marker, chunk in (("2", c[0:5]), ("3", c[5:10]), ("4", c[10:14])):
            lines.append(f"{''.join(f'{a:15.8E}' for a in chunk):<79}{marker}")
    lines.append("END")
    return "\n".join(lines) + "\n"


def load_thermo(path: str | Path | None = None) -> ThermoDatabase:
    """Load a thermo file from ``path``, or the bundled GRI-Mech 3.0 data."""
    if path is None:
        text = resources.files("flametemp.data").joinpath(BUNDLED_DB).read_text()
    else:
        text = Path(path).read_text()
    return parse_thermo_text(text)


def apply_n2_patch(db: ThermoDatabase) -> ThermoDatabase:
    """Set N2's low-range a6 so that H(N2, 298.15 K) is essentially zero."""
    if "N2" not in db:
        raise PatchError("species N2 not present; cannot apply the N2 enthalpy patch")
    n2 = db["N2"]
    low = list(n2.poly.low)
    low[5] = N2_A6_LOW_PATCHED
    return db.with_record(replace(n2, poly=replace(n2.poly, low=tuple(low))))


def load_default(patch_n2: bool = True, path: str | Path | None = None) -> ThermoDatabase:
    db = load_thermo(path)
    return apply_n2_patch(db) if patch_n2 else db


# ---------------------------------------------------------------------------
# Property evaluation
# ---------------------------------------------------------------------------


def _check_T(T: float):
    if not T > 0:
        raise DomainError(f"temperature must be positive, got {T}")


def cp_R(sp: SpeciesRecord, T: float) -> EvalResult:
    _check_T(T)
    a = sp.poly.coeffs(T)
    value = a[0] + T * (a[1] + T * (a[2] + T * (a[3] + T * a[4])))
    return EvalResult(value, not sp.poly.in_range(T))


def h_RT(sp: SpeciesRecord, T: float) -> EvalResult:
    _check_T(T)
    a = sp.poly.coeffs(T)
    value = a[0] + T * (a[1] / 2 + T * (a[2] / 3 + T * (a[3] / 4 + T * a[4] / 5))) + a[5] / T
    return EvalResult(value, not sp.poly.in_range(T))


def s_R(sp: SpeciesRecord, T: float) -> EvalResult:
    _check_T(T)
    a = sp.poly.coeffs(T)
    value = a[0] * math.log(T) + T * (a[1] + T * (a[2] / 2 + T * (a[3] / 3 + T * a[4] / 4))) + a[6]
    return EvalResult(value, not sp.poly.in_range(T))


def g_RT(sp: SpeciesRecord, T: float) -> EvalResult:
    h = h_RT(sp, T)
    s = s_R(sp, T)
    return EvalResult(h.value - s.value, h.extrapolated or s.extrapolated)


def h_molar(sp: SpeciesRecord, T: float) -> EvalResult:
    """Molar enthalpy in J/mol."""
    h = h_RT(sp, T)
    return EvalResult(h.value * R_UNIVERSAL * T, h.extrapolated)


class PolyTable:
    """Stacked coefficients of several species for vectorized evaluation at one T."""

    def __init__(self, records: Iterable[SpeciesRecord]):
        records = list(records)
        self.names = [sp.name for sp in records]
        self.low = np.array([sp.poly.low for sp in records], dtype=float).reshape(-1, 7)
        self.high = np.array([sp.poly.high for sp in records], dtype=float).reshape(-1, 7)
        self.t_min = np.array([sp.poly.t_min for sp in records], dtype=float)
        self.t_mid = np.array([sp.poly.t_mid for sp in records], dtype=float)
        self.t_max = np.array([sp.poly.t_max for sp in records], dtype=float)

    def _coeffs(self, T: float) -> np.ndarray:
        _check_T(T)
        return np.where((T < self.t_mid)[:, None], self.low, self.high)

    def extrapolated(self, T: float) -> np.ndarray:
        return (T < self.t_min) | (T > self.t_max)

    def cp_R(self, T: float) -> np.ndarray:
        a = self._coeffs(T)
        return a[:, 0] + T * (a[:, 1] + T * (a[:, 2] + T * (a[:, 3] + T * a[:, 4])))

    def h_RT(self, T: float) -> np.ndarray:
        a = self._coeffs(T)
        return a[:, 0] + T * (a[:, 1] / 2 + T * (a[:, 2] / 3 + T * (a[:, 3] / 4 + T * a[:, 4] / 5))) + a[:, 5] / T

    def s_R(self, T: float) -> np.ndarray:
        a = self._coeffs(T)
        return a[:, 0] * math.log(T) + T * (a[:, 1] + T * (a[:, 2] / 2 + T * (a[:, 3] / 3 + T * a[:, 4] / 4))) + a[:, 6]

    def g_RT(self, T: float) -> np.ndarray:
        return self.h_RT(T) - self.s_R(T)
