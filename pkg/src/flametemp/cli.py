"""Command-line front end: single cases, the eight-case benchmark table, enthalpy curves, database checks."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import reference
from .aft import solve_aft_complete
from .equilibrium import equilibrium_aft
from .errors import FlameTempError, NoBracket, NoConvergence, ParseError, SingularSystem, UnknownSpecies
from .stoich import ONE_ATM, Oxidizer, stoichiometric_reactants
from .thermo import R_UNIVERSAL, T_REF, ThermoDatabase, apply_n2_patch, cp_R, h_molar, h_RT, load_thermo, s_R

DB_ENV_VAR = "FLAMETEMP_DB"

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_SOLVER = 4

FUELS = ("ch4", "h2")
OXIDIZERS = ("o2", "air3", "air4")
MODES = ("complete", "equilibrium")
DEFAULT_CURVE_SPECIES = ("AR", "CH4", "CO2", "H2", "H2O", "N2", "O2")
ELEMENTAL_REFERENCE = ("AR", "N2", "O2", "H2")
REF_ENTHALPY_FLAG = 0.05  # J/mol
CONTINUITY_LIMIT = 1e-3
TOP_SPECIES = 10

CASE_RESULT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["spec", "t_ad", "mole_fractions", "deviation_cearun_pct", "deviation_grimech_pct", "warnings"],
    "properties": {
        "spec": {
            "type": "object",
            "required": ["fuel", "oxidizer", "mode", "t0", "pressure", "patch_n2"],
            "properties": {
                "fuel": {"enum": list(FUELS)},
                "oxidizer": {"enum": list(OXIDIZERS)},
                "mode": {"enum": list(MODES)},
                "t0": {"type": "number", "exclusiveMinimum": 0},
                "pressure": {"type": "number", "exclusiveMinimum": 0},
                "patch_n2": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "t_ad": {"type": "number"},
        "mole_fractions": {"type": "object", "additionalProperties": {"type": "number", "minimum": 0}},
        "deviation_cearun_pct": {"type": ["number", "null"]},
        "deviation_grimech_pct": {"type": ["number", "null"]},
        "extrapolated": {"type": "boolean"},
        "iterations": {"type": "integer"},
        "warnings": {"type": "array", "items": {"type": "string"}},
    },
    "additionalProperties": False,
}


@dataclass(frozen=True)
class CaseSpec:
    fuel: str = "ch4"
    oxidizer: str = "o2"
    mode: str = "complete"
    t0: float = T_REF
    pressure: float = ONE_ATM
    patch_n2: bool = True

    def __post_init__(self):
        object.__setattr__(self, "fuel", self.fuel.lower())
        object.__setattr__(self, "oxidizer", self.oxidizer.lower())
        object.__setattr__(self, "mode", self.mode.lower())
        if self.fuel not in FUELS or self.oxidizer not in OXIDIZERS or self.mode not in MODES:
            raise ValueError(f"unsupported case {self.fuel}/{self.oxidizer}/{self.mode}")
        if not self.t0 > 0 or not self.pressure > 0:
            raise ValueError("t0 and pressure must be positive")


@dataclass
class CaseResult:
    spec: CaseSpec
    t_ad: float
    mole_fractions: dict[str, float]
    deviation_cearun_pct: float | None
    deviation_grimech_pct: float | None
    extrapolated: bool = False
    iterations: int = 0
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["spec"] = asdict(self.spec)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CaseResult":
        d = dict(d)
        d["spec"] = CaseSpec(**d["spec"])
        return cls(**d)


def run_case(spec: CaseSpec, db: ThermoDatabase) -> CaseResult:
    """Solve one case against an unpatched-or-patched database as requested by ``spec``."""
    if spec.patch_n2:
        db = apply_n2_patch(db)
    reactants = stoichiometric_reactants(spec.fuel.upper(), Oxidizer(spec.oxidizer), 1.0, spec.t0, spec.pressure, db=db)
    warnings = []
    if spec.mode == "complete":
        res = solve_aft_complete(reactants, db)
        t_ad = res.t_ad
        x = res.products.mole_fractions()
        x = dict(sorted(x.items(), key=lambda p: (-p[1], p[0])))
        extrapolated, iterations = res.extrapolated, res.iterations
    else:
        sol = equilibrium_aft(reactants, db)
        t_ad = sol.T
        x = sol.mole_fractions()
        extrapolated, iterations = sol.extrapolated, sol.iterations
        warnings.append(
            f"equilibrium residuals: element {sol.max_element_residual:.2e}, "
            f"stationarity {sol.max_stationarity_residual:.2e}"
        )
    if extrapolated:
        warnings.append("extrapolated: product properties evaluated outside their fitted temperature range")

    ref = reference.lookup(spec.fuel, spec.oxidizer, spec.mode)
    default_conditions = math.isclose(spec.t0, T_REF) and math.isclose(spec.pressure, ONE_ATM)
    if ref is not None and default_conditions:
        dev_c = reference.deviation_percent(t_ad, ref.cearun_K, ref.cearun_K)
        dev_g = reference.deviation_percent(t_ad, ref.grimech_K, ref.cearun_K)
    else:
        dev_c = dev_g = None
    top = dict(list(x.items())[:TOP_SPECIES])
    return CaseResult(spec, t_ad, top, dev_c, dev_g, extrapolated, iterations, warnings)


def benchmark_cases(oxidizer_air: str = "air3") -> list[CaseSpec]:
    """The eight benchmark cases in table order."""
    return [
        CaseSpec(r.fuel.lower(), r.oxidizer if r.oxidizer == "o2" else oxidizer_air, r.mode)
        for r in reference.REFERENCE_TABLE.values()
    ]


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------


def _fmt_pct(v):
    return "" if v is None else f"{v:.3f}"


def format_case(result: CaseResult, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(result.to_dict(), indent=2) + "\n"
    s = result.spec
    ref = reference.lookup(s.fuel, s.oxidizer, s.mode)
    rows = [("t_ad [K]", f"{result.t_ad:.2f}")]
    if ref is not None:
        rows += [
            ("reference CEA [K]", f"{ref.cearun_K:.2f}"),
            ("reference GRI-Mech 3.0 [K]", f"{ref.grimech_K:.2f}"),
            ("deviation vs CEA [%]", _fmt_pct(result.deviation_cearun_pct)),
            ("deviation vs GRI-Mech [% of CEA]", _fmt_pct(result.deviation_grimech_pct)),
        ]
    rows += [(f"x[{sp}]", f"{v:.6e}") for sp, v in result.mole_fractions.items()]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantity", "value"])
        w.writerows(rows)
        return buf.getvalue()
    title = f"{s.fuel.upper()} / {s.oxidizer} / {s.mode} (T0 = {s.t0:.2f} K, P = {s.pressure:.0f} Pa)"
    if fmt == "md":
        lines = [f"**{title}**", "", "| quantity | value |", "|---|---|"]
        lines += [f"| {k} | {v} |" for k, v in rows]
    else:
        width = max(len(k) for k, _ in rows)
        lines = [title] + [f"  {k:<{width}}  {v}" for k, v in rows]
    lines += [f"warning: {w}" for w in result.warnings if w.startswith("extrapolated")]
    return "\n".join(lines) + "\n"


TABLE_COLUMNS = (
    "fuel", "oxidizer", "mode", "t_ad_K", "cearun_K", "grimech_K",
    "dev_cearun_pct", "published_dev_pct", "dev_grimech_pct", "flags",
)


def table_rows(results: list[tuple[CaseSpec, CaseResult | None, str | None]]) -> list[dict]:
    rows = []
    for spec, res, err in results:
        ref = reference.lookup(spec.fuel, spec.oxidizer, spec.mode)
        flags = []
        if err:
            flags.append(f"FAILED: {err}")
        elif res.extrapolated:
            flags.append("extrapolated")
        rows.append({
            "fuel": spec.fuel.upper(),
            "oxidizer": spec.oxidizer,
            "mode": spec.mode,
            "t_ad_K": "" if res is None else f"{res.t_ad:.2f}",
            "cearun_K": f"{ref.cearun_K:.2f}",
            "grimech_K": f"{ref.grimech_K:.2f}",
            "dev_cearun_pct": "" if res is None else _fmt_pct(res.deviation_cearun_pct),
            "published_dev_pct": f"{ref.deviation_pct:.3f}",
            "dev_grimech_pct": "" if res is None else _fmt_pct(res.deviation_grimech_pct),
            "flags": ";".join(flags),
        })
    return rows


def format_table(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, TABLE_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()
    if fmt == "md":
        lines = ["| " + " | ".join(TABLE_COLUMNS) + " |", "|" + "---|" * len(TABLE_COLUMNS)]
        lines += ["| " + " | ".join(r[c] for c in TABLE_COLUMNS) + " |" for r in rows]
        return "\n".join(lines) + "\n"
    widths = {c: max(len(c), *(len(r[c]) for r in rows)) for c in TABLE_COLUMNS}
    lines = ["  ".join(c.ljust(widths[c]) for c in TABLE_COLUMNS).rstrip()]
    lines += ["  ".join(r[c].ljust(widths[c]) for c in TABLE_COLUMNS).rstrip() for r in rows]
    return "\n".join(lines) + "\n"


def explain_text() -> str:
    lines = ["Bundled reference adiabatic flame temperatures (reactants 298.15 K, 1 atm, stoichiometric):"]
    for r in reference.REFERENCE_TABLE.values():
        tool = "spreadsheet goal seek" if r.mode == "complete" else "Cantera"
        lines.append(
            f"  {r.label:<24} CEA (CEARUN, 9-coefficient data): {r.cearun_K:8.2f} K   "
            f"GRI-Mech 3.0 ({tool}): {r.grimech_K:8.2f} K   deviation {r.deviation_pct:.3f}% of CEA"
        )
    lines.append("Air for GRI-Mech 3.0 cases is N2/O2/Ar = 78/21/1 by mole.")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# curves and validation
# ---------------------------------------------------------------------------


def temperature_grid(t_min: float, t_max: float, step: float) -> list[float]:
    if not (0 < t_min <= t_max) or not step > 0:
        raise ValueError(f"bad temperature range {t_min}..{t_max} step {step}")
    count = int(math.floor((t_max - t_min) / step + 1e-9)) + 1
    return [t_min + k * step for k in range(count)]


def curve_rows(dbs: list[tuple[str, ThermoDatabase]], species: list[str], temps: list[float]) -> list[dict]:
    for label, db in dbs:
        for sp in species:
            if sp not in db:
                raise UnknownSpecies(f"species {sp!r} not in database {label}")
    rows = []
    for label, db in dbs:
        for sp in species:
            rec = db[sp]
            for T in temps:
                h = h_RT(rec, T)
                rows.append({
                    "database": label,
                    "species": rec.name,
                    "T_K": f"{T:.2f}",
                    "h_over_RT": f"{h.value:.10g}",
                    "h_J_per_mol": f"{h.value * R_UNIVERSAL * T:.6f}",
                    "extrapolated": str(h.extrapolated).lower(),
                })
    return rows


CURVE_COLUMNS = ("database", "species", "T_K", "h_over_RT", "h_J_per_mol", "extrapolated")


def validate_db(db: ThermoDatabase, eps: float = 1e-6) -> dict:
    """Continuity at t_mid, reference enthalpies of elemental species, Cp positivity, ranges."""
    species = []
    worst = 0.0
    for sp in db:
        tm = sp.poly.t_mid
        cont = {
            name: abs(f(sp, tm - eps).value - f(sp, tm + eps).value)
            for name, f in (("cp", cp_R), ("h", h_RT), ("s", s_R))
        }
        worst = max(worst, *cont.values())
        grid = np.linspace(sp.poly.t_min, sp.poly.t_max, 200)
        cp_min = min(cp_R(sp, float(T)).value for T in grid)
        species.append({
            "name": sp.name,
            "t_min": sp.poly.t_min,
            "t_mid": sp.poly.t_mid,
            "t_max": sp.poly.t_max,
            "continuity": cont,
            "cp_positive": cp_min > 0,
        })
    ref_h = {}
    for name in ELEMENTAL_REFERENCE:
        if name in db:
            h = h_molar(db[name], T_REF).value
            ref_h[name] = {"h_J_per_mol": h, "flagged": abs(h) > REF_ENTHALPY_FLAG}
    return {
        "species_count": len(db),
        "elements": list(db.elements),
        "max_continuity_residual": worst,
        "continuity_ok": worst <= CONTINUITY_LIMIT,
        "reference_enthalpies": ref_h,
        "species": species,
    }


def format_validation(report: dict) -> str:
    lines = [
        f"species: {report['species_count']}   elements: {', '.join(report['elements'])}",
        f"max t_mid continuity residual (cp/R, h/RT, s/R): {report['max_continuity_residual']:.3e}"
        f"  [{'ok' if report['continuity_ok'] else 'FAIL'} at {CONTINUITY_LIMIT:g}]",
        f"reference enthalpies at {T_REF} K:",
    ]
    for name, d in report["reference_enthalpies"].items():
        flag = "  FLAGGED" if d["flagged"] else ""
        lines.append(f"  {name:<4} {d['h_J_per_mol']:+.4f} J/mol{flag}")
    for sp in report["species"]:
        worst = max(sp["continuity"].values())
        notes = []
        if worst > CONTINUITY_LIMIT:
            notes.append("DISCONTINUOUS")
        if not sp["cp_positive"]:
            notes.append("non-positive Cp")
        lines.append(
            f"  {sp['name']:<10} {sp['t_min']:7.1f} {sp['t_mid']:7.1f} {sp['t_max']:7.1f}"
            f"  continuity {worst:.2e}{'  ' + ', '.join(notes) if notes else ''}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# argparse wiring
# ---------------------------------------------------------------------------


def _load_db(path: str | None) -> ThermoDatabase:
    path = path or os.environ.get(DB_ENV_VAR) or None
    return load_thermo(path)


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    spec = CaseSpec(args.fuel, args.oxidizer, args.mode, args.t0, args.pressure, not args.no_n2_patch)
    result = run_case(spec, _load_db(args.db))
    _emit(format_case(result, args.format), args.out)
    return EXIT_OK


def cmd_table(args) -> int:
    if args.explain:
        _emit(explain_text(), args.out)
        return EXIT_OK
    db = _load_db(args.db)
    specs = [
        CaseSpec(s.fuel, s.oxidizer, s.mode, patch_n2=not args.no_n2_patch)
        for s in benchmark_cases(args.air)
    ]

    def solve(spec):
        try:
            return spec, run_case(spec, db), None
        except FlameTempError as exc:
            return spec, None, f"{type(exc).__name__}: {exc}"

    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        results = list(pool.map(solve, specs))
    _emit(format_table(table_rows(results), args.format), args.out)
    return EXIT_SOLVER if any(err for _, _, err in results) else EXIT_OK


def cmd_curves(args) -> int:
    paths = args.db or [os.environ.get(DB_ENV_VAR) or None]
    dbs = []
    seen: dict[str, int] = {}
    for p in paths:
        label = "bundled" if p is None else str(p)
        seen[label] = seen.get(label, 0) + 1
        if seen[label] > 1:
            label = f"{label}#{seen[label]}"
        db = load_thermo(p)
        dbs.append((label, apply_n2_patch(db) if not args.no_n2_patch and "N2" in db else db))
    species = [s.strip().upper() for s in ",".join(args.species).split(",") if s.strip()]
    temps = temperature_grid(args.t_min, args.t_max, args.step)
    rows = curve_rows(dbs, species, temps)
    buf = io.StringIO()
    w = csv.DictWriter(buf, CURVE_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_validate_db(args) -> int:
    db = _load_db(args.path)
    if not args.no_n2_patch and "N2" in db:
        db = apply_n2_patch(db)
    report = validate_db(db)
    if args.format == "json":
        _emit(json.dumps(report, indent=2) + "\n", args.out)
    else:
        _emit(format_validation(report), args.out)
    return EXIT_OK if report["continuity_ok"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flametemp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats=("table", "csv", "json", "md")):
        p.add_argument("--db", help=f"thermo file (default: ${DB_ENV_VAR} or bundled GRI-Mech 3.0)")
        p.add_argument("--no-n2-patch", action="store_true", help="keep the original N2 a6 (low range)")
        p.add_argument("--format", choices=formats, default="table")
        p.add_argument("--out", help="write output to this file instead of stdout")

    p = sub.add_parser("run", help="solve one case")
    p.add_argument("--fuel", choices=FUELS, type=str.lower, default="ch4")
    p.add_argument("--oxidizer", choices=OXIDIZERS, type=str.lower, default="o2")
    p.add_argument("--mode", choices=MODES, type=str.lower, default="complete")
    p.add_argument("--t0", type=float, default=T_REF, help="reactant temperature [K]")
    p.add_argument("--pressure", type=float, default=ONE_ATM, help="pressure [Pa]")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("table", help="run all eight benchmark cases")
    common(p)
    p.add_argument("--air", choices=("air3", "air4"), default="air3")
    p.add_argument("--jobs", type=int, default=4)
    p.add_argument("--explain", action="store_true", help="describe the bundled reference values")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("curves", help="export H/RT and H versus T as CSV")
    p.add_argument("--species", action="append", default=None, help="comma-separated species (repeatable)")
    p.add_argument("--t-min", type=float, default=300.0)
    p.add_argument("--t-max", type=float, default=3500.0)
    p.add_argument("--step", type=float, default=50.0)
    p.add_argument("--db", action="append", help="thermo file; repeat to compare databases")
    p.add_argument("--no-n2-patch", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("validate-db", help="check a thermo database")
    p.add_argument("path", nargs="?", help="thermo file (default: bundled)")
    p.add_argument("--no-n2-patch", action="store_true")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate_db)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "species", "unset") is None:
        args.species = list(DEFAULT_CURVE_SPECIES)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NoConvergence, NoBracket, SingularSystem) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (FlameTempError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
