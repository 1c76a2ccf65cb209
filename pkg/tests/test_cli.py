import csv
import io
import json

import jsonschema
import pytest

from flametemp import reference
from flametemp.cli import (
    CASE_RESULT_SCHEMA,
    CURVE_COLUMNS,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_SOLVER,
    EXIT_USAGE,
    CaseResult,
    CaseSpec,
    main,
    benchmark_cases,
    run_case,
    temperature_grid,
)
from flametemp.thermo import serialize_thermo

PUBLISHED_DEV = [0.248, 0.818, 0.181, 0.160, 0.064, 0.078, 3.057, 3.503]


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def parse_run_json(out):
    data = json.loads(out)
    jsonschema.validate(data, CASE_RESULT_SCHEMA)
    return data


# --- run -------------------------------------------------------------------------


def test_run_oxy_methane_complete(capsys):
    code, out, _ = run_cli(capsys, "run", "--fuel", "ch4", "--oxidizer", "o2", "--mode", "complete", "--format", "json")
    assert code == EXIT_OK
    assert parse_run_json(out)["t_ad"] == pytest.approx(5153.68, abs=2.0)


def test_run_air_hydrogen_equilibrium(capsys):
    code, out, _ = run_cli(capsys, "run", "--fuel", "h2", "--oxidizer", "air3", "--mode", "equilibrium", "--format", "json")
    assert code == EXIT_OK
    assert parse_run_json(out)["t_ad"] == pytest.approx(2295.29, abs=5.0)


def test_run_pressure_independent_in_complete_mode(capsys):
    base = ["run", "--fuel", "ch4", "--oxidizer", "o2", "--mode", "complete", "--format", "json"]
    _, one, _ = run_cli(capsys, *base, "--t0", "298.15")
    _, two, _ = run_cli(capsys, *base, "--t0", "298.15", "--pressure", "202650")
    assert json.loads(one)["t_ad"] == json.loads(two)["t_ad"]


def test_run_human_output(capsys):
    code, out, _ = run_cli(capsys, "run", "--fuel", "h2", "--oxidizer", "air3")
    assert code == EXIT_OK
    assert "t_ad [K]" in out and "2524." in out
    assert "x[H2O]" in out and "x[N2]" in out


def test_run_reports_top_ten_species(capsys):
    _, out, _ = run_cli(capsys, "run", "--fuel", "ch4", "--oxidizer", "air3", "--mode", "equilibrium", "--format", "json")
    x = parse_run_json(out)["mole_fractions"]
    assert len(x) == 10
    assert list(x.values()) == sorted(x.values(), reverse=True)


@pytest.mark.parametrize("fmt", ["table", "csv", "md", "json"])
def test_run_formats(capsys, fmt):
    code, out, _ = run_cli(capsys, "run", "--format", fmt)
    assert code == EXIT_OK and out.strip()


def test_run_writes_out_file(capsys, tmp_path):
    target = tmp_path / "case.json"
    code, out, _ = run_cli(capsys, "run", "--format", "json", "--out", str(target))
    assert code == EXIT_OK and out == ""
    parse_run_json(target.read_text())


def test_json_round_trip(db):
    for spec in benchmark_cases():
        res = run_case(spec, db)
        data = json.loads(json.dumps(res.to_dict()))
        jsonschema.validate(data, CASE_RESULT_SCHEMA)
        assert CaseResult.from_dict(data) == res


def test_deviations_only_at_reference_conditions(db):
    hot = run_case(CaseSpec("h2", "air3", "complete", t0=400.0), db)
    assert hot.deviation_cearun_pct is None and hot.deviation_grimech_pct is None
    base = run_case(CaseSpec("h2", "air3", "complete"), db)
    assert base.deviation_grimech_pct == pytest.approx(abs(base.t_ad - 2524.36) / 2520.33 * 100, rel=1e-12)


def test_unpatched_run_differs_slightly(raw_db):
    # the patch lowers reactant-side N2 enthalpy by n_N2 * R * delta_a6, so T drops a little
    patched = run_case(CaseSpec("ch4", "air3", "complete"), raw_db)
    raw = run_case(CaseSpec("ch4", "air3", "complete", patch_n2=False), raw_db)
    assert 0 < raw.t_ad - patched.t_ad < 0.5


def test_case_spec_validation():
    with pytest.raises(ValueError):
        CaseSpec("c3h8")
    with pytest.raises(ValueError):
        CaseSpec(t0=0.0)
    assert CaseSpec("CH4", "AIR3", "Equilibrium").mode == "equilibrium"


def test_unknown_choice_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["run", "--fuel", "c3h8"])
    assert info.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        main(["run", "--bogus"])
    assert info.value.code == EXIT_USAGE


def test_missing_db_file_is_usage_error(capsys, tmp_path):
    code, _, err = run_cli(capsys, "run", "--db", str(tmp_path / "missing.dat"))
    assert code == EXIT_USAGE and "error" in err


def test_db_from_environment(capsys, monkeypatch, tmp_path, raw_db):
    path = tmp_path / "therm.dat"
    path.write_text(serialize_thermo(raw_db))
    monkeypatch.setenv("FLAMETEMP_DB", str(path))
    code, out, _ = run_cli(capsys, "run", "--format", "json")
    assert code == EXIT_OK
    monkeypatch.setenv("FLAMETEMP_DB", str(tmp_path / "missing.dat"))
    code, _, _ = run_cli(capsys, "run")
    assert code == EXIT_USAGE


# --- table -----------------------------------------------------------------------


def table_csv(capsys, *extra):
    code, out, _ = run_cli(capsys, "table", "--format", "csv", *extra)
    return code, list(csv.DictReader(io.StringIO(out)))


def test_table_eight_rows_in_order(capsys):
    code, rows = table_csv(capsys)
    assert code == EXIT_OK
    assert [(r["fuel"], r["oxidizer"], r["mode"]) for r in rows] == [
        (c.fuel.upper(), c.oxidizer, c.mode) for c in benchmark_cases()
    ]
    assert [float(r["published_dev_pct"]) for r in rows] == PUBLISHED_DEV


def test_table_flags_oxy_complete_rows(capsys):
    _, rows = table_csv(capsys)
    for r in rows:
        if r["oxidizer"] == "o2" and r["mode"] == "complete":
            assert "extrapolated" in r["flags"]
        if r["oxidizer"] == "air3":
            assert r["flags"] == ""


def test_table_byte_stable(capsys):
    first = run_cli(capsys, "table")
    second = run_cli(capsys, "table", "--jobs", "1")
    third = run_cli(capsys, "table", "--jobs", "8")
    assert first == second == third


@pytest.mark.parametrize("fmt", ["md", "json"])
def test_table_formats(capsys, fmt):
    code, out, _ = run_cli(capsys, "table", "--format", fmt)
    assert code == EXIT_OK
    if fmt == "json":
        assert len(json.loads(out)) == 8
    else:
        assert out.count("\n") == 10


def test_table_air4(capsys):
    code, rows = table_csv(capsys, "--air", "air4")
    assert code == EXIT_OK
    assert sum(r["oxidizer"] == "air4" for r in rows) == 4


def test_table_failure_marks_row_and_exits_nonzero(capsys, tmp_path, raw_db):
    # drop AR so every air case fails while the oxy cases still run
    kept = [sp for sp in raw_db if sp.name != "AR"]
    text = serialize_thermo(type(raw_db)(kept))
    path = tmp_path / "no_ar.dat"
    path.write_text(text)
    code, rows = table_csv(capsys, "--db", str(path))
    assert code == EXIT_SOLVER
    assert len(rows) == 8
    for r in rows:
        failed = r["flags"].startswith("FAILED")
        assert failed == (r["oxidizer"] != "o2")
        assert (r["t_ad_K"] == "") == failed


def test_table_explain(capsys):
    code, out, _ = run_cli(capsys, "table", "--explain")
    assert code == EXIT_OK
    assert "5166.47" in out and "2295.29" in out
    assert out.count("deviation") == 8


def test_deviation_self_consistency():
    # substituting the stored GRI value for t_ad must give back the tabulated deviation
    for case, expected in zip(reference.REFERENCE_TABLE.values(), PUBLISHED_DEV):
        dev = reference.deviation_percent(case.grimech_K, case.cearun_K, case.cearun_K)
        assert abs(dev - expected) <= 0.02
        assert case.deviation_pct == expected


# --- curves ----------------------------------------------------------------------


def curves(capsys, *extra):
    code, out, _ = run_cli(capsys, "curves", *extra)
    rows = list(csv.DictReader(io.StringIO(out)))
    return code, out, rows


def test_curves_default_species_monotone(capsys):
    code, out, rows = curves(capsys)
    assert code == EXIT_OK
    assert out.splitlines()[0] == ",".join(CURVE_COLUMNS)
    species = sorted({r["species"] for r in rows})
    assert species == ["AR", "CH4", "CO2", "H2", "H2O", "N2", "O2"]
    assert len(rows) == 7 * 65
    for sp in species:
        h = [float(r["h_J_per_mol"]) for r in rows if r["species"] == sp]
        assert all(b > a for a, b in zip(h, h[1:]))
    assert all(r["extrapolated"] == "false" for r in rows)


def test_curves_n2_crosses_zero_at_reference(capsys):
    _, _, rows = curves(capsys, "--species", "N2", "--t-min", "298.15", "--t-max", "298.15")
    assert len(rows) == 1
    assert abs(float(rows[0]["h_J_per_mol"])) <= 0.05
    _, _, raw = curves(capsys, "--species", "N2", "--t-min", "298.15", "--t-max", "298.15", "--no-n2-patch")
    assert float(raw[0]["h_J_per_mol"]) == pytest.approx(1.430, abs=0.05)


def test_curves_two_databases_pair_up(capsys, tmp_path, raw_db):
    path = tmp_path / "copy.dat"
    path.write_text(serialize_thermo(raw_db))
    code, _, rows = curves(capsys, "--species", "AR,H2O", "--db", str(path), "--db", str(path), "--step", "100")
    assert code == EXIT_OK
    labels = sorted({r["database"] for r in rows})
    assert labels == [str(path), f"{path}#2"]
    first = [{k: v for k, v in r.items() if k != "database"} for r in rows if r["database"] == labels[0]]
    second = [{k: v for k, v in r.items() if k != "database"} for r in rows if r["database"] == labels[1]]
    assert first == second and len(first) == 2 * 33


def test_curves_flags_out_of_range(capsys):
    _, _, rows = curves(capsys, "--species", "AR", "--t-min", "200", "--t-max", "5200", "--step", "1000")
    flags = {r["T_K"]: r["extrapolated"] for r in rows}
    assert flags == {"200.00": "true", "1200.00": "false", "2200.00": "false", "3200.00": "false",
                     "4200.00": "false", "5200.00": "true"}


def test_curves_unknown_species(capsys):
    code, _, err = run_cli(capsys, "curves", "--species", "XE")
    assert code == EXIT_USAGE and "XE" in err


@pytest.mark.parametrize("args", [["--t-min", "500", "--t-max", "400"], ["--step", "0"], ["--t-min", "-1"]])
def test_curves_bad_range(capsys, args):
    code, _, err = run_cli(capsys, "curves", *args)
    assert code == EXIT_USAGE and "range" in err


def test_temperature_grid():
    assert temperature_grid(300, 3500, 50)[-1] == 3500
    assert len(temperature_grid(300, 3500, 50)) == 65
    assert temperature_grid(300, 320, 15) == [300, 315]


# --- validate-db -----------------------------------------------------------------


def test_validate_bundled_patched(capsys):
    code, out, _ = run_cli(capsys, "validate-db", "--format", "json")
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["species_count"] == 53
    assert report["continuity_ok"]
    for name in ("AR", "N2", "O2", "H2"):
        entry = report["reference_enthalpies"][name]
        assert abs(entry["h_J_per_mol"]) <= 50.0
    assert not report["reference_enthalpies"]["N2"]["flagged"]
    assert all(sp["cp_positive"] for sp in report["species"])


def test_validate_flags_unpatched_n2(capsys):
    code, out, _ = run_cli(capsys, "validate-db", "--no-n2-patch", "--format", "json")
    assert code == EXIT_OK
    n2 = json.loads(out)["reference_enthalpies"]["N2"]
    assert n2["flagged"]
    assert n2["h_J_per_mol"] == pytest.approx(1.430, abs=0.05)
    _, text, _ = run_cli(capsys, "validate-db", "--no-n2-patch")
    assert "FLAGGED" in text


def test_validate_truncated_file(capsys, tmp_path, raw_db):
    lines = serialize_thermo(raw_db).splitlines()
    path = tmp_path / "cut.dat"
    path.write_text("\n".join(lines[:12]) + "\n")  # stops inside the third block
    code, _, err = run_cli(capsys, "validate-db", str(path))
    assert code == EXIT_PARSE
    assert "line" in err


def test_validate_corrupt_number_reports_line(capsys, tmp_path, raw_db):
    lines = serialize_thermo(raw_db).splitlines()
    lines[3] = lines[3][:20] + "abcdefghijklmno" + lines[3][35:]
    path = tmp_path / "bad.dat"
    path.write_text("\n".join(lines) + "\n")
    code, _, err = run_cli(capsys, "validate-db", str(path))
    assert code == EXIT_PARSE
    assert "line 4" in err


def test_validate_discontinuous_species_exits_nonzero(capsys, tmp_path, raw_db):
    from dataclasses import replace

    rec = raw_db["AR"]
    low = list(rec.poly.low)
    low[0] += 0.01
    bad = replace(rec, poly=replace(rec.poly, low=tuple(low)))
    path = tmp_path / "jump.dat"
    path.write_text(serialize_thermo(raw_db.with_record(bad)))
    code, out, _ = run_cli(capsys, "validate-db", str(path))
    assert code != EXIT_OK
    assert "DISCONTINUOUS" in out
