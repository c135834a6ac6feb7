import csv
import io
import json
import subprocess
import sys
import warnings

import numpy as np
import pytest

from prudent_walk import cli_io
from prudent_walk import effective_walk as ew
from prudent_walk.errors import DomainError


def run(argv, capsys):
    code = cli_io.run_command(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_format_float_roundtrips():
    for x in (0.1, 1 / 3, 2.0 ** -60, 1e300, -0.0):
        assert float(cli_io.format_float(x)) == x
    assert cli_io.format_float(float("nan")) == "null"


def test_dumps_stable_sorted_and_parsable():
    text = cli_io.dumps_stable({"b": 1.0 / 3, "a": [1, True, None], "c": np.float64(0.5)})
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    assert json.loads(text) == {"a": [1, True, None], "b": 1 / 3, "c": 0.5}
    with pytest.raises(TypeError):
        cli_io.dumps_stable({"x": object()})


def test_write_dataset(tmp_path):
    rows = [{"a": 1, "b": 0.25}, {"a": 2, "b": 1 / 3}]
    p = tmp_path / "x.csv"
    text = cli_io.write_dataset(rows, p, "csv", ["a", "b"])
    assert p.read_text() == text
    back = list(csv.DictReader(io.StringIO(text)))
    assert float(back[1]["b"]) == 1 / 3
    with pytest.raises(DomainError):
        cli_io.write_dataset(rows, None, "xml")


def test_cache_roundtrip_and_reuse(tmp_path):
    c = cli_io.TableCache(tmp_path)
    a = c.get_or_build(3, 20)
    b = c.get_or_build(3, 20)
    assert c.builds == 1
    ref = ew.strip_tables_star(3, 20)
    for x, y, z in ((a.L, b.L, ref.L), (a.L_hat, b.L_hat, ref.L_hat), (a.L_star, b.L_star, ref.L_star)):
        assert np.array_equal(x, z) and np.array_equal(y, z)
    assert not list(tmp_path.glob("*.tmp"))


def test_cache_corrupt_file_rebuilds(tmp_path):
    c = cli_io.TableCache(tmp_path)
    c.get_or_build(2, 10)
    path = c.path_for(2, 10)
    path.write_bytes(path.read_bytes()[:40])
    with pytest.warns(UserWarning):
        t = c.get_or_build(2, 10)
    assert c.builds == 2 and np.array_equal(t.L_star, ew.strip_tables_star(2, 10).L_star)


def test_cache_header_mismatch_rebuilds(tmp_path):
    cli_io.TableCache(tmp_path).get_or_build(2, 10)
    other = cli_io.TableCache(tmp_path, lambda_star=0.3)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        other.get_or_build(2, 10)
    assert other.builds == 1


def test_cache_env(tmp_path, monkeypatch):
    monkeypatch.setenv(cli_io.CACHE_ENV, str(tmp_path))
    assert cli_io.default_cache_dir() == tmp_path
    cli_io.table_cache(1, 8)
    assert cli_io.TableCache().path_for(1, 8).exists()


def test_count(capsys):
    code, out, _ = run(["count", "--family", "omega", "--L", "3"], capsys)
    assert code == 0 and json.loads(out)["count"] == "36"
    code, out, _ = run(["count", "--family", "I", "--L", "4"], capsys)
    assert json.loads(out)["count"] == "2"


def test_count_capacity(capsys):
    code, _, err = run(["count", "--family", "omega", "--L", "15"], capsys)
    assert code == cli_io.EXIT_CAPACITY and "capacity" in err


def test_excursions_csv(capsys):
    code, out, _ = run(["excursions", "--t-max", "6"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [r["t"] for r in rows] == [str(t) for t in range(1, 7)]
    assert float(rows[0]["K"]) == 0.5
    assert float(rows[0]["K_star"]) == pytest.approx(ew.K_star_pmf(1))


def test_tilt_json(capsys):
    code, out, _ = run(["tilt", "--skip-double-star"], capsys)
    rec = json.loads(out)
    assert code == 0
    assert rec["lambda_star"] == pytest.approx(ew.LAMBDA_STAR_REF, abs=1e-10)
    assert abs(rec["K_hat_lambda_star"] - 1) < 1e-9
    assert abs(rec["G_lambda_hat_residual"]) < 1e-10


def test_sample_csv_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert cli_io.run_command(["sample", "--law", "uniform-is", "--length", "30", "--n", "5",
                                   "--seed", "4", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = list(csv.DictReader(io.StringIO(a.read_text())))
    assert len(rows) == 5 and all(len(r["steps"]) == 30 for r in rows)


@pytest.mark.parametrize("law", ["kinetic", "two-sided", "uniform-exact"])
def test_sample_laws(law, capsys):
    code, out, _ = run(["sample", "--law", law, "--length", "5", "--n", "3"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 3 and all(float(r["weight"]) == 1.0 for r in rows)


def test_usage_errors(capsys):
    assert run(["sample", "--law", "kinetic", "--length", "0"], capsys)[0] == cli_io.EXIT_USAGE
    assert run(["nonsense"], capsys)[0] == cli_io.EXIT_USAGE
    assert run(["count", "--family", "I", "--L", "0"], capsys)[0] == cli_io.EXIT_USAGE


def test_verify_subset(capsys):
    code, out, err = run(["verify", "--only", "1"], capsys)
    rec = json.loads(out)
    assert code == (0 if rec["passed"] else 1)
    assert all(c["criterion"] == 1 for c in rec["checks"])
    assert "[1]" in err


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "prudent_walk", "--version"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip()


@pytest.mark.parametrize("law", ["uniform-is", "two-sided"])
def test_report_matches_schema(law, capsys):
    jsonschema = pytest.importorskip("jsonschema")
    from importlib.resources import files

    schema = json.loads(files("prudent_walk").joinpath("report.schema.json").read_text())
    code, out, _ = run(["report", "--L", "80", "--n", "40", "--law", law], capsys)
    assert code == 0
    jsonschema.validate(json.loads(out), schema)
