import csv
import io
import json

import pytest

from amac.cli import PATTERN_COLUMNS, SCHEMA_VERSION, SWEEP_COLUMNS, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_capacity_csv_and_json(capsys):
    code, out, _ = run(capsys, "capacity", "--z-channel", "0.101")
    assert code == 0
    row = rows(out)[0]
    assert abs(float(row["capacity"]) - 0.761167) < 1e-4
    code, out, _ = run(capsys, "capacity", "--z-channel", "0.101", "--json")
    rec = json.loads(out)
    assert rec["schema_version"] == SCHEMA_VERSION
    assert rec["rows"][0]["capacity"] == float(row["capacity"])
    assert rec["rows"][0]["p0"] == float(row["p0"])


def test_capacity_useless_channel(capsys):
    code, out, _ = run(capsys, "capacity", "--bsc", "0.5")
    assert code == 0 and float(rows(out)[0]["capacity"]) == 0.0


def test_sweep_columns_pinned(capsys):
    assert SWEEP_COLUMNS == ["rate", "effective_rate", "exponent", "L_dom", "j_dom", "regime",
                             "error"]
    assert PATTERN_COLUMNS == ["rate", "effective_rate", "L", "j", "exponent", "regime"]
    code, out, _ = run(capsys, "sweep", "--K", "4", "--rate-min", "0.1", "--rate-max", "0.12",
                       "--rate-step", "0.01", "--sync-bound")
    assert code == 0
    header = out.splitlines()[0].split(",")
    assert header == SWEEP_COLUMNS + ["esp_2r"]
    table = rows(out)
    assert [r["rate"] for r in table] == ["0.100000", "0.110000", "0.120000"]
    assert table[0]["effective_rate"] == "0.075000"
    assert all(r["error"] == "" for r in table)


def test_sweep_per_pattern(capsys):
    code, out, _ = run(capsys, "sweep", "--K", "3", "--rate-min", "0.2", "--rate-max", "0.2",
                       "--per-pattern")
    table = rows(out)
    assert code == 0 and len(table) == 6
    assert [(r["L"], r["j"]) for r in table][:2] == [("1", "1"), ("1", "2")]


def test_sweep_is_deterministic(capsys):
    args = ("sweep", "--K", "3", "--rate-min", "0.3", "--rate-max", "0.32", "--rate-step", "0.01",
            "--json")
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert a == b
    rec = json.loads(a)
    assert list(rec) == ["schema_version", "sigma", "alpha", "K", "M", "r_sup_exact", "rows"]
    assert list(rec["rows"][0]) == SWEEP_COLUMNS


def test_exponent_single_pattern(capsys):
    code, out, _ = run(capsys, "exponent", "--rate", "0.2", "--L", "1")
    assert code == 0 and abs(float(rows(out)[0]["exponent"]) - 0.358083) < 1e-6


def test_region(capsys):
    code, out, _ = run(capsys, "region", "--z-channel", "0.101", "--input", "0.351746", "0.351746")
    assert code == 0 and abs(float(rows(out)[0]["i12"]) - 0.761167) < 1e-4
    code, out, _ = run(capsys, "region", "--compound", "0.05", "0.2", "--vertices")
    assert code == 0 and len(rows(out)) >= 3


def test_simulate(capsys):
    code, out, _ = run(capsys, "simulate", "--n", "8", "--K", "3", "--sigma", "0", "--rates", "0",
                       "0", "--trials", "500")
    rec = json.loads(out)
    assert code == 0 and rec["error_rate"] == 0 and rec["trials"] == 500


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "--balanced", "--n-max", "12")
    assert code == 0 and "PASS" in out
    code, out, _ = run(capsys, "verify", "--identities", "--instances", "50")
    assert code == 0 and out.count("PASS") == 6


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 3
    code, _, err = run(capsys, "exponent", "--alpha", "1.5")
    assert code == 3 and "alpha" in err
    code, _, _ = run(capsys, "capacity", "--z-channel", "2")
    assert code == 3


def test_output_file(tmp_path, capsys):
    path = tmp_path / "cap.csv"
    assert main(["capacity", "--output", str(path)]) == 0
    assert path.read_text().startswith("channel,capacity")


def test_numeric_failure_exit_code(capsys, monkeypatch):
    import amac.cli as cli
    from amac.errors import ConvergenceError

    def boom(*_, **__):
        raise ConvergenceError("no convergence")

    monkeypatch.setattr(cli, "envelope_exponent", boom)
    code, _, err = run(capsys, "exponent", "--rate", "0.2")
    assert code == 2 and "numerical failure" in err
    code, out, _ = run(capsys, "sweep", "--rate-max", "0.01", "--rate-step", "0.01")
    assert code == 2
    assert all(r["error"] for r in rows(out))
