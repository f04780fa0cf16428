import csv
import io
import json

import jsonschema
import numpy as np
import pytest

from partialmat import catalog, cli
from partialmat.catalog import CheckResult
from partialmat.block import BlockMat
from partialmat.report import CSV_HEADER, strip_volatile, validate_report

from conftest import random_block


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def write_matrix(path, h):
    path.write_text(cli.dump_matrix(h))
    return str(path)


@pytest.fixture
def files(tmp_path, kron_m_i2):
    return {
        "id4": write_matrix(tmp_path / "id4.json", BlockMat.identity(2, 2)),
        "kron": write_matrix(tmp_path / "kronM_I2.json", kron_m_i2),
        "bad": write_matrix(tmp_path / "bad.json", BlockMat(2, 2, np.diag([1.0, -1, 1, 1]))),
        "small": write_matrix(tmp_path / "small.json", BlockMat.identity(1, 2)),
    }


def test_matrix_round_trip_bit_exact(rng):
    for n, k in [(1, 1), (2, 2), (3, 2)]:
        h = random_block(rng, n, k, psd=False)
        back = cli.matrix_from_dict(json.loads(cli.dump_matrix(h)))
        assert (back.n, back.k) == (n, k)
        assert back.mat.tobytes() == h.mat.tobytes()


@pytest.mark.parametrize("doc", [
    {"n": 2, "k": 2, "entries": [[1, 0]] * 15},
    {"n": 2, "entries": []},
    {"n": 1, "k": 1, "entries": [[1, 0, 0]]},
    {"n": 1, "k": 1, "entries": [["a", 0]]},
    {"n": 0, "k": 1, "entries": []},
    [1, 2],
])
def test_matrix_from_dict_rejects(doc):
    with pytest.raises(cli.InputError):
        cli.matrix_from_dict(doc)


def test_gen_deterministic(tmp_path, capsys):
    code, out1, _ = run(["gen", "--ensemble", "ginibre", "--n", "2", "--k", "2", "--seed", "7"], capsys)
    assert code == 0
    _, out2, _ = run(["gen", "--ensemble", "ginibre", "--n", "2", "--k", "2", "--seed", "7"], capsys)
    assert out1 == out2
    doc = json.loads(out1)
    assert doc["n"] == 2 and len(doc["entries"]) == 16
    path = tmp_path / "m.json"
    assert cli.main(["gen", "--n", "2", "--k", "2", "--seed", "7", "--out", str(path)]) == 0
    assert path.read_text() == out1


def test_gen_equality_case(capsys):
    code, out, _ = run(["gen", "--ensemble", "equality-case", "--n", "2", "--k", "3", "--seed", "1"],
                       capsys)
    assert code == 0
    h = cli.matrix_from_dict(json.loads(out))
    assert np.array_equal(h.mat, np.kron(h.mat[::3, ::3], np.eye(3)))


@pytest.mark.parametrize("argv", [
    ["gen", "--n", "0", "--k", "2"],
    ["gen", "--n", "2", "--k", "2", "--ensemble", "gaussian"],
    ["gen", "--n", "2", "--k", "2", "--rank", "9"],
    ["gen", "--n", "2"],
    ["suite", "--dims", "2y2"],
    ["suite", "--trials", "0"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(argv, capsys):
    try:
        code = cli.main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 2


def test_check_fischer_identity(files, capsys):
    code, out, _ = run(["check", "fischer", "--realigned", "--in", files["id4"]], capsys)
    rec = json.loads(out)
    assert code == 0 and rec["margin"] == 0 and rec["pass"] and rec["label"] == "fischer/realigned"


def test_check_thompson_hand_value(files, capsys):
    code, out, _ = run(["check", "thompson", "--side", "2", "--in", files["kron"]], capsys)
    assert code == 0
    assert json.loads(out)["margin"] == pytest.approx(6.0, abs=1e-12)


def test_check_not_psd_exit_3(files, capsys):
    argv = ["check", "tensor-three", "--r", "2", "--in", files["bad"], files["id4"], files["id4"]]
    assert run(argv, capsys)[0] == 3
    assert run(["check", "choi", "--in", files["bad"]], capsys)[0] == 3


def test_check_usage_exit_2(files, tmp_path, capsys):
    assert run(["check", "superadd", "--in", files["id4"]], capsys)[0] == 2
    assert run(["check", "superadd", "--in", files["id4"], files["small"]], capsys)[0] == 2
    assert run(["check", "fischer", "--in", str(tmp_path / "missing.json")], capsys)[0] == 2
    junk = tmp_path / "junk.json"
    junk.write_text("{not json")
    assert run(["check", "fischer", "--in", str(junk)], capsys)[0] == 2
    e = files["id4"]
    assert run(["check", "tensor-three", "--r", "7", "--in", e, e, e], capsys)[0] == 2


def test_check_failure_exit_1(files, capsys, monkeypatch):
    def failing(h, realigned=False, tol=None):
        return CheckResult("fischer", -1.0, False, 1e-12, "x")

    monkeypatch.setattr(catalog, "check_fischer", failing)
    code, out, _ = run(["check", "fischer", "--in", files["id4"]], capsys)
    assert code == 1 and not json.loads(out)["pass"]


def test_negative_tolerance_exit_2(files, capsys, monkeypatch):
    assert run(["check", "fischer", "--tol-abs", "-1", "--in", files["id4"]], capsys)[0] == 2
    monkeypatch.setenv("PARTIALMAT_TOL_ABS", "-0.5")
    assert run(["check", "fischer", "--in", files["id4"]], capsys)[0] == 2


def test_env_tolerances(files, capsys, monkeypatch):
    monkeypatch.setenv("PARTIALMAT_TOL_REL", "1e-6")
    monkeypatch.setenv("PARTIALMAT_TOL_ABS", "1e-10")
    _, out, _ = run(["check", "thompson", "--in", files["kron"]], capsys)
    assert json.loads(out)["tol_used"] == pytest.approx(1e-10 + 1e-6 * 15)
    monkeypatch.setenv("PARTIALMAT_TOL_REL", "lots")
    assert run(["check", "thompson", "--in", files["kron"]], capsys)[0] == 2


def test_check_stdin(files, capsys, monkeypatch):
    with open(files["kron"]) as fh:
        monkeypatch.setattr("sys.stdin", io.StringIO(fh.read()))
    code, out, _ = run(["check", "fiedler-markham", "--side", "1", "--in", "-"], capsys)
    assert code == 0 and json.loads(out)["margin"] == pytest.approx(7.0)


def test_suite_small(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, stdout, _ = run(["suite", "--trials", "5", "--seed", "0", "--dims", "2x2", "--out", str(out)],
                          capsys)
    assert code == 0
    doc = json.loads(out.read_text())
    validate_report(doc)
    assert doc["metadata"]["passed"] and doc["metadata"]["failures"] == 0
    assert "fischer" in stdout and "0 failures" in stdout


def test_suite_csv(capsys):
    code, out, err = run(["suite", "--trials", "2", "--dims", "2x2", "--ensembles", "ginibre",
                          "--format", "csv"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert out.splitlines()[0] == "check,side,n,k,trial,margin,pass"
    assert tuple(rows[0]) == CSV_HEADER
    assert all(r[-1] == "true" for r in rows[1:]) and len(rows) > 40
    assert "checks" in err


def test_suite_reproducible(capsys):
    argv = ["suite", "--trials", "3", "--seed", "11", "--dims", "2x2,1x3", "--records", "all"]
    _, out1, _ = run(argv, capsys)
    _, out2, _ = run(argv, capsys)
    d1, d2 = json.loads(out1), json.loads(out2)
    assert "started_at" in d1["metadata"] and "duration_s" in d1["metadata"]
    assert json.dumps(strip_volatile(d1)) == json.dumps(strip_volatile(d2))
    _, out3, _ = run(["suite", "--trials", "3", "--seed", "12", "--dims", "2x2,1x3", "--records", "all"],
                     capsys)
    assert strip_volatile(json.loads(out3))["records"] != strip_volatile(d1)["records"]


def test_validate_report_rejects_inconsistent(capsys):
    _, out, _ = run(["suite", "--trials", "1", "--dims", "2x2", "--ensembles", "ginibre",
                     "--records", "all"], capsys)
    doc = json.loads(out)
    validate_report(doc)
    doc["records"][0]["pass"] = False
    with pytest.raises(jsonschema.ValidationError):
        validate_report(doc)
    del doc["metadata"]
    with pytest.raises(jsonschema.ValidationError):
        validate_report(doc)
