import csv
import json

import pytest

from sparsenb.cli import main, validate_report

from conftest import write_csv


def run_cli(*argv):
    return main(list(argv))


def select_args(data, out, **overrides):
    args = {
        "--data": str(data), "--label": "class", "--measure": "acc",
        "--runs": "1", "--folds": "3", "--seed": "7", "--out": str(out),
    }
    args.update(overrides)
    flat = []
    for key, value in args.items():
        if value is None:
            continue
        flat.extend([key, value])
    return ["select"] + flat


@pytest.fixture
def synth_csv(tmp_path):
    path = tmp_path / "blocks.csv"
    assert run_cli("synth", "blocks", "--p", "8", "--rho", "0.6", "--n", "240",
                   "--seed", "3", "--out", str(path)) == 0
    return path


@pytest.fixture
def pair_csv(tmp_path):
    path = tmp_path / "pair.csv"
    assert run_cli("synth", "pair", "--seed", "1", "--n", "300", "--out", str(path)) == 0
    return path


# -------------------------------------------------------------------- synth

def test_synth_blocks_shape_and_determinism(tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    flags = ["synth", "blocks", "--p", "5", "--rho", "0.9", "--seed", "7", "--n", "50"]
    assert run_cli(*flags, "--out", str(out1)) == 0
    assert run_cli(*flags, "--out", str(out2)) == 0
    assert out1.read_bytes() == out2.read_bytes()
    rows = out1.read_text().strip().splitlines()
    assert rows[0] == "V1,V2,V3,V4,V5,class"
    assert len(rows) == 51


def test_synth_pair_shape(tmp_path):
    out = tmp_path / "p.csv"
    assert run_cli("synth", "pair", "--seed", "1", "--out", str(out)) == 0
    rows = out.read_text().strip().splitlines()
    assert rows[0] == "V1,V2,V3,V4,class"
    assert len(rows) == 2001


def test_synth_invalid_rho_is_usage_error(tmp_path, capsys):
    code = run_cli("synth", "blocks", "--p", "8", "--rho", "1.5",
                   "--out", str(tmp_path / "x.csv"))
    assert code == 2
    assert "usage error" in capsys.readouterr().err


def test_unknown_flag_exits_2(tmp_path):
    with pytest.raises(SystemExit) as err:
        run_cli("select", "--nonsense")
    assert err.value.code == 2


# ------------------------------------------------------------------- select

def test_select_writes_valid_report(tmp_path, synth_csv):
    out = tmp_path / "report.json"
    summary = tmp_path / "summary.csv"
    audit = tmp_path / "audit.csv"
    code = run_cli(*select_args(synth_csv, out, **{"--summary": str(summary),
                                                   "--audit": str(audit)}))
    assert code == 0
    report = json.loads(out.read_text())
    validate_report(report)
    assert report["kind"] == "select"
    assert report["config"]["seed"] == 7
    assert len(report["folds"]) == 3
    assert report["aggregate"]["folds_completed"] == 3
    assert "acc" in report["aggregate"]["test_measures"]
    assert report["aggregate"]["sparsity"]["mean"] <= 8

    with open(summary) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["measure", "mean", "sd", "sparsity"]
    assert any(r[0] == "acc" for r in rows[1:])

    with open(audit) as fh:
        audit_rows = list(csv.reader(fh))
    assert audit_rows[0][:3] == ["run", "fold", "cut_index"]
    assert len(audit_rows) > 3
    # audit stays out of the JSON report
    assert all("audit" not in rec for rec in report["folds"])


def test_select_reports_are_reproducible(tmp_path, synth_csv):
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert run_cli(*select_args(synth_csv, out1)) == 0
    assert run_cli(*select_args(synth_csv, out2)) == 0

    def canon(path):
        report = json.loads(path.read_text())
        for rec in report["folds"]:
            rec.pop("seconds", None)
        return json.dumps(report, sort_keys=True)

    assert canon(out1) == canon(out2)


def test_select_classic_baseline(tmp_path, synth_csv):
    out = tmp_path / "classic.json"
    assert run_cli(*select_args(synth_csv, out), "--classic") == 0
    report = json.loads(out.read_text())
    assert all(rec["winner_size"] == 8 for rec in report["folds"])
    assert report["config"]["classic"] is True


def test_select_constraint_flags_feasibility(tmp_path, synth_csv):
    out = tmp_path / "con.json"
    code = run_cli(*select_args(synth_csv, out,
                                **{"--constraint": "recall:pos>=40"}))
    assert code == 0
    report = json.loads(out.read_text())
    for rec in report["folds"]:
        assert rec["winner_source"] in ("candidate", "full-set",
                                        "fallback-least-violating")


def test_select_auc_on_three_classes_is_usage_error(tmp_path, capsys):
    path = write_csv(tmp_path / "three.csv", ["x", "class"],
                     [[i, cls] for i in range(12) for cls in ("a", "b", "c")])
    out = tmp_path / "r.json"
    code = run_cli(*select_args(path, out, **{"--measure": "auc"}))
    assert code == 2
    assert "usage error" in capsys.readouterr().err


def test_select_bad_constraint_is_usage_error(tmp_path, synth_csv, capsys):
    code = run_cli(*select_args(synth_csv, tmp_path / "r.json",
                                **{"--constraint": "accuracy>>5"}))
    assert code == 2


def test_select_missing_file_is_data_error(tmp_path, capsys):
    code = run_cli(*select_args(tmp_path / "absent.csv", tmp_path / "r.json"))
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_select_single_class_is_data_error(tmp_path, capsys):
    path = write_csv(tmp_path / "one.csv", ["x", "class"],
                     [[i, "same"] for i in range(10)])
    assert run_cli(*select_args(path, tmp_path / "r.json")) == 1


# ------------------------------------------------------------------- oracle

def test_oracle_report(tmp_path, pair_csv):
    out = tmp_path / "oracle.json"
    code = run_cli("oracle", "--data", str(pair_csv), "--label", "class",
                   "--measure", "acc", "--seed", "5", "--out", str(out))
    assert code == 0
    report = json.loads(out.read_text())
    validate_report(report)
    assert report["kind"] == "oracle"
    assert len(report["rows"]) == 15  # all 2^4 - 1 subsets
    full_rows = [r for r in report["rows"] if len(r["features"]) == 4]
    assert len(full_rows) == 1
    oracle_best = report["oracle_winner"]["objective_value"]
    assert oracle_best >= report["selection_winner"]["objective_value"]
    assert oracle_best == max(r["objective_value"] for r in report["rows"])


def test_oracle_refuses_large_p(tmp_path, capsys):
    header = [f"x{i}" for i in range(16)] + ["class"]
    rows = [[*(i + j for j in range(16)), "a" if i % 2 else "b"] for i in range(30)]
    path = write_csv(tmp_path / "wide.csv", header, rows)
    code = run_cli("oracle", "--data", str(path), "--label", "class",
                   "--out", str(tmp_path / "r.json"))
    assert code == 1
    assert "refuses" in capsys.readouterr().err
