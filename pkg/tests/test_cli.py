import json
import subprocess
import sys

import pytest

from predlab.cli import main
from predlab.harness import Report


def call(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def rows(out):
    return Report.from_jsonl(out).tables["rows"]


def test_duel(capsys):
    code, out = call(capsys, "--format", "jsonl", "duel", "--pred", "0000", "--horizon", "16",
                     "--fuel", "1000")
    assert code == 0
    (row,) = rows(out)
    assert row["errors"] == 16 and row["all_wrong"]
    assert (row["pred_code_bits"], row["diag_code_bits"]) == (4, 6)


def test_seq_eval(capsys):
    code, out = call(capsys, "--format", "jsonl", "seq", "eval", "--desc", "110000", "--len", "5",
                     "--fuel", "100")
    assert code == 0 and rows(out)[0]["bits"] == "11111"
    code, out = call(capsys, "--format", "jsonl", "seq", "eval", "--desc", "(diag (const 0))",
                     "--len", "5", "--fuel", "100")
    assert rows(out)[0]["bits"] == "11111"


def test_khat_monotone(capsys):
    code, out = call(capsys, "--format", "jsonl", "khat", "monotone", "--target", "1111",
                     "--max-len", "16", "--fuel", "100")
    (row,) = rows(out)
    assert code == 0 and row["value_bits"] == 8 and row["witness"] == "00100000"


def test_vm_run_and_disasm(capsys):
    code, out = call(capsys, "--format", "jsonl", "vm", "run", "--program", "0x20e0:16",
                     "--fuel", "100", "--max-out", "10")
    assert rows(out)[0] == {"status": "Halted", "output": "1", "steps_used": 2}
    code, out = call(capsys, "vm", "disasm", "--program", "0010000011100000")
    assert code == 0 and "OUT1" in out and "HALT" in out


def test_predict_and_learns(capsys):
    code, out = call(capsys, "--format", "jsonl", "predict", "--pred", "(replay (repeat 10))",
                     "--obs", "10", "--fuel", "100")
    assert rows(out)[0]["prediction"] == 1
    code, out = call(capsys, "--format", "jsonl", "learns", "--pred", "0000", "--gen",
                     "(prefix 111 (repeat 0))", "--burn-in", "8", "--horizon", "64",
                     "--fuel", "100")
    row = rows(out)[0]
    assert row["error_positions"] == [0, 1, 2] and row["learned_at_horizon"]


def test_budget_error_is_a_row(capsys):
    code, out = call(capsys, "--format", "jsonl", "predict", "--pred", "(consist 8 5)",
                     "--obs", "", "--fuel", "100")
    assert code == 0 and "error" in rows(out)[0]


def test_kdot_and_catalog(capsys):
    code, out = call(capsys, "--format", "jsonl", "kdot", "--gen", "(repeat 0)", "--max-bits",
                     "4", "--burn-in", "4", "--horizon", "32", "--fuel", "100",
                     "--universe", "restricted")
    assert rows(out)[0]["value_bits"] == 3
    code, out = call(capsys, "--format", "jsonl", "catalog", "--n-bits", "8", "--fuel", "1000",
                     "--horizon", "16")
    assert [r["program"] for r in rows(out)] == ["00000000", "00100000"]


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["duel", "--pred", "0000", "--horizon", "16"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["seq", "eval", "--desc", "01", "--len", "3", "--fuel", "10"])
    assert e.value.code == 2


def test_bad_config_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"kind": "duel-suite", "params": {}}))
    assert main(["experiment", "run", "--config", str(path)]) == 2


def test_failed_claim_exit_1(tmp_path, capsys):
    path = tmp_path / "t2.json"
    cfg = {"kind": "kdot-sweep", "params": {"generators": ["(repeat 0)"], "max_bits": 4,
                                           "burn_in": 4, "horizon": 32, "fuel": 100,
                                           "universe": "all"}}
    path.write_text(json.dumps(cfg))
    assert main(["experiment", "run", "--config", str(path), "--output-dir",
                 str(tmp_path / "out")]) == 0
    bad = {"kind": "catalog-build", "params": {"n_bits": 8, "fuel": 1000, "horizon": 16}}
    path.write_text(json.dumps(bad))
    assert main(["experiment", "run", "--config", str(path)]) == 0
    # a duel against Replay of its own diagonal is still lost: claim holds; a
    # config whose claim fails yields exit status 1
    fail = {"kind": "consist-coverage", "params": {"n_bits": 8, "fuel": 1000, "probe": 17,
                                                  "horizon": 16, "burn_in": 8, "max_c0": 0}}
    path.write_text(json.dumps(fail))
    assert main(["experiment", "run", "--config", str(path)]) == 1


def test_cache_commands(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("PREDLAB_CACHE_DIR", str(tmp_path))
    path = tmp_path / "k.json"
    path.write_text(json.dumps({"kind": "khat-sweep",
                                "params": {"targets": 6, "max_len": 8, "fuels": [50]}}))
    assert main(["experiment", "run", "--config", str(path)]) == 0
    capsys.readouterr()
    code, out = call(capsys, "--format", "jsonl", "cache", "stats")
    assert code == 0 and rows(out)[0]["records"] > 0
    code, out = call(capsys, "--format", "jsonl", "cache", "verify")
    assert code == 0 and rows(out)[0]["mismatched"] == []
    monkeypatch.delenv("PREDLAB_CACHE_DIR")
    assert main(["cache", "stats"]) == 2


def test_jsonl_output_is_stable():
    argv = [sys.executable, "-m", "predlab", "--format", "jsonl", "duel", "--pred", "(speed)",
            "--horizon", "24", "--fuel", "1000"]
    a = subprocess.run(argv, capture_output=True, text=True, check=True).stdout
    b = subprocess.run(argv, capture_output=True, text=True, check=True).stdout
    assert a == b and Report.from_jsonl(a).passed
