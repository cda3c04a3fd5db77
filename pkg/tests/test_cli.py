import json
import subprocess
import sys

import pytest

from fastsecagg.cli import SHARE_HEADER, main

FIG4_FLAGS = ["--n0", "5", "--n1", "6", "--alpha", "1/2", "--beta", "3/10", "--delta0", "1/5", "--delta1", "1/6"]


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def fig4_file(tmp_path, capsys):
    code, out, _ = run(capsys, "params", *FIG4_FLAGS)
    assert code == 0
    path = tmp_path / "fig4.json"
    path.write_text(json.dumps(json.loads(out)["params"], indent=1))
    return str(path)


def test_params_product_130(capsys):
    code, out, _ = run(capsys, "params", "--N", "130")
    doc = json.loads(out)["summary"]
    assert code == 0
    assert (doc["S_count"], doc["T_count"], doc["D_count"], doc["q"]) == (26, 13, 12, 131)


def test_params_row_130(capsys):
    code, out, _ = run(capsys, "params", "--N", "130", "--variant", "row", "--beta", "1/2")
    doc = json.loads(out)["summary"]
    assert (doc["S_count"], doc["T_count"], doc["D_count"]) == (29, 29, 13)


def test_params_bad_beta(capsys):
    code, _, err = run(capsys, "params", "--N", "130", "--beta", "0.6")
    assert code == 1 and "beta" in err


def test_params_csv(capsys):
    code, out, _ = run(capsys, "params", "--N", "130", "--format", "csv")
    assert out.splitlines()[0] == "key,value" and "summary.S_count,26" in out


def test_unknown_field_is_line_referenced(tmp_path, capsys):
    path = tmp_path / "p.json"
    path.write_text('{\n "n0": 5,\n "n1": 6,\n "alpha": "1/2",\n "beta": "1/4",\n "delta0": "1/5",\n "colour": 1\n}\n')
    code, _, err = run(capsys, "params", "--params", str(path))
    assert code == 1 and f"{path}:7:" in err


def test_bad_value_is_line_referenced(tmp_path, capsys):
    path = tmp_path / "p.json"
    path.write_text('{\n "n0": 5,\n "n1": 6,\n "alpha": "1/2",\n "beta": "3/4",\n "delta0": "1/5"\n}\n')
    code, _, err = run(capsys, "params", "--params", str(path))
    assert code == 1 and f"{path}:5:" in err


def test_syntax_error_is_line_referenced(tmp_path, capsys):
    path = tmp_path / "p.json"
    path.write_text('{\n "n0": 5\n "n1": 6\n}\n')
    code, _, err = run(capsys, "params", "--params", str(path))
    assert code == 1 and f"{path}:3:" in err


def test_share_recon_round_trip(fig4_file, tmp_path, capsys):
    shares = str(tmp_path / "s.bin")
    code, _, _ = run(capsys, "share", shares, "--params", fig4_file, "--secrets", "1,2,3,4,5,6", "--seed", "3")
    assert code == 0
    data = open(shares, "rb").read()
    magic, version, _, width, blocks, count = SHARE_HEADER.unpack_from(data)
    assert (magic, version, width, blocks, count) == (b"FSSH", 1, 1, 2, 6)
    assert len(data) == SHARE_HEADER.size + 2 * (4 + 30 + 4)
    code, out, _ = run(capsys, "recon", shares, "--params", fig4_file, "--erase", "1,7")
    assert code == 0 and json.loads(out)["secrets"] == [1, 2, 3, 4, 5, 6]


def test_recon_failure_exit_2(fig4_file, tmp_path, capsys):
    shares = str(tmp_path / "s.bin")
    run(capsys, "share", shares, "--params", fig4_file)
    code, out, _ = run(capsys, "recon", shares, "--params", fig4_file, "--erase", "1,26,7,2")
    assert code == 2 and "abort" in json.loads(out)


def test_recon_rejects_other_params(fig4_file, tmp_path, capsys):
    shares = str(tmp_path / "s.bin")
    run(capsys, "share", shares, "--params", fig4_file)
    code, _, err = run(capsys, "recon", shares, "--N", "130")
    assert code == 1 and "different parameters" in err


def test_audit_passes(fig4_file, capsys):
    code, out, _ = run(capsys, "audit", "--params", fig4_file, "--samples", "500")
    doc = json.loads(out)
    assert code == 0 and doc["failures"] == [] and doc["subsets_checked"] == 500


def test_audit_failure_exit_3(fig4_file, capsys):
    code, out, _ = run(capsys, "audit", "--params", fig4_file, "--size", "20", "--samples", "3")
    assert code == 3 and json.loads(out)["failures"]


def test_simulate_ok_and_deterministic(capsys, tmp_path):
    args = ["simulate", *FIG4_FLAGS, "--L", "8", "--R", "4", "--backend", "sim", "--dropouts", "2:1", "--seed", "5"]
    code, first, _ = run(capsys, *args)
    assert code == 0 and json.loads(first)["match"]
    _, second, _ = run(capsys, *args)
    assert first == second
    out = tmp_path / "r.json"
    run(capsys, *args, "--out", str(out))
    assert out.read_text() == first


def test_simulate_half_dropout_aborts(capsys):
    code, out, _ = run(capsys, "simulate", *FIG4_FLAGS, "--L", "8", "--R", "4", "--backend", "sim", "--dropouts", "0:0.5")
    assert code == 2 and json.loads(out)["abort"].startswith("AbortTooFewClients")


def test_simulate_budget_enforced(capsys):
    code, _, err = run(capsys, "simulate", *FIG4_FLAGS, "--backend", "sim", "--R", "4", "--dropouts", "0:0.5", "--enforce-budget")
    assert code == 1 and "budget" in err


def test_simulate_campaign(capsys):
    code, out, _ = run(capsys, "simulate", *FIG4_FLAGS, "--L", "8", "--R", "4", "--backend", "sim", "--trials", "3", "--dropouts", "2:1")
    doc = json.loads(out)
    assert code == 0 and doc["successes"] == 3


def test_bench(capsys):
    code, out, _ = run(capsys, "bench", "--sizes", "130,240", "--runs", "1", "--scheme", "fastshare")
    assert code == 0 and len(json.loads(out)["fastshare"]["rows"]) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fastsecagg", "params", "--N", "130"], capture_output=True, text=True)
    assert proc.returncode == 0 and '"S_count": 26' in proc.stdout
