import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from harmonic_urn.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_exact_row_brackets_one(capsys):
    code, out, _ = run(capsys, "exact", "--n", "10")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows and all(r["n"] == "10" for r in rows)
    total = sum(Fraction(int(r["p_num"]), int(r["p_den"])) for r in rows)
    assert 1 - 1e-12 < total <= 1
    assert out.endswith("\r\n")


def test_exact_json_carries_identities(capsys):
    code, out, _ = run(capsys, "--format", "json", "exact", "--n", "3", "--identity-max", "8")
    doc = json.loads(out)
    assert code == 0 and doc["schema"] == 1 and doc["brackets_one"]
    names = {d["identity_name"] for d in doc["identities"]}
    assert {"detailed_balance", "recurrence", "median_half"} <= names


@pytest.mark.parametrize("model", ["leaky", "noisy", "traverse"])
def test_same_seed_gives_identical_bytes(capsys, model):
    argv = ["simulate", "--model", model, "--z0", "4", "--replicas", "25", "--seed", "11"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    _, c, _ = run(capsys, *argv[:-1], "12")
    assert a == b and a != c


def test_simulate_columns(capsys):
    _, out, _ = run(capsys, "simulate", "--model", "leaky", "--replicas", "3")
    header = out.split("\r\n")[0]
    assert header == "seed,replica,z0,kappa_kind,tau,tau_q,area_num,area_den,censored"


def test_global_flags_after_subcommand(capsys):
    _, a, _ = run(capsys, "--seed", "5", "simulate", "--replicas", "4")
    _, b, _ = run(capsys, "simulate", "--seed", "5", "--replicas", "4")
    assert a == b


def test_output_file(tmp_path, capsys):
    path = tmp_path / "row.csv"
    code, out, _ = run(capsys, "exact", "--n", "2", "--out", str(path))
    assert code == 0 and out == ""
    assert path.read_bytes().startswith(b"n,m,p_num,p_den\r\n")


def test_renewal_json(capsys):
    code, out, _ = run(capsys, "renewal", "--t", "10", "--pairs", "5", "--replicas", "1000")
    doc = json.loads(out)
    assert code == 0 and doc["schema"] == 1
    assert abs(float(doc["f_exact"]) - 20 - 2 / 3) < 1e-8
    assert len(doc["roots"]) == 5 and {"mean", "var", "mean_se"} <= set(doc["mc"])


def test_embed_poly_json(capsys):
    code, out, _ = run(capsys, "embed", "--mode", "poly", "--n", "1")
    doc = json.loads(out)
    assert code == 0 and abs(float(doc["tau_poly"]) - 1.718281828459045) < 1e-12


@pytest.mark.parametrize("mode", ["fast", "slow"])
def test_embed_monte_carlo(capsys, mode):
    code, out, _ = run(capsys, "embed", "--mode", mode, "--n", "3", "--replicas", "2000")
    doc = json.loads(out)
    assert code == 0 and doc["mc_se"] > 0


@pytest.mark.parametrize("exp", ["coalesce", "ingraph", "dual"])
def test_perc_experiments(capsys, exp):
    code, out, _ = run(capsys, "perc", "--experiment", exp, "--replicas", "5", "--window", "4")
    assert code == 0 and out.count("\r\n") >= 2


def test_classify_small_budget(capsys):
    code, out, _ = run(capsys, "classify", "--kappa", "point:1", "--budget", "50",
                       "--moment-samples", "20000")
    doc = json.loads(out)
    assert code == 0 and doc["verdict"] == "positive-recurrent"


def test_quadrant_rows(capsys):
    code, out, _ = run(capsys, "quadrant", "--law", "uniform01", "--crossings", "6")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and len(rows) == 7 and all(int(r[1]) >= 1 for r in rows[1:])


def test_quadrant_classify_json(capsys):
    code, out, _ = run(capsys, "--format", "json", "quadrant", "--law", "erlang2", "--classify",
                       "--samples", "20000")
    doc = json.loads(out)
    assert code == 0 and doc["verdict"] == "transient"


def test_verify_single_criterion(capsys):
    code, out, err = run(capsys, "verify", "--criteria", "4")
    doc = json.loads(out)
    assert code == 0 and doc["pass"] and "criterion  4 [PASS]" in err
    assert all(c["anchor"] for crit in doc["criteria"] for c in crit["checks"])


@pytest.mark.parametrize("argv", [
    ["exact"],
    ["exact", "--n", "0"],
    ["simulate", "--replicas", "0"],
    ["simulate", "--kappa", "nonsense"],
    ["renewal", "--t", "-1"],
    ["verify", "--criteria", "99"],
    ["frobnicate"],
    ["--prec-bits", "8", "renewal", "--t", "2"],
])
def test_usage_errors_exit_two(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "harmonic_urn.cli", "exact", "--n", "1"],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0 and r.stdout.startswith("n,m,p_num,p_den")
