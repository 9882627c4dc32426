import csv
import io
import json
import subprocess
import sys

import pytest

from digitforge import acceptance, cli
from digitforge.acceptance import CriterionResult
from digitforge.errors import BudgetExceededError


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr().out
    return code, out


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_expand_base10(capsys):
    code, out = run(["expand", "--scheme", "base_q:10", "--x", "0.125", "--n", "3"], capsys)
    assert code == 0
    r = rows(out)
    assert [x["digit"] for x in r] == ["1", "2", "5"]
    assert [x["length"] for x in r] == ["1/10", "1/100", "1/1000"]


def test_expand_cf_surd(capsys):
    code, out = run(["expand", "--scheme", "continued_fraction", "--x", "sqrt2-1", "--n", "3"], capsys)
    assert code == 0
    assert [x["digit"] for x in rows(out)] == ["2", "2", "2"]


def test_expand_golden_no_double_ones(capsys):
    code, out = run(["expand", "--scheme", "pseudo_golden:2", "--x", "0.9", "--n", "5"], capsys)
    assert code == 0
    assert "11" not in "".join(x["digit"] for x in rows(out))


def test_expand_endpoint_exit_code(capsys):
    assert cli.main(["expand", "--scheme", "base_q:10", "--x", "0.125", "--n", "3", "--strict"]) == 2
    assert cli.main(["expand", "--scheme", "luroth", "--x", "1", "--n", "2"]) == 2


def test_sample_uniform_all_n_zero(capsys):
    code, out = run(["sample", "--scheme", "base_q:3", "--density", "uniform", "--draws", "500"], capsys)
    assert code == 0
    r = rows(out)
    assert len(r) == 500 and {x["n"] for x in r} == {"0"}
    assert list(r[0]) == ["x", "n", "s", "u", "e", "l"]


def test_sample_is_reproducible_across_threads(tmp_path, monkeypatch):
    args = ["sample", "--density", "piecewise:2:1/2,1,3/2,1", "--draws", "23000", "--seed", "11"]
    outs = []
    for threads in ("1", "3", "1"):
        monkeypatch.setenv("DIGITFORGE_THREADS", threads)
        path = tmp_path / f"s{len(outs)}.csv"
        assert cli.main(args + ["--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    other = tmp_path / "other.csv"
    cli.main(args[:-1] + ["12", "--out", str(other)])
    assert other.read_bytes() != outs[0]


def test_sample_perfect(capsys):
    code, out = run(["sample", "--scheme", "pseudo_golden:2", "--density", "invariant", "--mode", "perfect",
                     "--draws", "2000", "--seed", "3"], capsys)
    assert code == 0
    r = rows(out)
    assert list(r[0])[-5:] == ["m1", "m2", "m", "k", "window"]
    mean = sum(int(x["m1"]) + int(x["m2"]) for x in r) / len(r)
    assert abs(mean - 3.236) < 0.15
    # the invariant density needs at most s digits
    assert max(int(x["n"]) for x in r) <= 1


def test_sample_budget_exit_code(monkeypatch):
    def boom(*a, **k):
        raise BudgetExceededError("no coalescence")
    monkeypatch.setattr(cli, "perfect_remainder_sample", boom)
    assert cli.main(["sample", "--scheme", "pseudo_golden:2", "--density", "invariant",
                     "--mode", "perfect", "--draws", "3"]) == 3


def test_chain_json(capsys):
    code, out = run(["chain", "--scheme", "pseudo_golden:2", "--format", "json"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["uniformly_ergodic"]
    assert rep["pi_inv"][0] == pytest.approx(0.7236068, abs=1e-7)


def test_epsilon_table(capsys):
    code, out = run(["epsilon", "--scheme", "pseudo_golden:2", "--t", "1", "--t-max", "2"], capsys)
    r = rows(out)
    assert float(r[0]["epsilon"]) == pytest.approx(0.6180339887, abs=1e-9)
    assert len(r) == 2


def test_polya_density_and_draws(capsys):
    code, out = run(["polya", "--depth", "2", "--pmf-n", "0,0,1", "--format", "json", "--seed", "4"], capsys)
    rep = json.loads(out)
    assert code == 0 and sum(v / 4 for v in rep["density"].values()) == pytest.approx(1.0)
    code, out = run(["polya", "--depth", "2", "--draws", "50", "--seed", "4"], capsys)
    assert len(rows(out)) == 50


def test_verify_report(tmp_path, capsys):
    path = tmp_path / "report.json"
    code = cli.main(["verify", "--only", "1", "4", "--out", str(path), "--quiet"])
    rep = json.loads(path.read_text())
    assert code == 0 and rep["passed"]
    assert [c["number"] for c in rep["criteria"]] == [1, 4]


def test_verify_failure_exit_code(tmp_path, monkeypatch):
    def failing(seed, scale):
        return CriterionResult(1, "always fails", False, "forced")
    monkeypatch.setattr(acceptance, "CRITERIA", [(failing, ("core",))])
    path = tmp_path / "report.json"
    assert cli.main(["verify", "--out", str(path), "--quiet"]) == 4
    assert json.loads(path.read_text())["passed"] is False


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "digitforge", "expand", "--x", "1/3", "--n", "2"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.splitlines()[1].startswith("1,0,")
