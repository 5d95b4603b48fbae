import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from moderation import cli
from moderation.errors import DomainError
from moderation.scenarios import ScenarioSpec, solve


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr().out
    return code, out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestParseValues:
    def test_range(self):
        assert cli.parse_values("0.25:1:0.25") == [0.25, 0.5, 0.75, 1.0]

    def test_list(self):
        assert cli.parse_values("0.2, 1,5") == [0.2, 1.0, 5.0]

    def test_log(self):
        vals = cli.parse_values("log:0.05:5:20")
        assert len(vals) == 20
        assert vals[0] == pytest.approx(0.05) and vals[-1] == pytest.approx(5.0)

    @pytest.mark.parametrize("text", ["1:0:0.1", "0:1:0", "a,b"])
    def test_bad(self, text):
        with pytest.raises(Exception):
            cli.parse_values(text)


class TestFormatting:
    def test_round_trip_precision(self):
        v = 1 / 3
        assert float(cli.fmt(v)) == v
        assert cli.fmt(-0.0) == "0"
        assert cli.fmt(None) == ""


class TestSolve:
    def test_trivial_warmup(self, tmp_path, capsys):
        code, out = run(["solve", "--scenario", "warmup", "--incentive", "trivial",
                         "--out", str(tmp_path / "t.csv")], capsys)
        assert code == 0
        doc = json.loads(out)
        assert doc["t_f"] == pytest.approx(2.0, abs=1e-9)
        assert doc["total_cost"] == pytest.approx(2.0, abs=1e-9)
        assert doc["params"] == {"incentive": "trivial", "mu": None, "c": None, "k": None}
        rows = read_csv(tmp_path / "t.csv")
        assert list(rows[0]) == list(cli.TRAJECTORY_COLUMNS)
        assert len(rows) == 1001

    def test_quadratic_warmup(self, capsys):
        code, out = run(["solve", "--scenario", "warmup", "--incentive", "quadratic"], capsys)
        doc = json.loads(out)
        assert code == 0
        assert doc["t_f"] == pytest.approx(math.sqrt(6), abs=1e-9)
        assert doc["total_cost"] == pytest.approx(1.63299, abs=1e-5)

    def test_spooking(self, tmp_path, capsys):
        summary = tmp_path / "s.json"
        code, _ = run(["solve", "--scenario", "spook", "--mu", "0.5", "--c", "1", "--summary", str(summary)], capsys)
        assert code == 0
        doc = json.loads(summary.read_text())
        assert len(doc["boundary_residuals"]) == 4
        assert max(doc["boundary_residuals"]) <= 1e-6
        assert doc["max_conserved_residual"] <= 1e-6
        assert doc["solver"]["iterations"] > 0 and doc["solver"]["wall_ms"] > 0
        assert doc["solver"]["method"] == "reparam"
        assert doc["t_star"] is None

    def test_unit_mu_spooking_falls_back(self, capsys):
        code, out = run(["solve", "--scenario", "spook", "--mu", "1", "--c", "1"], capsys)
        doc = json.loads(out)
        assert code == 0
        assert doc["solver"]["method"] == "direct"
        assert max(doc["boundary_residuals"]) <= 1e-6

    def test_qcc_scenarios(self, capsys):
        code, out = run(["solve", "--scenario", "qcc-spook", "--c", "1"], capsys)
        doc = json.loads(out)
        assert code == 0 and 0 < doc["t_star"] < doc["t_f"]
        code, out = run(["solve", "--scenario", "qcc-hat", "--c", "1", "--k", "2"], capsys)
        doc = json.loads(out)
        assert doc["t_f"] == pytest.approx(2 * math.sqrt(2) * math.pi, abs=1e-12)
        assert doc["max_conserved_residual"] <= 1e-8

    def test_degenerate_request(self, capsys):
        code, out = run(["solve", "--scenario", "warmup", "--mu", "1"], capsys)
        assert code == cli.EXIT_SOLVER
        err = json.loads(out)["error"]
        assert err["code"] == "DEGENERATE"
        assert err["type"] == "DegenerateControlError"

    @pytest.mark.parametrize("argv", [
        ["solve", "--scenario", "spook", "--mu", "0.5"],
        ["solve", "--scenario", "warmup", "--mu", "1.5"],
        ["solve", "--scenario", "qcc-hat", "--c", "2"],
        ["solve", "--scenario", "warmup", "--mu", "0.5", "--samples", "1"],
    ])
    def test_invalid_spec(self, argv, capsys):
        code, out = run(argv, capsys)
        assert code == cli.EXIT_USAGE
        assert json.loads(out)["error"]["code"] == "DOMAIN"

    def test_argparse_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["solve", "--scenario", "nope"])
        assert exc.value.code == cli.EXIT_USAGE

    def test_csv_is_deterministic(self, tmp_path, capsys):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for p in paths:
            run(["solve", "--scenario", "spook", "--mu", "0.25", "--c", "5", "--out", str(p),
                 "--summary", str(tmp_path / "s.json")], capsys)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_csv_values_round_trip(self, tmp_path, capsys):
        path = tmp_path / "t.csv"
        run(["solve", "--scenario", "warmup", "--mu", "0.6", "--samples", "101", "--out", str(path)], capsys)
        res = solve(ScenarioSpec("warmup", mu=0.6, samples=101))
        table = np.loadtxt(path, delimiter=",", skiprows=1)
        np.testing.assert_array_equal(table[:, 1], res.trajectory.x)
        np.testing.assert_array_equal(table[:, 6], res.trajectory.u[:, 0])

    def test_json_round_trip(self, capsys):
        _, out = run(["solve", "--scenario", "spook", "--mu", "0.5", "--c", "0.2"], capsys)
        assert json.dumps(json.loads(out), indent=2) + "\n" == out


class TestSweep:
    def test_warmup_durations(self, tmp_path, capsys):
        path = tmp_path / "w.csv"
        code, _ = run(["sweep", "--scenario", "warmup", "--sweep-mu", "0.01,0.3333333333,0.6666666667,0.99",
                       "--out", str(path)], capsys)
        assert code == 0
        rows = read_csv(path)
        assert list(rows[0]) == list(cli.SWEEP_COLUMNS)
        tf = [float(r["t_f"]) for r in rows]
        assert len(tf) == 4
        assert np.all(np.diff(tf) > 0)
        assert tf[0] == pytest.approx(2.0, abs=1e-2)

    def test_qcc_times(self, tmp_path, capsys):
        path = tmp_path / "q.csv"
        run(["sweep", "--scenario", "qcc-spook", "--sweep-c", "0.2,1,5", "--out", str(path)], capsys)
        rows = read_csv(path)
        assert len(rows) == 3
        for r in rows:
            assert 0 < float(r["t_star"]) < float(r["t_f"])
            assert r["error"] == ""

    def test_failures_become_rows(self, tmp_path, capsys):
        path = tmp_path / "e.csv"
        code, _ = run(["sweep", "--scenario", "warmup", "--sweep-mu", "0.5,1", "--out", str(path)], capsys)
        assert code == 0
        rows = read_csv(path)
        assert rows[0]["error"] == ""
        assert rows[1]["error"].startswith("DEGENERATE")
        assert rows[1]["t_f"] == ""

    def test_parallel_matches_serial(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        base = ["sweep", "--scenario", "spook", "--sweep-mu", "0.25,0.5", "--sweep-c", "1"]
        run(base + ["--out", str(a)], capsys)
        run(base + ["--out", str(b), "--jobs", "2"], capsys)
        assert a.read_bytes() == b.read_bytes()


class TestCompare:
    def test_small_intensity(self, tmp_path, capsys):
        path = tmp_path / "d.csv"
        code, _ = run(["compare", "--c", "0.001", "--out", str(path)], capsys)
        assert code == 0
        table = np.genfromtxt(path, delimiter=",", names=True)
        diff = table["a_unit_minus_qcc"]
        assert np.nanmax(np.abs(diff)) < 0.05
        assert table["s"][0] == 0.0
        assert np.count_nonzero(np.isfinite(diff)) > 100

    def test_table_structure(self):
        names, table = cli.compare_table(1.0, samples=201)
        assert names[0] == "s"
        # both curves start at rest but with different accelerations: x''(0) = sqrt(C0^2 - mu^2) / C0
        c0 = 1.5
        assert table[0, 1] == pytest.approx(math.sqrt(c0**2 - 1) / c0 - 1.0, abs=1e-6)
        for mu in cli.COMPARE_MUS:
            col = names.index(f"a_mu{mu:g}_minus_c0")
            expect = math.sqrt(c0**2 - mu**2) / c0 - math.sqrt(1 - mu**2)
            assert table[0, col] == pytest.approx(expect, abs=1e-6)
        assert np.nanmax(np.abs(table[:, names.index("a_mu0.125_minus_c0")])) < 0.2

    def test_invalid(self):
        with pytest.raises(ValueError):
            cli.compare_table(0.0)


class TestVerify:
    def test_passes(self, capsys):
        code, out = run(["verify"], capsys)
        assert code == 0, out
        assert "DEGENERATE" in out
        assert "FAIL " not in out

    def test_negative_control(self, capsys):
        code, out = run(["verify", "--perturb-q", "1e-3"], capsys)
        assert code == cli.EXIT_VERIFY
        failing = [line for line in out.splitlines() if line.startswith("FAIL")]
        assert len(failing) == 1 and "conserved" in failing[0]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "moderation", "solve", "--scenario", "qcc-hat", "--c", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["t_f"] == pytest.approx(math.sqrt(2) * math.pi)


def test_spec_validation():
    with pytest.raises(DomainError):
        ScenarioSpec("spook", mu=0.5, c=-1.0)
    spec = ScenarioSpec("qcc-spook", mu=0.3, c=1.0)
    assert spec.incentive == "quadratic" and spec.mu is None
