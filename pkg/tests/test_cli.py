import json
import math
import subprocess
import sys

from siftshadow.cli import main
from siftshadow.reporting import load_report


def run_cli(args):
    return main(list(args))


class TestSiftCommand:
    def test_spec_example_prints_indices(self, capsys, tmp_path):
        out = tmp_path / "sift.json"
        code = run_cli(
            [
                "sift", "--values", "1,-1,1,1", "--H", "1",
                "--gamma", "0.5", "--gamma-prime", "0.25", "-o", str(out),
            ]
        )
        assert code == 0
        captured = capsys.readouterr().out
        assert "1,4" in captured
        payload = load_report(out)
        assert payload["indices"] == [1, 4]

    def test_not_gamma_string_is_validation_error(self):
        code = run_cli(
            ["sift", "--values", "0,0", "--H", "1", "--gamma", "0.5", "--gamma-prime", "0.25"]
        )
        assert code == 2


class TestCloseCommand:
    def test_close_one_seventh(self, tmp_path, capsys):
        out = tmp_path / "close.json"
        code = run_cli(
            [
                "close", "--map", "doubling",
                "--bases", "0.14385714285,0.28771428571,0.57542857142",
                "--lengths", "1,1,1",
                "--lambda", "0.5", "--epsilon", "0.1",
                "-o", str(out),
            ]
        )
        assert code == 0
        payload = load_report(out)
        assert payload["period"] == 3
        assert abs(payload["point"] - 1.0 / 7.0) < 1e-9

    def test_chain_file(self, tmp_path):
        chain = tmp_path / "chain.json"
        chain.write_text(json.dumps({"bases": ["2/7"], "lengths": [3]}))
        out = tmp_path / "close.json"
        code = run_cli(
            ["close", "--map", "doubling", "--chain", str(chain),
             "--lambda", "0.5", "--epsilon", "0.01", "-o", str(out)]
        )
        assert code == 0
        payload = load_report(out)
        assert abs(payload["point"] - 2.0 / 7.0) < 1e-10

    def test_gap_too_large_is_solver_error(self):
        code = run_cli(
            ["close", "--map", "doubling", "--bases", "0.3", "--lengths", "4",
             "--lambda", "0.5", "--epsilon", "0.01"]
        )
        assert code == 3


class TestRepellersCommand:
    def test_repellers_json(self, tmp_path):
        out = tmp_path / "rep.json"
        code = run_cli(
            ["repellers", "--map", "doubling", "--point", "sqrt2-1",
             "--horizon", "3000", "--gammas", "0.6,0.5,0.4", "--seed", "7",
             "-o", str(out)]
        )
        assert code == 0
        payload = load_report(out)
        assert len(payload["repellers"]) >= 1
        trace = payload["hausdorff_trace"]
        assert all(b <= a for a, b in zip(trace[:-1], trace[1:]))

    def test_repellers_csv(self, tmp_path):
        out = tmp_path / "rep.csv"
        code = run_cli(
            ["repellers", "--map", "doubling", "--point", "sqrt2-1",
             "--horizon", "3000", "--gammas", "0.6,0.5,0.4",
             "--format", "csv", "-o", str(out)]
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "period,point,indicator,shadow_distance,hausdorff"
        assert len(lines) >= 2

    def test_neutral_no_hyperbolic_times_exit_3(self):
        code = run_cli(
            ["repellers", "--map", "neutral_fixed(0.5)", "--point", "0",
             "--horizon", "300", "--gammas", "0.6,0.5,0.4"]
        )
        assert code == 3


class TestExpansionFitCommand:
    def test_doubling_prints_constants(self, capsys):
        code = run_cli(["expansion-fit", "--map", "doubling", "--k-max", "20"])
        assert code == 0
        out = capsys.readouterr().out
        assert "C=1" in out
        assert f"{math.log(2.0):.6f}"[:7] in out

    def test_neutral_diagnostic(self, capsys, tmp_path):
        out = tmp_path / "fit.json"
        code = run_cli(
            ["expansion-fit", "--map", "neutral_fixed(0.5)", "--k-max", "12",
             "--points", "0,0.3,0.8", "-o", str(out)]
        )
        assert code == 0
        payload = load_report(out)
        assert payload["lambda"] <= 0.0
        assert payload["diagnostic"]


class TestKingmanCommand:
    def test_doubling_levels(self, tmp_path):
        out = tmp_path / "kg.json"
        code = run_cli(
            ["kingman", "--map", "doubling", "--point", "0.3", "--t1", "1",
             "--levels", "4", "--blocks", "8", "-o", str(out)]
        )
        assert code == 0
        payload = load_report(out)
        assert len(payload["estimates"]) == 4
        for e in payload["estimates"]:
            assert abs(e["value"] - math.log(2.0)) < 1e-12

    def test_cocycle_word(self, tmp_path):
        out = tmp_path / "kg.json"
        code = run_cli(
            ["kingman", "--map", "bm_cocycle(2,2)", "--t1", "1",
             "--levels", "5", "--blocks", "16", "--seed", "3", "-o", str(out)]
        )
        assert code == 0
        payload = load_report(out)
        values = [e["value"] for e in payload["estimates"]]
        assert all(b >= a - 1e-9 for a, b in zip(values[:-1], values[1:]))


class TestVerifyAbnormalCommand:
    def test_doubling_fixed_point(self, tmp_path):
        out = tmp_path / "ab.json"
        code = run_cli(
            ["verify-abnormal", "--map", "doubling", "--point", "0", "--tau", "1",
             "--gamma-prime", "0.1", "--gamma-double-prime", "0.8", "-o", str(out)]
        )
        assert code == 0
        payload = load_report(out)
        assert payload["abnormal"] is True

    def test_not_periodic_exit_2(self):
        code = run_cli(
            ["verify-abnormal", "--map", "doubling", "--point", "0.3", "--tau", "3",
             "--gamma-prime", "0.1", "--gamma-double-prime", "0.8"]
        )
        assert code == 2


class TestCompareCommand:
    def test_identical_files(self, tmp_path, capsys):
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        for out in (out1, out2):
            assert run_cli(
                ["sift", "--values", "1,-1,1,1", "--H", "1",
                 "--gamma", "0.5", "--gamma-prime", "0.25", "-o", str(out)]
            ) == 0
        assert run_cli(["compare", str(out1), str(out2)]) == 0

    def test_tolerated_difference(self, tmp_path):
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        assert run_cli(
            ["sift", "--values", "1,-1,1,1", "--H", "1",
             "--gamma", "0.5", "--gamma-prime", "0.25", "-o", str(out1)]
        ) == 0
        payload = json.loads(out1.read_text())
        payload["pliss_constant"] += 1e-12
        out2.write_text(json.dumps(payload))
        assert run_cli(["compare", str(out1), str(out2)]) == 1
        assert run_cli(
            ["compare", str(out1), str(out2), "--tol", "pliss_constant=1e-9"]
        ) == 0

    def test_schema_mismatch_exit_2(self, tmp_path):
        out1 = tmp_path / "a.json"
        out2 = tmp_path / "b.json"
        assert run_cli(
            ["sift", "--values", "1,-1,1,1", "--H", "1",
             "--gamma", "0.5", "--gamma-prime", "0.25", "-o", str(out1)]
        ) == 0
        out2.write_text(json.dumps({"kind": "mystery"}))
        assert run_cli(["compare", str(out1), str(out2)]) == 2


class TestConfigFile:
    def test_config_supplies_defaults_flags_win(self, tmp_path, capsys):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("# sift defaults\nvalues = 1,-1,1,1\nH = 1\ngamma = 0.5\ngamma-prime = 0.4\n")
        code = run_cli(["sift", "--config", str(cfgfile), "--gamma-prime", "0.25"])
        assert code == 0
        out = capsys.readouterr().out
        assert "1,4" in out

    def test_unknown_key_rejected(self, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("values = 1,1\nH = 1\ngamma = 0.5\ngamma-prime = 0.25\nbogus = 1\n")
        assert run_cli(["sift", "--config", str(cfgfile)]) == 2

    def test_malformed_line_diagnostic(self, tmp_path, capsys):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("values 1,1\n")
        assert run_cli(["sift", "--config", str(cfgfile)]) == 2
        err = capsys.readouterr().err
        assert ":1:" in err


class TestDeterminism:
    def test_rerun_byte_identical_subprocess(self, tmp_path):
        outs = []
        for name in ("r1.json", "r2.json"):
            out = tmp_path / name
            proc = subprocess.run(
                [sys.executable, "-m", "siftshadow", "repellers", "--map", "doubling",
                 "--point", "sqrt2-1", "--horizon", "2000",
                 "--gammas", "0.6,0.5,0.4", "--seed", "7", "-o", str(out)],
                capture_output=True, text=True,
            )
            assert proc.returncode == 0, proc.stderr
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
