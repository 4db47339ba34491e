import re

from noma_ee.cli import main
from noma_ee.config import ScenarioConfig, parse_config_text


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestUsage:
    def test_no_arguments_prints_usage_exit_1(self, capsys):
        code, _, err = run_cli(capsys)
        assert code == 1
        assert "usage" in err.lower()

    def test_unknown_subcommand_exit_1(self, capsys):
        code, _, _ = run_cli(capsys, "frobnicate")
        assert code == 1

    def test_bad_override_exit_1(self, capsys):
        code, _, err = run_cli(capsys, "solve", "--set", "nope=1")
        assert code == 1
        assert "nope" in err

    def test_malformed_config_file_names_line(self, capsys, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("p_out = 0.05\nvehicles_per_rsu = three\n")
        code, _, err = run_cli(capsys, "solve", "--config", str(cfg))
        assert code == 1
        assert "line 2" in err
        assert "vehicles_per_rsu" in err


class TestDumpConfig:
    def test_round_trips(self, capsys):
        code, out, _ = run_cli(capsys, "solve", "--set", "p_out=0.2",
                               "--dump-config")
        assert code == 0
        assert parse_config_text(out) == ScenarioConfig(p_out=0.2)

    def test_every_field_present(self, capsys):
        _, out, _ = run_cli(capsys, "solve", "--dump-config")
        for field in ScenarioConfig().__dict__:
            assert field in out


class TestSolve:
    def test_default_solve_reports_power_in_band(self, capsys):
        code, out, _ = run_cli(capsys, "solve", "--seed", "3")
        assert code == 0
        m = re.search(r"P\* = ([0-9.]+) dBm", out)
        assert m, out
        assert 15.0 <= float(m.group(1)) <= 30.0
        assert "alpha = [" in out
        assert "system EE" in out


class TestSweep:
    def test_writes_schema_csv(self, capsys, tmp_path):
        code, out, _ = run_cli(
            capsys, "sweep", "--axis", "p_out", "--values", "0.02,0.05,0.1",
            "--trials", "2", "--solvers", "fixed", "--out", str(tmp_path),
            "--seed", "1")
        assert code == 0
        csv_path = tmp_path / "sweep_p_out.csv"
        assert csv_path.exists()
        lines = csv_path.read_text().splitlines()
        assert lines[0] == ("axis_name,axis_value,solver,mean_ee_bits_per_joule,"
                            "std_ee,mean_sumrate_bps,std_sumrate,trials,"
                            "failures,mean_dinkelbach_iters")
        assert len(lines) == 1 + 3
        assert (tmp_path / "sweep_p_out.json").exists()

    def test_unknown_axis_exit_1(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "sweep", "--axis", "bogus",
                               "--values", "1", "--out", str(tmp_path))
        assert code == 1
        assert "axis" in err


class TestValidateOutage:
    def test_runs_and_reports(self, capsys):
        code, out, _ = run_cli(capsys, "validate-outage", "--draws", "2000",
                               "--seed", "2")
        assert code == 0
        assert "empirical outage" in out
        assert "VIOLATION" not in out


class TestBench:
    def test_reports_timings(self, capsys):
        code, out, _ = run_cli(capsys, "bench", "--instances", "3",
                               "--seed", "4")
        assert code == 0
        assert "GABS-Dinkelbach" in out
        assert "ms/instance" in out
