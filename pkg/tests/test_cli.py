import json

import pytest

from codedpc.cli import SWEEP_COLUMNS, UsageError, main, read_config


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestConfigFile:
    def test_parse_and_types(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# comment\n"
            "regime = lir\n"
            "payoff = linear   # inline comment\n"
            "snr_start = 5\n"
            "sim_seed = 9\n"
        )
        values = read_config(str(path))
        assert values == {
            "regime": "lir",
            "payoff": "linear",
            "snr_start": 5.0,
            "sim_seed": 9,
        }

    def test_unknown_key_reports_line(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("regime = lir\nbogus = 3\n")
        with pytest.raises(UsageError, match=r"run\.cfg:2.*bogus"):
            read_config(str(path))

    def test_bad_value_reports_field(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("snr_start = fast\n")
        with pytest.raises(UsageError, match="snr_start"):
            read_config(str(path))

    def test_missing_file_is_usage_error(self, capsys):
        code, _, err = run_cli(capsys, "sweep", "--config", "/nonexistent.cfg")
        assert code == 1
        assert "cannot read config" in err

    def test_flags_override_file(self, tmp_path, capsys):
        path = tmp_path / "run.cfg"
        path.write_text("snr = 4\n")
        code, out, _ = run_cli(
            capsys, "policies", "--config", str(path), "--snr", "10"
        )
        assert code == 0
        # P_max = 10 at 10 dB shows up as an action level
        assert ",10," in out or out.rstrip().endswith(",10")


class TestSweep:
    def test_single_point_ordering(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "sweep", "--regime", "hir", "--payoff", "log",
            "--snr-start", "10", "--snr-stop", "10",
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == ",".join(SWEEP_COLUMNS)
        assert len(lines) == 2
        row = dict(zip(SWEEP_COLUMNS, lines[1].split(",")))
        fpc, spc = float(row["fpc"]), float(row["spc"])
        ocpc, cb = float(row["ocpc"]), float(row["costless"])
        assert fpc <= spc + 1e-6 <= ocpc + 2e-6 <= cb + 3e-6
        assert row["status"] == "ok"
        assert float(row["gain_ocpc_vs_fpc_pct"]) == pytest.approx(
            100.0 * (ocpc / fpc - 1.0), abs=1e-9
        )

    def test_deterministic_output(self, capsys):
        args = ("sweep", "--regime", "lir", "--snr-start", "3", "--snr-stop", "5")
        _, first, _ = run_cli(capsys, *args)
        _, second, _ = run_cli(capsys, *args)
        assert first == second

    def test_single_state_linear_ocpc_equals_costless(self, capsys):
        # collapsing the state leaves nothing to coordinate about
        code, out, _ = run_cli(
            capsys,
            "sweep", "--payoff", "linear",
            "--p11", "1", "--p12", "1", "--p21", "1", "--p22", "1",
            "--snr-start", "10", "--snr-stop", "10",
        )
        assert code == 0
        row = dict(zip(SWEEP_COLUMNS, out.strip().splitlines()[1].split(",")))
        assert float(row["ocpc"]) == pytest.approx(float(row["costless"]), abs=1e-9)

    def test_output_file(self, tmp_path, capsys):
        out_path = tmp_path / "sweep.csv"
        code, out, _ = run_cli(
            capsys,
            "sweep", "--snr-start", "10", "--snr-stop", "10",
            "--output", str(out_path),
        )
        assert code == 0
        assert out == ""
        assert out_path.read_text().startswith(SWEEP_COLUMNS[0])

    def test_bad_regime_is_usage_error(self, capsys):
        code, _, err = run_cli(capsys, "sweep", "--regime", "mid")
        assert code == 1
        assert "regime" in err

    def test_bad_flag_value_is_usage_error(self, capsys):
        code, _, _ = run_cli(capsys, "sweep", "--snr-start", "fast")
        assert code == 1


class TestPolicies:
    def test_sixteen_states(self, capsys):
        code, out, _ = run_cli(capsys, "policies", "--regime", "hir", "--snr", "10")
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 17
        header = lines[0].split(",")
        assert header[0] == "state" and "spc_x1" in header

    def test_both_off_never_optimal(self, capsys):
        _, out, _ = run_cli(capsys, "policies", "--regime", "lir", "--snr", "10")
        for line in out.strip().splitlines()[1:]:
            parts = line.split(",")
            assert not (float(parts[6]) == 0.0 and float(parts[7]) == 0.0)

    def test_interference_dominated_state_single_transmitter(self, capsys):
        # all gains high at high SNR with the log payoff: exactly one side
        # transmits; the lowest-index tie-break reports x1 off
        _, out, _ = run_cli(capsys, "policies", "--regime", "hir", "--snr", "30")
        rows = out.strip().splitlines()[1:]
        parts = rows[15].split(",")
        best_x1, best_x2 = float(parts[6]), float(parts[7])
        assert (best_x1 == 0.0) != (best_x2 == 0.0)
        assert best_x1 == 0.0


class TestSimulate:
    def test_fpc_target_no_decoder_errors(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "simulate", "--target", "fpc", "--regime", "hir", "--snr", "10",
            "--sim-n", "100", "--sim-blocks", "10", "--sim-seed", "3",
        )
        assert code == 0
        report = json.loads(out)
        assert report["result"]["decoder_errors"] == 0
        assert report["info_coordination_bits"] == 0.0

    def test_seeded_json_identical(self, capsys):
        args = (
            "simulate", "--target", "spc", "--regime", "lir", "--snr", "8",
            "--sim-n", "80", "--sim-blocks", "8", "--sim-seed", "21",
        )
        _, first, _ = run_cli(capsys, *args)
        _, second, _ = run_cli(capsys, *args)
        assert first == second

    def test_infeasible_rate_exit_2_names_informations(self, capsys):
        # a rate beyond what the binary observation supports is rejected,
        # quoting both information terms
        code, _, err = run_cli(
            capsys,
            "simulate", "--target", "solver", "--regime", "hir", "--snr", "10",
            "--min-slack", "0.05", "--sim-n", "50", "--sim-blocks", "5",
            "--sim-rate", "2.0",
        )
        assert code == 2
        assert "interval" in err and "bits" in err

    def test_codebook_cap_exit_2(self, capsys):
        code, _, err = run_cli(
            capsys,
            "simulate", "--target", "spc", "--regime", "hir", "--snr", "10",
            "--sim-n", "50", "--sim-blocks", "5", "--sim-rate", "0.5",
        )
        assert code == 2
        assert "cap" in err

    def test_solver_target_report_fields(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "simulate", "--target", "solver", "--regime", "hir", "--snr", "10",
            "--min-slack", "0.05", "--sim-n", "40", "--sim-blocks", "8",
            "--sim-rate", "0.4", "--sim-epsilon", "0.6",
        )
        assert code == 0
        report = json.loads(out)
        assert report["target_slack"] >= 0.05 - 1e-6
        assert report["rate"] == pytest.approx(0.4)
        assert len(report["result"]["blocks"]) == 8
        assert report["codebook_size"] >= 2
