import csv

import pytest

from nsmlab.cli import build_parser, main
from nsmlab.io import read_ledger, read_snapshot

SMALL = "[grid]\ndim = 2\nn = 16\n[run]\ndt = 0.01\nt_end = 0.1\nsample_stride = 5\n"


@pytest.fixture
def config(tmp_path):
    def make(extra=""):
        p = tmp_path / "run.ini"
        p.write_text(SMALL + extra)
        return str(p)
    return make


class TestSimulate:
    def test_zero_data_gives_zero_ledger(self, tmp_path, config):
        out = tmp_path / "out"
        code = main(["simulate", "--config", config("[initial]\nrecipe = zero\n"), "--out", str(out), "--quiet"])
        assert code == 0
        led = read_ledger(out / "ledger.csv")
        assert all((v == 0).all() for v in led.channels.values())
        header, fields = read_snapshot(out / "snapshot_final.nsmx")
        assert header["time"] == pytest.approx(0.1)
        assert (out / "reports.csv").exists() and (out / "config.ini").exists()

    def test_seed_override_changes_data(self, tmp_path, config):
        cfg = config()
        main(["simulate", "--config", cfg, "--out", str(tmp_path / "a"), "--quiet", "--seed", "1"])
        main(["simulate", "--config", cfg, "--out", str(tmp_path / "b"), "--quiet", "--seed", "2"])
        main(["simulate", "--config", cfg, "--out", str(tmp_path / "c"), "--quiet", "--seed", "1"])
        a, b, c = ((tmp_path / d / "ledger.csv").read_bytes() for d in "abc")
        assert a == c and a != b
        assert ((tmp_path / "a" / "snapshot_final.nsmx").read_bytes()
                == (tmp_path / "c" / "snapshot_final.nsmx").read_bytes())

    def test_failing_check_exit_one(self, tmp_path, config):
        # a budget threshold a million times too tight must fail
        code = main(["simulate", "--config", config("[checks]\nenergy_budget = 1e-12\n[initial]\nems_norm_target = 0.5\n"),
                     "--out", str(tmp_path), "--quiet"])
        assert code == 1

    def test_config_error_exit_two(self, tmp_path, config, capsys):
        code = main(["simulate", "--config", config("[physics]\nsigma = -1\n"), "--out", str(tmp_path)])
        assert code == 2
        assert "physics.sigma" in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path)]) == 2


class TestVerify:
    def test_missing_ledger(self, tmp_path):
        assert main(["verify-estimates", "--ledger", str(tmp_path / "none.csv"), "--out", str(tmp_path)]) == 2

    def test_round_trip_through_disk(self, tmp_path, config, capsys):
        cfg = config()
        main(["simulate", "--config", cfg, "--out", str(tmp_path), "--quiet"])
        code = main(["verify-estimates", "--ledger", str(tmp_path / "ledger.csv"), "--out", str(tmp_path)])
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert any(ln.startswith("PASS energy_budget") for ln in lines)
        assert any(ln.startswith("PASS thm2d_global") for ln in lines)


class TestOtherCommands:
    def test_sweep_table(self, tmp_path, config):
        code = main(["sweep-c", "--config", config(), "--out", str(tmp_path), "--quiet",
                     "--c-values", "1,2,4,8"])
        rows = list(csv.DictReader(open(tmp_path / "sweep.csv")))
        assert len(rows) == 4 and [float(r["c"]) for r in rows] == [1, 2, 4, 8]
        assert code in (0, 1)

    def test_sweep_bad_values(self, tmp_path, config):
        assert main(["sweep-c", "--config", config(), "--out", str(tmp_path), "--c-values", "a,b"]) == 2

    @pytest.mark.parametrize("cmd,name", [("probe-besov", "besov_reports.csv"),
                                          ("probe-parabolic", "parabolic_reports.csv"),
                                          ("mhd", "mhd_reports.csv")])
    def test_probes(self, tmp_path, config, cmd, name):
        assert main([cmd, "--config", config(), "--out", str(tmp_path), "--quiet"]) == 0
        assert (tmp_path / name).exists()

    def test_parser_rejects_unknown(self):
        assert main(["explode"]) == 2

    def test_help_lists_commands(self):
        text = build_parser().format_help()
        for cmd in ("simulate", "probe-besov", "probe-parabolic", "verify-estimates", "sweep-c", "mhd"):
            assert cmd in text
