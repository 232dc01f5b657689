import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsmlab.dynamics import RunConfig, initial_state, simulate
from nsmlab.io import (MAGIC, ConfigError, config_text, parse_config, parse_config_text,
                       read_ledger, read_snapshot, reports_csv, snapshot_bytes, write_config,
                       write_ledger, write_ledger_meta, write_snapshot)
from nsmlab.ledger import EnergyLedger
from nsmlab.reports import make_report

MINIMAL = "[grid]\ndim = 2\nn = 16\n[run]\ndt = 0.01\nt_end = 0.1\n"


class TestConfig:
    def test_minimal_applies_defaults(self):
        cfg = parse_config_text(MINIMAL)
        assert cfg.n == 16 and cfg.mu == RunConfig().mu and cfg.checks == {}

    def test_negative_sigma_names_key_and_line(self):
        text = MINIMAL + "[physics]\nmu = 0.1\nsigma = -2\n"
        with pytest.raises(ConfigError) as err:
            parse_config_text(text, "run.ini")
        assert err.value.key == "physics.sigma" and err.value.line == 9
        assert "physics.sigma" in str(err.value) and "line 9" in str(err.value)

    @pytest.mark.parametrize("text,key", [
        ("[grid]\ncolour = red\n", "grid.colour"),
        ("[checks]\nnot_a_check = 1\n", "checks.not_a_check"),
        ("[initial]\nrecipe = spiral\n", "initial.recipe"),
        ("[run]\nseed = 1.5\n", "run.seed"),
        ("[bogus]\nx = 1\n", "bogus"),
    ])
    def test_schema_violations(self, text, key):
        with pytest.raises(ConfigError) as err:
            parse_config_text(text)
        assert err.value.key == key
        assert err.value.line in (1, 2)

    def test_cross_field_error(self):
        with pytest.raises(ConfigError, match="CFL"):
            parse_config_text(MINIMAL.replace("dt = 0.01", "dt = 0.5").replace("t_end = 0.1", "t_end = 1.0"))

    def test_malformed(self):
        with pytest.raises(ConfigError):
            parse_config_text("dim = 2\n")

    def test_checks_section(self):
        cfg = parse_config_text(MINIMAL + "[checks]\nenergy_budget = 2\nthm2d_velocity = inf\n")
        assert cfg.checks == {"energy_budget": 2.0, "thm2d_velocity": float("inf")}

    def test_inline_comments(self):
        cfg = parse_config_text("[run]\nn_trunc = none   ; full system\nseed = 7  # lucky\n")
        assert cfg.n_trunc is None and cfg.seed == 7

    @given(st.floats(min_value=1e-3, max_value=10), st.integers(min_value=0, max_value=2 ** 31),
           st.sampled_from([None, 2, 4]), st.booleans())
    @settings(max_examples=25, deadline=None)
    def test_round_trip(self, mu, seed, n_trunc, track):
        cfg = RunConfig(n=16, dt=0.01, t_end=0.1, mu=mu, seed=seed, n_trunc=n_trunc,
                        track_decomposition=track, checks={"energy_budget": 1.5})
        assert parse_config_text(config_text(cfg)) == cfg

    def test_file_round_trip(self, tmp_path):
        cfg = RunConfig(n=16, dt=0.01, t_end=0.1, c=2.0)
        write_config(cfg, tmp_path / "a.ini")
        assert parse_config(tmp_path / "a.ini") == cfg


class TestLedgerCsv:
    def test_empty_ledger_header_only(self, tmp_path):
        led = EnergyLedger(np.zeros(0), {"energy": np.zeros(0), "kinetic": np.zeros(0)})
        write_ledger(led, tmp_path / "l.csv")
        assert (tmp_path / "l.csv").read_bytes() == b"time,energy,kinetic\n"

    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        t = np.linspace(0, 1, 7)
        led = EnergyLedger(t, {"b": rng.standard_normal(7) * 1e-300, "a": rng.standard_normal(7) * 1e5})
        write_ledger(led, tmp_path / "l.csv")
        back = read_ledger(tmp_path / "l.csv")
        assert back.names == ["b", "a"]
        np.testing.assert_array_equal(back.times, t)
        for n in led.names:
            np.testing.assert_array_equal(back.channels[n], led.channels[n])

    def test_unix_newlines_and_digits(self, tmp_path):
        led = EnergyLedger(np.array([0.1]), {"x": np.array([1 / 3])})
        write_ledger(led, tmp_path / "l.csv")
        raw = (tmp_path / "l.csv").read_bytes()
        assert b"\r" not in raw and raw.endswith(b"\n")
        assert raw.splitlines()[1] == b"0.10000000000000001,0.33333333333333331"

    def test_meta_sidecar(self, tmp_path):
        led = EnergyLedger(np.array([0.0]), {"x": np.array([1.0])}, {"c": 2.0, "dim": 2})
        write_ledger(led, tmp_path / "l.csv")
        write_ledger_meta(led, tmp_path / "l.csv")
        assert read_ledger(tmp_path / "l.csv").meta == {"c": 2.0, "dim": 2}

    def test_not_a_ledger(self, tmp_path):
        (tmp_path / "x.csv").write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="not a ledger"):
            read_ledger(tmp_path / "x.csv")

    def test_deterministic_bytes(self, tmp_path):
        cfg = RunConfig(n=16, dt=0.01, t_end=0.1)
        for name in ("a.csv", "b.csv"):
            write_ledger(simulate(cfg).ledger, tmp_path / name)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


class TestSnapshot:
    def test_layout(self):
        st = initial_state(RunConfig(n=16, dt=0.01, t_end=0.1))
        blob = snapshot_bytes(st)
        assert blob[:4] == MAGIC
        version, hlen = struct.unpack("<II", blob[4:12])
        header = json.loads(blob[12:12 + hlen])
        assert version == 1 and header["fields"] == ["u", "E", "B"]
        assert len(blob) - 12 - hlen == 3 * 3 * 16 * 16 * 2 * 8
        first = np.frombuffer(blob[12 + hlen:12 + hlen + 16], "<f8")
        c = st.u.coeffs[0, 0, 0]
        np.testing.assert_array_equal(first, [c.real, c.imag])

    def test_round_trip(self, tmp_path):
        st = initial_state(RunConfig(dim=3, n=16, dt=0.01, t_end=0.1))
        write_snapshot(st, tmp_path / "s.nsmx", {"seed": 0})
        header, fields = read_snapshot(tmp_path / "s.nsmx")
        assert header["grid"] == {"dim": 3, "n": 16, "length": st.grid.length}
        np.testing.assert_array_equal(fields["B"].coeffs, st.B.coeffs)

    @pytest.mark.parametrize("cut", ["magic", "payload"])
    def test_corrupt(self, tmp_path, cut):
        blob = snapshot_bytes(initial_state(RunConfig(n=16, dt=0.01, t_end=0.1)))
        blob = b"XXXX" + blob[4:] if cut == "magic" else blob[:-8]
        (tmp_path / "bad.nsmx").write_bytes(blob)
        with pytest.raises(ValueError):
            read_snapshot(tmp_path / "bad.nsmx")


def test_reports_csv_columns():
    text = reports_csv([make_report("a", 1.0, 2.0, context={"c": 1.0})])
    head, row = text.splitlines()
    assert head == "name,left,right,empirical_constant,tolerance_factor,passed,flags,context"
    assert row.startswith("a,1,2,0.5,1,True,,")
