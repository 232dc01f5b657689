import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsmlab.ledger import EnergyLedger, LedgerRecorder
from nsmlab.reports import make_report, ratio
from nsmlab.series import (TrajectorySeries, cumulative_trapezoid, sequence_norm, time_norm,
                           trapezoid, uniform_times)


class TestTrajectorySeries:
    def test_validation(self):
        with pytest.raises(ValueError, match="empty"):
            TrajectorySeries([], [])
        with pytest.raises(ValueError, match="increasing"):
            TrajectorySeries([0.0, 0.0], [1.0, 2.0])
        with pytest.raises(ValueError, match="uniformly"):
            TrajectorySeries([0.0, 1.0, 3.0], [1.0, 2.0, 3.0])
        with pytest.raises(ValueError, match="values for"):
            TrajectorySeries([0.0, 1.0], [1.0])

    def test_single_sample(self):
        s = TrajectorySeries([0.5], [2.0])
        assert s.dt == 0.0 and s.span == 0.0
        assert time_norm(s.values, s.dt, 2) == 0.0

    def test_window_inclusive(self):
        s = TrajectorySeries(uniform_times(1.0, 10), np.arange(11.0))
        w = s.window(0.2, 0.5)
        np.testing.assert_allclose(w.values, [2, 3, 4, 5])
        with pytest.raises(ValueError):
            s.window(2.0, 3.0)

    def test_map_and_scalars(self):
        s = TrajectorySeries([0.0, 1.0], [np.ones(2), 2 * np.ones(2)])
        assert not s.is_scalar
        assert s.scalars(np.sum).is_scalar
        np.testing.assert_allclose(s.scalars(np.sum).values, [2.0, 4.0])


class TestQuadrature:
    def test_trapezoid_exact_for_linear(self):
        t = uniform_times(2.0, 8)
        assert trapezoid(3 * t + 1, t[1] - t[0]) == pytest.approx(8.0)

    def test_cumulative_matches_total(self):
        v = np.random.default_rng(0).random(33)
        assert cumulative_trapezoid(v, 0.1)[-1] == pytest.approx(trapezoid(v, 0.1))

    @pytest.mark.parametrize("r", [1, 2, 4])
    def test_time_norm_of_constant(self, r):
        assert time_norm(np.full(11, 3.0), 0.1, r) == pytest.approx(3.0 * 1.0 ** (1 / r))

    def test_time_norm_inf(self):
        assert time_norm(np.array([1.0, -5.0, 2.0]), 0.1, math.inf) == 5.0

    def test_time_norm_rejects_small_exponent(self):
        with pytest.raises(ValueError):
            time_norm(np.ones(3), 0.1, 0.5)

    @given(st.lists(st.floats(min_value=0, max_value=10), min_size=1, max_size=12),
           st.sampled_from([1.0, 2.0, 3.0, math.inf]))
    @settings(max_examples=40, deadline=None)
    def test_sequence_norm_monotone_in_q(self, vals, q):
        v = np.array(vals)
        assert sequence_norm(v, q) <= sequence_norm(v, 1.0) + 1e-9


class TestReports:
    def test_ratio_conventions(self):
        assert ratio(0.0, 0.0) == 0.0
        assert ratio(1.0, 0.0) == math.inf
        assert ratio(1.0, 4.0) == 0.25

    def test_pass_and_fail(self):
        assert make_report("x", 1.0, 2.0).passed
        assert not make_report("x", 3.0, 2.0).passed
        assert make_report("x", 3.0, 2.0, tolerance_factor=2.0).passed

    def test_implicit_constant_needs_finiteness(self):
        assert make_report("x", 5.0, 1.0, math.inf).passed
        assert not make_report("x", 5.0, 0.0, math.inf).passed
        assert not make_report("x", math.nan, 1.0, math.inf).passed

    def test_line_and_row(self):
        r = make_report("budget", 1e-9, 1e-5, context={"dt": 1e-3}, flags=("trivial",))
        assert r.line().startswith("PASS budget:")
        assert "[trivial]" in r.line()
        row = r.row()
        assert row["flags"] == "trivial" and '"dt": 0.001' in row["context"]


class TestLedger:
    def test_recorder_round_trip(self):
        rec = LedgerRecorder({"dt": 0.1})
        for i in range(3):
            rec.add(0.1 * i, {"energy": 1.0 - i, "kinetic": 0.5}, {"block": [i, i]})
        led = rec.build()
        assert led.names == ["energy", "kinetic"]
        assert len(led) == 3 and led.dt == pytest.approx(0.1)
        assert led.blocks["block"].shape == (3, 2)
        np.testing.assert_allclose(led.series("energy").values, [1, 0, -1])

    def test_missing_channel_message(self):
        led = EnergyLedger(np.arange(2.0), {"energy": np.ones(2)})
        with pytest.raises(KeyError, match="missing channel"):
            led.channel("B_Hs")
        with pytest.raises(KeyError, match="B_Hs"):
            led.require("energy", "B_Hs")

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="samples"):
            EnergyLedger(np.arange(3.0), {"energy": np.ones(2)})
