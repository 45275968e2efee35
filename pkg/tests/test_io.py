import math

import numpy as np
import pytest

from wormgait import TABLE1, ActuationParams, EnergyParams
from wormgait import io as wio


class TestCsv:
    def test_round_trip_and_exact_header(self, tmp_path):
        path = tmp_path / "x.csv"
        wio.write_csv(path, ("t", "P"), [(0.0, 1.5), (0.1, math.inf)])
        text = path.read_text()
        assert text.splitlines() == ["t,P", "0.0,1.5", "0.1,inf"]
        data = wio.read_csv(path, ("t", "P"))
        assert data.shape == (2, 2) and math.isinf(data[1, 1])

    def test_floats_round_trip_exactly(self, tmp_path):
        path = tmp_path / "x.csv"
        values = np.random.default_rng(0).normal(size=(20, 2))
        wio.write_csv(path, ("a", "b"), values)
        np.testing.assert_array_equal(wio.read_csv(path, ("a", "b")), values)

    def test_wrong_header_names_expected(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("time,x,L\n0,0,0.3\n")
        with pytest.raises(wio.FormatError, match="expected header t,x1,L"):
            wio.read_tracking(path)

    def test_non_numeric(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("t,P\n0,abc\n")
        with pytest.raises(wio.FormatError, match="non-numeric"):
            wio.read_csv(path, ("t", "P"))

    def test_empty_file(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("")
        with pytest.raises(wio.FormatError, match="empty"):
            wio.read_csv(path, ("t", "P"))

    def test_tracking_round_trip(self, tmp_path, reference_logs):
        tracking, power = reference_logs
        wio.write_tracking(tmp_path / "t.csv", tracking)
        wio.write_power_log(tmp_path / "p.csv", power)
        back = wio.read_tracking(tmp_path / "t.csv")
        np.testing.assert_array_equal(back.x1, tracking.x1)
        np.testing.assert_array_equal(wio.read_power(tmp_path / "p.csv").power, power.power)

    def test_body_length_round_trip(self, tmp_path, reference_run):
        _, length = reference_run
        wio.write_body_length(tmp_path / "l.csv", length)
        back = wio.read_body_length(tmp_path / "l.csv")
        np.testing.assert_array_equal(back.d2l_dt2, length.d2l_dt2)

    def test_sim_trace_header(self, tmp_path, reference_run):
        sim, length = reference_run
        wio.write_sim_trace(tmp_path / "s.csv", sim, length)
        data = wio.read_csv(tmp_path / "s.csv", wio.SIM_HEADER)
        np.testing.assert_array_equal(data[:, 2], sim.x2)
        np.testing.assert_array_equal(data[:, 4], sim.v1 + length.dl_dt)


class TestParamFiles:
    def test_parse(self):
        values = wio.parse_params("# comment\neta = 50  # inline\n\nk_b=1000\n")
        assert values == {"eta": 50.0, "k_b": 1000.0}

    def test_unknown_key(self):
        with pytest.raises(wio.FormatError, match="unknown parameter 'etaa'"):
            wio.parse_params("etaa = 1")

    def test_bad_value(self):
        with pytest.raises(wio.FormatError, match="not a number"):
            wio.parse_params("eta = fast")

    def test_missing_equals(self):
        with pytest.raises(wio.FormatError, match="name = value"):
            wio.parse_params("eta 5")

    def test_defaults_round_trip(self):
        values = wio.parse_params(wio.format_params(wio.table1_values()))
        models = wio.build_models(values)
        assert models.robot == TABLE1
        assert models.act == ActuationParams() and models.energy == EnergyParams()
        assert models.g == 9.81

    def test_env_overrides(self):
        assert wio.env_overrides({"WORMGAIT_ETA": "12.5", "OTHER": "1"}) == {"eta": 12.5}
        with pytest.raises(wio.FormatError):
            wio.env_overrides({"WORMGAIT_K_B": "stiff"})

    def test_keys_match_fields(self):
        assert "delta_s" in wio.ALL_KEYS and "alpha_p" in wio.ALL_KEYS and "l0" in wio.ALL_KEYS
