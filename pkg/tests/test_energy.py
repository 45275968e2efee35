import math

import numpy as np
import pytest

from wormgait import TABLE1, EnergyParams, GaitParams, ParameterError, accumulate_energy, gait_metrics
from wormgait import instantaneous_power
from wormgait.energy import SPEED_FLOOR, cost_of_transport, estimate_idle_power
from wormgait.exceptions import WindowError
from wormgait.locomotion import SimTrace

EP = EnergyParams()


def _trace(x1, dt):
    n = len(x1)
    z = np.zeros(n)
    return SimTrace(np.arange(n) * dt, np.asarray(x1, dtype=float), z, z, z, z, z)


class TestEnergyParams:
    def test_defaults(self):
        assert (EP.p_idle, EP.alpha_p) == (0.82, 3.22)

    @pytest.mark.parametrize("kwargs", [{"p_idle": -0.1}, {"alpha_p": 0.9}])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ParameterError):
            EnergyParams(**kwargs)


class TestInstantaneousPower:
    @pytest.mark.parametrize("fc,rate,expected", [(10.0, 0.02, 0.82), (10.0, -0.02, 1.464), (0.0, 0.3, 0.82)])
    def test_examples(self, fc, rate, expected):
        assert instantaneous_power(fc, rate, EP) == pytest.approx(expected, abs=1e-12)

    def test_never_below_idle(self):
        rng = np.random.default_rng(0)
        p = instantaneous_power(rng.normal(0, 50, 1000), rng.normal(0, 0.1, 1000), EP)
        assert np.all(p >= EP.p_idle)

    def test_alpha_scaling(self, reference_run, reference_gait):
        sim, length = reference_run
        p1 = instantaneous_power(sim.cable_force, length.dl_dt, EP)
        p2 = instantaneous_power(sim.cable_force, length.dl_dt, EnergyParams(0.82, 6.44))
        m1 = gait_metrics(sim, p1, reference_gait, TABLE1)
        m2 = gait_metrics(sim, p2, reference_gait, TABLE1)
        assert m2.avg_power - 0.82 == pytest.approx(2 * (m1.avg_power - 0.82), rel=1e-12)


class TestAccumulateEnergy:
    def test_constant(self):
        e = accumulate_energy(np.full(10001, 0.82), 1e-3)
        assert e[0] == 0.0 and e[-1] == pytest.approx(8.2)

    def test_zero(self):
        np.testing.assert_array_equal(accumulate_energy(np.zeros(50), 0.1), 0.0)

    def test_triangle(self):
        t = np.linspace(0, 1, 101)
        assert accumulate_energy(2 * (1 - np.abs(2 * t - 1)), 0.01)[-1] == pytest.approx(1.0)

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            accumulate_energy([1.0, 2.0], 0.0)

    def test_simulated_energy_monotone(self, reference_run):
        sim, length = reference_run
        p = instantaneous_power(sim.cable_force, length.dl_dt, EP)
        e = accumulate_energy(p, length.dt)
        assert np.all(np.diff(e) >= 0)
        assert e[-1] >= EP.p_idle * sim.times[-1]


class TestGaitMetrics:
    def test_three_pitches_over_window(self):
        g = GaitParams(0.07, 0.2)
        dt = 1e-2
        t = np.arange(2501) * dt
        x1 = -np.clip(t - 10.0, 0, 15) / 15 * 3 * TABLE1.d
        m = gait_metrics(_trace(x1, dt), np.full(t.size, 0.82), g, TABLE1)
        assert m.avg_speed == pytest.approx(3 * 0.0173 / 15)
        assert m.avg_speed == pytest.approx(0.00346)
        assert m.eval_window == pytest.approx((10.0, 25.0))
        assert m.avg_power == pytest.approx(0.82)

    def test_no_headway_gives_infinite_cot(self):
        g = GaitParams(0.07, 0.2)
        m = gait_metrics(_trace(np.zeros(2501), 1e-2), np.full(2501, 1.0), g, TABLE1)
        assert m.avg_speed == 0.0 and math.isinf(m.cot) and math.isinf(m.cot_per_meter)

    def test_cot_formula(self):
        cot, per_m = cost_of_transport(1.464, 0.005, TABLE1)
        assert cot == pytest.approx(1.464 / (0.858 * 9.81 * 0.005))
        assert cot == pytest.approx(34.78, abs=0.01)
        assert per_m == pytest.approx(1.464 / 0.005)

    def test_speed_floor(self):
        assert math.isinf(cost_of_transport(1.0, SPEED_FLOOR, TABLE1)[0])

    def test_short_trace(self):
        with pytest.raises(WindowError):
            gait_metrics(_trace(np.zeros(100), 1e-2), np.ones(100), GaitParams(0.07, 0.2), TABLE1)

    def test_reference_metrics(self, reference_run, reference_gait):
        sim, length = reference_run
        p = instantaneous_power(sim.cable_force, length.dl_dt, EP)
        m = gait_metrics(sim, p, reference_gait, TABLE1)
        assert m.avg_speed > 0 and m.avg_power > EP.p_idle
        assert m.avg_power >= EP.p_idle
        i0, i1 = (int(round(w / length.dt)) for w in m.eval_window)
        v2 = -(sim.x2[i1] - sim.x2[i0]) / (sim.times[i1] - sim.times[i0])
        assert abs(v2 - m.avg_speed) < 1e-9


class TestIdlePower:
    def test_constant(self):
        assert estimate_idle_power(np.full(10, 0.82)) == pytest.approx(0.82)

    def test_ramp(self):
        assert estimate_idle_power(np.arange(1, 11)) == 5.5

    def test_ignores_tail(self):
        assert estimate_idle_power(np.r_[np.full(10, 0.8), 100.0, 100.0]) == pytest.approx(0.8)

    def test_too_short(self):
        with pytest.raises(WindowError):
            estimate_idle_power(np.ones(9))
