import numpy as np
import pytest

from wormgait import (
    FORWARD, TABLE1, ActuationParams, BodyLengthTrace, GaitParams, LivelockError, MarginSetting, ParameterError,
    SimTrace, simulate, simulate_measured,
)
from wormgait.exceptions import GridError, ResolutionError
from wormgait.locomotion import (
    HybridState, apply_switching, cycle_step, front_mass_residual, initial_state, recover_cable_force,
    reduced_dynamics,
)

ACT = ActuationParams()
L0 = TABLE1.l_free


def _static_trace(n=200, dt=1e-3, delta=0.0):
    t = np.arange(n) * dt
    return BodyLengthTrace(t, np.full(n, delta), np.zeros(n), np.zeros(n))


class TestReducedDynamics:
    def test_equilibrium(self):
        s = HybridState(x1=0.0, v1=0.0, a1=0.0, a2=L0)
        assert reduced_dynamics(s, TABLE1, L0, 0.0, 0.0) == (0.0, 0.0)

    def test_body_acceleration_term(self):
        s = HybridState(x1=0.0, v1=0.0, a1=0.0, a2=L0)
        _, acc = reduced_dynamics(s, TABLE1, L0, 0.0, 0.1)
        assert acc == pytest.approx(-0.429 * 0.1 / 0.858)
        assert acc == pytest.approx(-0.05)

    def test_viscous_term(self):
        s = HybridState(x1=0.0, v1=0.01, a1=0.0, a2=L0)
        _, acc = reduced_dynamics(s, TABLE1, L0, 0.0, 0.0)
        assert acc == pytest.approx(-2 * 86.97 * 0.01 / 0.858)
        assert acc == pytest.approx(-2.0273, abs=1e-4)

    def test_fin_terms(self):
        s = HybridState(x1=0.010, v1=0.0, a1=0.0, a2=L0 + 0.020)
        _, acc = reduced_dynamics(s, TABLE1, L0, 0.0, 0.0)
        expected = -(TABLE1.fin_law(0.010) + TABLE1.fin_law(-0.010)) / 0.858
        assert acc == pytest.approx(expected)


class TestApplySwitching:
    def _state(self, offset):
        return HybridState(x1=offset, v1=0.0, a1=0.0, a2=offset + L0)

    def test_rear_advances_one_pitch(self):
        state, events = apply_switching(self._state(0.018), L0, TABLE1, MarginSetting())
        assert state.a1 == pytest.approx(0.0173)
        assert state.x1 - state.a1 == pytest.approx(0.0007)
        assert [(e.anchor, e.direction) for e in events] == [(1, 1)]

    def test_below_threshold_unchanged(self):
        state, events = apply_switching(self._state(0.017), L0, TABLE1, MarginSetting())
        assert state.a1 == 0.0 and events == []

    def test_margin_suppresses_switch(self):
        state, events = apply_switching(self._state(0.018), L0, TABLE1, MarginSetting(0.0034))
        assert state.a1 == 0.0 and events == []

    def test_backward_and_front_anchor(self):
        s = HybridState(x1=-0.018, v1=0.0, a1=0.0, a2=L0 - 0.018 + 0.019)
        state, events = apply_switching(s, L0, TABLE1, MarginSetting())
        assert state.a1 == pytest.approx(-0.0173)
        assert state.a2 == pytest.approx(L0 - 0.018 + 0.019 - 0.0173)
        assert sorted((e.anchor, e.direction) for e in events) == [(1, -1), (2, -1)]

    def test_livelock_guard(self):
        fine_pitch = TABLE1.replace(d=0.001)
        with pytest.raises(LivelockError):
            apply_switching(self._state(0.03), L0, fine_pitch, MarginSetting())

    def test_margin_rejects_negative(self):
        with pytest.raises(ParameterError):
            MarginSetting(-0.001)


class TestSimulate:
    def test_reference_moves_forward_with_both_anchors(self, reference_run):
        sim, _ = reference_run
        assert FORWARD * (sim.x1[-1] - sim.x1[0]) > 5 * TABLE1.d * 0.9
        assert {e.anchor for e in sim.switch_events} == {1, 2}

    def test_constraint_exact(self, reference_run):
        sim, length = reference_run
        np.testing.assert_array_equal(sim.x2, sim.x1 + sim.body_length)
        assert np.max(np.abs(sim.x2 - sim.x1 - sim.body_length)) <= 1e-15
        np.testing.assert_array_equal(sim.body_length, TABLE1.l0 + length.delta_l)

    def test_anchor_lattice(self, reference_run):
        sim, _ = reference_run
        for a in (sim.a1, sim.a2):
            steps = (a - a[0]) / TABLE1.d
            np.testing.assert_allclose(steps, np.round(steps), atol=1e-9)

    def test_events_match_anchor_jumps(self, reference_run):
        sim, _ = reference_run
        jumps = np.count_nonzero(np.diff(sim.a1)) + np.count_nonzero(np.diff(sim.a2))
        assert jumps == sim.n_switches
        for e in sim.switch_events:
            k = int(np.searchsorted(sim.times, e.t))
            a = sim.a1 if e.anchor == 1 else sim.a2
            assert a[k] - a[k - 1] == pytest.approx(e.direction * TABLE1.d)

    def test_offsets_within_threshold(self, reference_run):
        sim, _ = reference_run
        assert np.max(np.abs(sim.x1 - sim.a1)) <= TABLE1.p_sw
        assert np.max(np.abs(sim.x2 - sim.a2)) <= TABLE1.p_sw

    def test_nominal_margin_matches_default(self, reference_gait, reference_run):
        sim0, _ = simulate(reference_gait, TABLE1, ACT)
        np.testing.assert_array_equal(sim0.x1, reference_run[0].x1)

    def test_switch_count_nonincreasing_in_margin(self, reference_gait):
        counts = [simulate(reference_gait, TABLE1, ACT, MarginSetting(dm))[0].n_switches
                  for dm in (0.0, 0.001, 0.002, 0.003, 0.004, 0.005)]
        assert all(a >= b for a, b in zip(counts, counts[1:])), counts

    def test_front_mass_residual(self, reference_run):
        sim, length = reference_run
        res = front_mass_residual(sim, TABLE1, length)
        assert np.max(np.abs(res)) <= 1e-6 * max(1.0, np.max(np.abs(sim.cable_force)))

    def test_step_halving(self, reference_gait, reference_run):
        fine, _ = simulate(reference_gait, TABLE1, ACT, dt=5e-4)
        assert abs(fine.x1[-1] - reference_run[0].x1[-1]) < 1e-5

    def test_small_stroke_does_not_move(self):
        sim, _ = simulate(GaitParams(0.005, 0.2), TABLE1, ACT)
        assert sim.n_switches == 0
        period = int(round(5.0 / (sim.times[1] - sim.times[0])))
        assert abs(sim.x1[-1] - sim.x1[-1 - period]) < 1e-9

    def test_huge_margin_is_periodic(self):
        sim, _ = simulate(GaitParams(0.07, 0.2), TABLE1, ACT, MarginSetting(1.0))
        assert sim.n_switches == 0
        assert np.all(sim.a1 == sim.a1[0])
        period = int(round(5.0 / (sim.times[1] - sim.times[0])))
        assert abs(sim.x1[-1] - sim.x1[-1 - period]) < 1e-5

    def test_resolution_guard(self):
        with pytest.raises(ResolutionError):
            simulate(GaitParams(0.07, 0.4), TABLE1, ACT, dt=0.1)

    def test_livelock_in_kernel(self):
        with pytest.raises(LivelockError):
            simulate(GaitParams(0.07, 0.2), TABLE1.replace(d=0.001), ACT,
                     init=initial_state(0.0, L0, rear_offset=0.03))

    def test_cycle_step_divides_period(self):
        g = GaitParams(0.05, 0.3)
        dt = cycle_step(g, 1e-3)
        assert dt <= 1e-3
        assert g.period / dt == pytest.approx(round(g.period / dt), abs=1e-9)

    def test_initial_state_offsets(self):
        s = initial_state(0.1, 0.3, rear_offset=0.002, front_offset=-0.001)
        assert (s.a1, s.a2) == pytest.approx((0.098, 0.401))


class TestSimulateMeasured:
    def test_constant_length_is_equilibrium(self):
        sim = simulate_measured(_static_trace(), TABLE1)
        np.testing.assert_array_equal(sim.x1, 0.0)
        assert sim.n_switches == 0

    def test_matches_simulate(self, reference_gait, reference_run):
        sim, length = reference_run
        again = simulate_measured(length, TABLE1, MarginSetting(), initial_state(0.0, TABLE1.l0))
        assert np.max(np.abs(again.x1 - sim.x1)) < 1e-9

    def test_rejects_nonuniform_grid(self):
        t = np.array([0.0, 0.001, 0.003, 0.004])
        trace = BodyLengthTrace(t, np.zeros(4), np.zeros(4), np.zeros(4))
        with pytest.raises(GridError):
            simulate_measured(trace, TABLE1)


class TestCableForce:
    def _trace(self, x1, L, n=3):
        t = np.arange(n) * 1e-3
        z = np.zeros(n)
        return SimTrace(t, np.full(n, x1), z, np.full(n, x1), np.full(n, x1 + L), np.full(n, L), z)

    def test_static_equilibrium(self):
        f = recover_cable_force(self._trace(0.0, L0), TABLE1, _static_trace(3))
        np.testing.assert_array_equal(f, 0.0)

    def test_spring_term(self):
        f = recover_cable_force(self._trace(0.0, L0 - 0.01), TABLE1, _static_trace(3, delta=-0.01))
        np.testing.assert_allclose(f, 9.688)

    def test_grid_mismatch(self):
        with pytest.raises(GridError):
            recover_cable_force(self._trace(0.0, L0), TABLE1, _static_trace(4))

    def test_reference_force_matches_recovery(self, reference_run):
        sim, length = reference_run
        np.testing.assert_array_equal(sim.cable_force, recover_cable_force(sim, TABLE1, length))
