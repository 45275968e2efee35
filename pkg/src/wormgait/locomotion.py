"""Hybrid locomotion: two-state continuous dynamics inside a groove plus
discrete anchor switching between grooves.

The engaged (stiff) side of the fin law resists positive slip, so the robot
makes headway towards negative ``x``; :data:`FORWARD` encodes that direction
for the speed metrics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from ._validation import check_same_grid, check_uniform_grid
from .actuation import ActuationParams, BodyLengthTrace, propagate_actuation
from .exceptions import GridError, LivelockError, ParameterError, ResolutionError
from .params import GaitParams, RobotParams, fin_force

FORWARD = -1.0
MAX_SWITCHES_PER_STEP = 10


@dataclass(frozen=True)
class MarginSetting:
    delta_m: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.delta_m) and self.delta_m >= 0):
            raise ParameterError(f"delta_m must be >= 0, got {self.delta_m!r}")


@dataclass(frozen=True)
class HybridState:
    x1: float = 0.0
    v1: float = 0.0
    a1: float = 0.0
    a2: float = 0.0
    t: float = 0.0


@dataclass(frozen=True)
class SwitchEvent:
    t: float
    anchor: int
    direction: int


@dataclass(frozen=True, eq=False)
class SimTrace:
    times: np.ndarray
    x1: np.ndarray
    v1: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    body_length: np.ndarray
    x1_acc: np.ndarray
    switch_events: tuple = ()
    cable_force: np.ndarray | None = field(default=None)

    @property
    def x2(self) -> np.ndarray:
        return self.x1 + self.body_length

    @property
    def n_switches(self) -> int:
        return len(self.switch_events)

    def with_cable_force(self, force) -> SimTrace:
        return SimTrace(
            self.times, self.x1, self.v1, self.a1, self.a2, self.body_length,
            self.x1_acc, self.switch_events, np.asarray(force, dtype=float),
        )


def initial_state(x1: float, length0: float, rear_offset: float = 0.0, front_offset: float = 0.0) -> HybridState:
    """Fins centered in their grooves unless offsets are given (offset = x - anchor)."""
    return HybridState(x1=x1, v1=0.0, a1=x1 - rear_offset, a2=x1 + length0 - front_offset, t=0.0)


def reduced_dynamics(state: HybridState, params: RobotParams, L: float, Ldot: float, Lddot: float):
    """Right-hand side ``(dx1/dt, dv1/dt)`` of the two-state model."""
    law = params.fin_law
    f_rear = fin_force(law, state.x1 - state.a1)
    f_front = fin_force(law, state.x1 + L - state.a2)
    acc = (
        -2.0 * params.eta * state.v1 - f_rear - f_front - params.eta * Ldot - params.m2 * Lddot
    ) / params.total_mass
    return state.v1, acc


def apply_switching(state: HybridState, L: float, params: RobotParams, margin: MarginSetting):
    """Shift anchors by whole pitches until both offsets are within ``p_sw + delta_m``.

    Returns the new state and the list of :class:`SwitchEvent` that fired.
    """
    threshold = params.p_sw + margin.delta_m
    a1, a2 = state.a1, state.a2
    events = []
    while True:
        if state.x1 - a1 > threshold:
            a1 += params.d
            events.append(SwitchEvent(state.t, 1, 1))
        elif state.x1 - a1 < -threshold:
            a1 -= params.d
            events.append(SwitchEvent(state.t, 1, -1))
        elif state.x1 + L - a2 > threshold:
            a2 += params.d
            events.append(SwitchEvent(state.t, 2, 1))
        elif state.x1 + L - a2 < -threshold:
            a2 -= params.d
            events.append(SwitchEvent(state.t, 2, -1))
        else:
            break
        if len(events) > MAX_SWITCHES_PER_STEP:
            raise LivelockError(f"more than {MAX_SWITCHES_PER_STEP} switches at t={state.t}")
    return HybridState(state.x1, state.v1, a1, a2, state.t), events


@numba.njit(cache=True, nogil=True)
def _fin(x, k_eng, k_dis, h):
    if x > h:
        return k_eng * (x - h)
    if x < -h:
        return k_dis * (x + h)
    return 0.0


@numba.njit(cache=True, nogil=True)
def _accel(x, v, a1, a2, L, Ld, Ldd, eta, m2, mtot, k_eng, k_dis, h):
    return (
        -2.0 * eta * v
        - _fin(x - a1, k_eng, k_dis, h)
        - _fin(x + L - a2, k_eng, k_dis, h)
        - eta * Ld
        - m2 * Ldd
    ) / mtot


@numba.njit(cache=True, nogil=True)
def _switch(x, L, a1, a2, threshold, pitch, k, ev_step, ev_anchor, ev_dir, n_ev):
    """Fixpoint anchor update; returns (a1, a2, n_ev, status)."""
    count = 0
    while True:
        if x - a1 > threshold:
            a1 += pitch
            anchor, direction = 1, 1
        elif x - a1 < -threshold:
            a1 -= pitch
            anchor, direction = 1, -1
        elif x + L - a2 > threshold:
            a2 += pitch
            anchor, direction = 2, 1
        elif x + L - a2 < -threshold:
            a2 -= pitch
            anchor, direction = 2, -1
        else:
            return a1, a2, n_ev, 0
        count += 1
        if count > 10:
            return a1, a2, n_ev, 1
        if n_ev >= ev_step.size:
            return a1, a2, n_ev, 2
        ev_step[n_ev] = k
        ev_anchor[n_ev] = anchor
        ev_dir[n_ev] = direction
        n_ev += 1


@numba.njit(cache=True, nogil=True)
def _integrate(L, Ld, Ldd, dt, x0, v0, a10, a20, eta, m2, mtot, k_eng, k_dis, h, threshold, pitch,
               x, v, a1s, a2s, acc, ev_step, ev_anchor, ev_dir):
    n = L.size
    n_ev = 0
    a1, a2, n_ev, status = _switch(x0, L[0], a10, a20, threshold, pitch, 0, ev_step, ev_anchor, ev_dir, n_ev)
    if status != 0:
        return n_ev, status, 0
    xk = x0
    vk = v0
    x[0] = xk
    v[0] = vk
    a1s[0] = a1
    a2s[0] = a2
    half = 0.5 * dt
    for k in range(n - 1):
        Lm = 0.5 * (L[k] + L[k + 1])
        Ldm = 0.5 * (Ld[k] + Ld[k + 1])
        Lddm = 0.5 * (Ldd[k] + Ldd[k + 1])
        q1 = _accel(xk, vk, a1, a2, L[k], Ld[k], Ldd[k], eta, m2, mtot, k_eng, k_dis, h)
        acc[k] = q1
        p1 = vk
        p2 = vk + half * q1
        q2 = _accel(xk + half * p1, p2, a1, a2, Lm, Ldm, Lddm, eta, m2, mtot, k_eng, k_dis, h)
        p3 = vk + half * q2
        q3 = _accel(xk + half * p2, p3, a1, a2, Lm, Ldm, Lddm, eta, m2, mtot, k_eng, k_dis, h)
        p4 = vk + dt * q3
        q4 = _accel(xk + dt * p3, p4, a1, a2, L[k + 1], Ld[k + 1], Ldd[k + 1], eta, m2, mtot, k_eng, k_dis, h)
        xk = xk + dt / 6.0 * (p1 + 2.0 * p2 + 2.0 * p3 + p4)
        vk = vk + dt / 6.0 * (q1 + 2.0 * q2 + 2.0 * q3 + q4)
        a1, a2, n_ev, status = _switch(xk, L[k + 1], a1, a2, threshold, pitch, k + 1,
                                       ev_step, ev_anchor, ev_dir, n_ev)
        if status != 0:
            return n_ev, status, k + 1
        x[k + 1] = xk
        v[k + 1] = vk
        a1s[k + 1] = a1
        a2s[k + 1] = a2
    acc[n - 1] = _accel(xk, vk, a1, a2, L[n - 1], Ld[n - 1], Ldd[n - 1], eta, m2, mtot, k_eng, k_dis, h)
    return n_ev, 0, n - 1


def _run(trace: BodyLengthTrace, params: RobotParams, margin: MarginSetting, init: HybridState) -> SimTrace:
    times = np.asarray(trace.times, dtype=float)
    n = times.size
    L = np.ascontiguousarray(params.l0 + trace.delta_l, dtype=float)
    Ld = np.ascontiguousarray(trace.dl_dt, dtype=float)
    Ldd = np.ascontiguousarray(trace.d2l_dt2, dtype=float)
    x = np.empty(n)
    v = np.empty(n)
    a1 = np.empty(n)
    a2 = np.empty(n)
    acc = np.empty(n)
    capacity = n + 16
    ev_step = np.empty(capacity, dtype=np.int64)
    ev_anchor = np.empty(capacity, dtype=np.int64)
    ev_dir = np.empty(capacity, dtype=np.int64)
    n_ev, status, k = _integrate(
        L, Ld, Ldd, trace.dt, init.x1, init.v1, init.a1, init.a2,
        params.eta, params.m2, params.total_mass, params.k_eng, params.k_dis, params.delta_c / 2.0,
        params.p_sw + margin.delta_m, params.d,
        x, v, a1, a2, acc, ev_step, ev_anchor, ev_dir,
    )
    if status == 1:
        raise LivelockError(f"more than {MAX_SWITCHES_PER_STEP} switches at t={times[k]}")
    if status == 2:
        raise LivelockError("switch event buffer exhausted")
    events = tuple(
        SwitchEvent(float(times[s]), int(a), int(dr))
        for s, a, dr in zip(ev_step[:n_ev], ev_anchor[:n_ev], ev_dir[:n_ev])
    )
    sim = SimTrace(times, x, v, a1, a2, L, acc, events)
    return sim.with_cable_force(recover_cable_force(sim, params, trace))


def cycle_step(gait: GaitParams, dt: float) -> float:
    """Largest step not above ``dt`` that divides the gait period evenly."""
    steps = math.ceil(gait.period / dt * (1 - 1e-12))
    return gait.period / steps


def simulate(
    gait: GaitParams,
    params: RobotParams,
    act: ActuationParams,
    margin: MarginSetting | None = None,
    n_cycles: int = 5,
    dt: float = 1e-3,
    init: HybridState | None = None,
    dl0: float = 0.0,
) -> tuple[SimTrace, BodyLengthTrace]:
    """Simulate ``n_cycles`` gait periods; returns the locomotion and body-length traces.

    The step is shortened to the nearest value dividing the gait period so that
    every cycle boundary falls on a sample.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be at least 1")
    limit = min(act.tau, gait.period) / 50.0
    if not 0 < dt <= limit * (1 + 1e-12):
        raise ResolutionError(f"time step {dt} exceeds min(tau, 1/f)/50 = {limit:.6g}")
    dt = cycle_step(gait, dt)
    length_trace = propagate_actuation(act, gait, n_cycles * gait.period, dt, dl0=dl0)
    if init is None:
        init = initial_state(0.0, params.l0 + dl0)
    return _run(length_trace, params, margin or MarginSetting(), init), length_trace


def simulate_measured(
    length_trace: BodyLengthTrace,
    params: RobotParams,
    margin: MarginSetting | None = None,
    init: HybridState | None = None,
) -> SimTrace:
    """Drive the hybrid model with a given body-length trace (e.g. from tracking)."""
    try:
        check_uniform_grid(length_trace.times)
    except GridError as exc:
        raise GridError(f"measured body length: {exc}") from None
    if init is None:
        init = initial_state(0.0, params.l0 + float(length_trace.delta_l[0]))
    return _run(length_trace, params, margin or MarginSetting(), init)


def recover_cable_force(trace: SimTrace, params: RobotParams, length_trace: BodyLengthTrace) -> np.ndarray:
    """Cable force from the rear-mass balance, using the stored model accelerations."""
    check_same_grid(trace.times, length_trace.times)
    L = params.l0 + np.asarray(length_trace.delta_l)
    return (
        params.m1 * trace.x1_acc
        + params.k_b * (params.l_free - L)
        - params.c_b * np.asarray(length_trace.dl_dt)
        + params.eta * trace.v1
        + fin_force(params.fin_law, trace.x1 - trace.a1)
    )


def front_mass_residual(trace: SimTrace, params: RobotParams, length_trace: BodyLengthTrace) -> np.ndarray:
    """Residual of the front-mass equation of the original four-state model."""
    L = params.l0 + np.asarray(length_trace.delta_l)
    Ld = np.asarray(length_trace.dl_dt)
    x2 = trace.x1 + L
    v2 = trace.v1 + Ld
    acc2 = trace.x1_acc + np.asarray(length_trace.d2l_dt2)
    fc = trace.cable_force
    return (
        params.m2 * acc2
        + fc
        + params.k_b * (x2 - trace.x1 - params.l_free)
        + params.c_b * (v2 - trace.v1)
        + params.eta * v2
        + fin_force(params.fin_law, x2 - trace.a2)
    )
