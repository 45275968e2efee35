"""Slack-aware actuation: commanded length change to realized body-length change.

The commanded input is clipped one-sidedly at the slack preload level and
then passed through first-order linear dynamics
``tau * dL/dt + dL = K * u_eff``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import lfilter

from ._validation import check_uniform_grid
from .exceptions import ParameterError, ResolutionError
from .params import GaitParams, commanded_gait, commanded_gait_rate


@dataclass(frozen=True)
class ActuationParams:
    delta_s: float = 0.008
    gain_k: float = 0.860
    tau: float = 0.155

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"{f.name} must be strictly positive, got {value!r}")
        if self.gain_k > 1.5:
            raise ParameterError(f"gain_k={self.gain_k} exceeds the 1.5 sanity bound")

    @property
    def preload(self) -> float:
        """Equilibrium length change while the slack clip is active."""
        return -self.gain_k * self.delta_s


@dataclass(frozen=True, eq=False)
class BodyLengthTrace:
    """Realized length change and its first two time derivatives on a uniform grid."""

    times: np.ndarray
    delta_l: np.ndarray
    dl_dt: np.ndarray
    d2l_dt2: np.ndarray

    def __post_init__(self):
        n = len(self.times)
        for name in ("delta_l", "dl_dt", "d2l_dt2"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length differs from times")
        for f in fields(self):
            getattr(self, f.name).setflags(write=False)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def __len__(self) -> int:
        return len(self.times)

    def length(self, l0: float) -> np.ndarray:
        return l0 + self.delta_l

    @classmethod
    def from_measurement(cls, times, length, l0: float | None = None, window: int = 5):
        """Build a trace from sampled body length by smoothing and central differencing.

        ``length`` is the absolute body length; ``l0`` defaults to its first sample.
        The smoothing window is a centered moving average and must be odd.
        """
        t = np.asarray(times, dtype=float)
        dt = check_uniform_grid(t, min_samples=3)
        length = np.asarray(length, dtype=float)
        if length.shape != t.shape:
            raise ValueError("length and times differ in size")
        if window < 1 or window % 2 == 0:
            raise ValueError(f"smoothing window must be a positive odd integer, got {window}")
        if l0 is None:
            l0 = float(length[0])
        smooth = uniform_filter1d(length, size=window, mode="nearest") if window > 1 else length
        rate = np.gradient(smooth, dt, edge_order=2)
        accel = np.empty_like(smooth)
        accel[1:-1] = (smooth[2:] - 2.0 * smooth[1:-1] + smooth[:-2]) / dt**2
        accel[0] = accel[1]
        accel[-1] = accel[-2]
        # delta_l keeps the raw samples; only the derivatives see the smoothing.
        return cls(t, length - l0, rate, accel)


def slack_clip(u_cmd, delta_s: float):
    """Effective input ``min(u_cmd, -delta_s)``."""
    if delta_s <= 0:
        raise ParameterError("delta_s must be positive")
    out = np.minimum(u_cmd, -delta_s)
    return float(out) if np.ndim(out) == 0 else out


def _check_resolution(dt: float, tau: float) -> None:
    if not dt > 0:
        raise ResolutionError(f"time step must be positive, got {dt}")
    if dt > tau / 10.0 * (1 + 1e-12):
        raise ResolutionError(f"time step {dt} exceeds tau/10 = {tau / 10.0}")


def first_order_response(u_eff, dt: float, gain_k: float, tau: float, dl0: float = 0.0) -> np.ndarray:
    """Exact discretization of ``tau*y' + y = K*u`` for ``u`` linear between samples."""
    u = np.asarray(u_eff, dtype=float)
    decay = math.exp(-dt / tau)
    r = tau / dt * (1.0 - decay)
    c_next = gain_k * (1.0 - r)
    c_prev = gain_k * (r - decay)
    y = np.empty_like(u)
    y[0] = dl0
    if u.size > 1:
        # y[k+1] = decay*y[k] + c_next*u[k+1] + c_prev*u[k]
        drive = c_next * u[1:] + c_prev * u[:-1]
        y[1:], _ = lfilter([1.0], [1.0, -decay], drive, zi=[decay * dl0])
    return y


def clipped_input(params: ActuationParams, gait: GaitParams, times):
    """Effective input and its one-sided rate on the branch active at ``t+``."""
    u_cmd = commanded_gait(gait, times)
    du_cmd = commanded_gait_rate(gait, times)
    passing = (u_cmd < -params.delta_s) | ((u_cmd == -params.delta_s) & (du_cmd < 0))
    u_eff = np.where(passing, u_cmd, -params.delta_s)
    du_eff = np.where(passing, du_cmd, 0.0)
    return u_eff, du_eff


def response_from_input(params: ActuationParams, times, u_eff, du_eff, dl0: float = 0.0) -> BodyLengthTrace:
    times = np.asarray(times, dtype=float)
    dt = check_uniform_grid(times)
    _check_resolution(dt, params.tau)
    dl = first_order_response(u_eff, dt, params.gain_k, params.tau, dl0)
    rate = (params.gain_k * u_eff - dl) / params.tau
    accel = (params.gain_k * du_eff - rate) / params.tau
    return BodyLengthTrace(times, dl, rate, accel)


def time_grid(t_end: float, dt: float) -> np.ndarray:
    n = int(round(t_end / dt))
    if n < 1:
        raise ResolutionError(f"t_end={t_end} shorter than one step dt={dt}")
    return np.arange(n + 1) * dt


def propagate_actuation(
    params: ActuationParams,
    gait: GaitParams,
    t_end: float,
    dt: float,
    dl0: float = 0.0,
) -> BodyLengthTrace:
    """Realized body-length change for a sinusoidal gait over ``[0, t_end]``."""
    _check_resolution(dt, params.tau)
    times = time_grid(t_end, dt)
    u_eff, du_eff = clipped_input(params, gait, times)
    return response_from_input(params, times, u_eff, du_eff, dl0)
