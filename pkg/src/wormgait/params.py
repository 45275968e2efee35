"""Physical parameters, the commanded gait and the fin-groove interaction law."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Union

import numpy as np

from .exceptions import ParameterError

ArrayLike = Union[float, np.ndarray]

# Admissible gait box: stroke in m, frequency in Hz.
S_BOUNDS = (0.01, 0.09)
F_BOUNDS = (0.08, 0.4)


@dataclass(frozen=True)
class RobotParams:
    """Lumped two-mass robot in a corrugated pipe (SI units).

    ``l0`` is the initial body length and defaults to ``l_free`` (no preload).
    """

    m1: float = 0.429
    m2: float = 0.429
    l_free: float = 0.30
    l0: float = None  # type: ignore[assignment]
    k_b: float = 968.8
    c_b: float = 862.4
    eta: float = 86.97
    d: float = 0.0173
    k_eng: float = 1833.1
    k_dis: float = 442.0
    p_sw: float = 0.0175
    delta_c: float = 0.00753

    def __post_init__(self):
        if self.l0 is None:
            object.__setattr__(self, "l0", self.l_free)
        for f in fields(self):
            value = getattr(self, f.name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"{f.name} must be strictly positive, got {value!r}")
        if not self.k_eng > self.k_dis:
            raise ParameterError("k_eng must exceed k_dis (anisotropy)")
        if not self.delta_c / 2 < self.p_sw:
            raise ParameterError("p_sw must exceed half the clearance delta_c/2")

    @property
    def total_mass(self) -> float:
        return self.m1 + self.m2

    @property
    def fin_law(self) -> FinForceLaw:
        return FinForceLaw(self.k_eng, self.k_dis, self.delta_c)

    def replace(self, **changes) -> RobotParams:
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        if "l_free" in changes and "l0" not in changes and self.l0 == self.l_free:
            values["l0"] = None
        values.update(changes)
        return RobotParams(**values)


@dataclass(frozen=True)
class GaitParams:
    """Sinusoidal gait: contraction stroke ``stroke_s`` (m), frequency ``freq_f`` (Hz)."""

    stroke_s: float
    freq_f: float

    def __post_init__(self):
        for name in ("stroke_s", "freq_f"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be strictly positive, got {value!r}")

    @property
    def period(self) -> float:
        return 1.0 / self.freq_f

    def check_bounds(self, s_bounds=S_BOUNDS, f_bounds=F_BOUNDS) -> GaitParams:
        """Raise :class:`ParameterError` naming the violated bound."""
        s_min, s_max = s_bounds
        f_min, f_max = f_bounds
        if self.stroke_s < s_min:
            raise ParameterError(f"stroke S={self.stroke_s} below s_min={s_min}")
        if self.stroke_s > s_max:
            raise ParameterError(f"stroke S={self.stroke_s} above s_max={s_max}")
        if self.freq_f < f_min:
            raise ParameterError(f"frequency f={self.freq_f} below f_min={f_min}")
        if self.freq_f > f_max:
            raise ParameterError(f"frequency f={self.freq_f} above f_max={f_max}")
        return self


@dataclass(frozen=True)
class FinForceLaw:
    """Clearance-aware piecewise linear fin force.

    Positive relative displacement loads the stiff (engaged) side, negative
    displacement the compliant (disengaged) side; the band of width
    ``delta_c`` around the anchor carries no force.
    """

    k_eng: float
    k_dis: float
    delta_c: float
    half_gap: float = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "half_gap", self.delta_c / 2.0)

    def __call__(self, x: ArrayLike) -> ArrayLike:
        return fin_force(self, x)


def fin_force(law: FinForceLaw, x: ArrayLike) -> ArrayLike:
    h = law.half_gap
    if np.ndim(x) == 0:
        x = float(x)
        if x > h:
            return law.k_eng * (x - h)
        if x < -h:
            return law.k_dis * (x + h)
        return 0.0
    x = np.asarray(x, dtype=float)
    return np.where(x > h, law.k_eng * (x - h), np.where(x < -h, law.k_dis * (x + h), 0.0))


def commanded_gait(gait: GaitParams, t: ArrayLike) -> ArrayLike:
    """Commanded length change, ``-(S/2)(1 - cos 2 pi f t)``; zero at ``t = 0``, trough ``-S``."""
    phase = 2.0 * np.pi * gait.freq_f * np.asarray(t, dtype=float)
    out = -0.5 * gait.stroke_s * (1.0 - np.cos(phase))
    return float(out) if np.ndim(out) == 0 else out


def commanded_gait_rate(gait: GaitParams, t: ArrayLike) -> ArrayLike:
    w = 2.0 * np.pi * gait.freq_f
    out = -0.5 * gait.stroke_s * w * np.sin(w * np.asarray(t, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


TABLE1 = RobotParams()
