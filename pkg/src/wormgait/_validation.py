"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import numpy as np

from .exceptions import GridError


def check_uniform_grid(times, rtol: float = 1e-6, min_samples: int = 2) -> float:
    """Return the step of a strictly increasing uniform grid or raise GridError."""
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size < min_samples:
        raise GridError(f"time grid needs at least {min_samples} samples")
    if not np.all(np.isfinite(t)):
        raise GridError("time grid contains non-finite values")
    steps = np.diff(t)
    dt = (t[-1] - t[0]) / (t.size - 1)
    if dt <= 0 or np.any(steps <= 0):
        raise GridError("time grid must be strictly increasing")
    if np.max(np.abs(steps - dt)) > rtol * dt + 1e-12:
        raise GridError("time grid is not uniform")
    return float(dt)


def check_same_grid(a, b, rtol: float = 1e-9) -> None:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or not np.allclose(a, b, rtol=rtol, atol=1e-12):
        raise GridError("time grids do not match")


def check_finite(name: str, values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_columns(X, n_columns: int, names) -> np.ndarray:
    """Validated float copy of a 2-D sample matrix with ``n_columns`` columns."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != n_columns:
        raise ValueError(f"X must have shape (n_samples, {n_columns}) with columns {', '.join(names)}")
    check_finite("X", arr)
    return arr.copy()
