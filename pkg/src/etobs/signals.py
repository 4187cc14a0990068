"""Piecewise-constant input signals with explicit breakpoints.

The simulator integrates flows with steps capped at the breakpoints, so
both construction paths (explicit segments and zero-order-held sample
series) share the same representation: the value at index ``k`` holds on
``[breakpoints[k], breakpoints[k+1])`` and the last value is held forever.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["InputSignal"]


@dataclass(frozen=True)
class InputSignal:
    breakpoints: np.ndarray  # (k,) strictly increasing times, seconds
    values: np.ndarray       # (k, m) one input vector per segment
    kind: str = "piecewise-constant"

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float).reshape(-1)
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals.reshape(-1, 1)
        if bp.size == 0:
            raise ValueError("need at least one breakpoint")
        if vals.shape[0] != bp.size:
            raise ValueError(
                f"values rows ({vals.shape[0]}) must match breakpoints ({bp.size})")
        if bp.size > 1 and not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not (np.all(np.isfinite(bp)) and np.all(np.isfinite(vals))):
            raise ValueError("signal has non-finite entries")
        if self.kind not in ("piecewise-constant", "sampled-series"):
            raise ValueError(f"unknown signal kind: {self.kind!r}")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, value) -> "InputSignal":
        """Signal holding one value for all time."""
        v = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(breakpoints=np.array([0.0]), values=v.reshape(1, -1))

    @classmethod
    def from_samples(cls, times, samples) -> "InputSignal":
        """Zero-order hold of a sampled series."""
        return cls(breakpoints=times, values=samples, kind="sampled-series")

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def value_at(self, t: float) -> np.ndarray:
        """Held value at time ``t`` (first value before the first breakpoint)."""
        idx = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return self.values[max(idx, 0)]

    def values_at(self, ts) -> np.ndarray:
        """Vectorized :meth:`value_at`; returns shape ``(len(ts), m)``."""
        idx = np.searchsorted(self.breakpoints, np.asarray(ts, dtype=float),
                              side="right") - 1
        return self.values[np.maximum(idx, 0)]

    def edges_within(self, t0: float, t1: float) -> np.ndarray:
        """Breakpoints strictly inside ``(t0, t1)``, for integration capping."""
        bp = self.breakpoints
        return bp[(bp > t0) & (bp < t1)]
