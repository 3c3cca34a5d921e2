"""Observed trajectories for ODE fitting: times, states, train/test split.

CSV layout is one time column followed by one column per state, e.g.
``t,b,c`` for predator-prey or ``t,x,v`` for oscillators. The split is a
time threshold: rows at or before `train_end` are training data, later
rows are the held-out extrapolation horizon.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = ["ODEDataset"]


@dataclass(frozen=True)
class ODEDataset:
    times: np.ndarray  # [N], strictly increasing
    states: np.ndarray  # [N, n_states]
    state_names: tuple[str, ...]
    train_end: float  # rows with t <= train_end are training rows
    flags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        y = np.asarray(self.states, dtype=float)
        if t.ndim != 1 or y.ndim != 2 or y.shape[0] != len(t):
            raise ValueError("times must be [N], states [N, n_states]")
        if y.shape[1] != len(self.state_names):
            raise ValueError("states width must match state_names")
        if len(t) < 2 or np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing, N >= 2")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", y)

    @property
    def train_mask(self) -> np.ndarray:
        return self.times <= self.train_end + 1e-12

    @property
    def train_times(self) -> np.ndarray:
        return self.times[self.train_mask]

    @property
    def train_states(self) -> np.ndarray:
        return self.states[self.train_mask]

    @property
    def test_times(self) -> np.ndarray:
        return self.times[~self.train_mask]

    @property
    def test_states(self) -> np.ndarray:
        return self.states[~self.train_mask]

    def with_flag(self, flag: str) -> "ODEDataset":
        if flag in self.flags:
            return self
        return replace(self, flags=self.flags + (flag,))

    # -- CSV round trip ------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", *self.state_names])
        for t, row in zip(self.times, self.states):
            writer.writerow([repr(float(t)), *[repr(float(v)) for v in row]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, train_end: float) -> "ODEDataset":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][0] != "t":
            raise ValueError("first CSV column must be 't'")
        names = tuple(rows[0][1:])
        data = np.array([[float(v) for v in r] for r in rows[1:] if r])
        return cls(
            times=data[:, 0],
            states=data[:, 1:],
            state_names=names,
            train_end=train_end,
        )
