"""Sampled scalar diagnostics of a run."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .series import TrajectorySeries


@dataclass
class EnergyLedger:
    """Named scalar channels sampled at common instants.

    Channel order is the insertion order and is preserved on disk.
    ``blocks`` holds optional per-shell arrays of shape ``(n_times, n_shells)``.
    """

    times: np.ndarray
    channels: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    blocks: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.channels = {k: np.asarray(v, dtype=np.float64) for k, v in self.channels.items()}
        for name, v in self.channels.items():
            if v.shape != self.times.shape:
                raise ValueError(f"channel {name!r} has {v.size} samples for {self.times.size} times")

    def __len__(self):
        return self.times.size

    @property
    def names(self) -> list:
        return list(self.channels)

    @property
    def dt(self) -> float:
        if self.times.size < 2:
            return 0.0
        return float((self.times[-1] - self.times[0]) / (self.times.size - 1))

    def channel(self, name: str) -> np.ndarray:
        try:
            return self.channels[name]
        except KeyError:
            raise KeyError(f"missing channel {name!r}") from None

    def series(self, name: str) -> TrajectorySeries:
        return TrajectorySeries(self.times, self.channel(name))

    def require(self, *names):
        missing = [n for n in names if n not in self.channels]
        if missing:
            raise KeyError(f"missing channel(s): {', '.join(missing)}")


class LedgerRecorder:
    """Accumulates samples row by row."""

    def __init__(self, meta=None):
        self.times = []
        self.rows = {}
        self.block_rows = {}
        self.meta = dict(meta or {})

    def add(self, t: float, values: dict, blocks: dict | None = None):
        self.times.append(float(t))
        for k, v in values.items():
            self.rows.setdefault(k, []).append(float(v))
        for k, v in (blocks or {}).items():
            self.block_rows.setdefault(k, []).append(np.asarray(v, dtype=np.float64))

    def build(self) -> EnergyLedger:
        blocks = {k: np.stack(v) for k, v in self.block_rows.items()}
        return EnergyLedger(np.array(self.times), dict(self.rows), self.meta, blocks)
