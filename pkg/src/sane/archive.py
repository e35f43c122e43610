"""Evaluated samples in acquisition order."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Sample:
    """One evaluated location.

    ``internal`` is the value in maximization space (negated raw value for
    minimization problems). ``iteration`` is 0 for the initial design.
    """

    index: int
    candidate: int
    location: tuple[float, ...]
    norm: tuple[float, ...]
    raw: float
    internal: float
    iteration: int


class Archive:
    """Append-only, duplicate-free history of evaluated samples."""

    def __init__(self, samples=()):
        self._samples: list[Sample] = []
        self._candidates: set[int] = set()
        for s in samples:
            self.append(s)

    def append(self, sample: Sample) -> None:
        if sample.candidate in self._candidates:
            raise ValueError(f"candidate {sample.candidate} was already evaluated")
        if sample.index != len(self._samples):
            raise ValueError("sample index must equal its archive position")
        self._samples.append(sample)
        self._candidates.add(sample.candidate)

    def __len__(self):
        return len(self._samples)

    def __getitem__(self, i) -> Sample:
        return self._samples[i]

    def __iter__(self):
        return iter(self._samples)

    def __contains__(self, candidate: int) -> bool:
        return candidate in self._candidates

    def norms(self) -> np.ndarray:
        return np.array([s.norm for s in self._samples], dtype=float)

    def internal(self) -> np.ndarray:
        return np.array([s.internal for s in self._samples], dtype=float)

    def best(self) -> Sample:
        """Highest internal value; earliest on ties."""
        return max(self._samples, key=lambda s: (s.internal, -s.index))
