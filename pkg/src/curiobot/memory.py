"""Fixed-capacity episodic memory with probabilistic replacement.

The memory fills by appending. Once full, each arriving sample sweeps the
store: every slot is independently overwritten with a copy of the new
sample with probability p_em (creating duplicates, which tilt the store
toward recent observations). If the sweep replaces nothing, one uniformly
random slot is overwritten so new samples can always enter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .models import SensorimotorSample


@dataclass
class MemoryUpdateReport:
    replaced_indices: list = field(default_factory=list)
    was_full: bool = False
    duplicates_created: int = 0  # copies of the new sample beyond the first


class EpisodicMemory:
    """Bounded store of sensorimotor samples; capacity = batches * batch_len."""

    def __init__(self, capacity_batches: int, batch_len: int = 16):
        if capacity_batches < 0:
            raise ValueError("capacity_batches must be >= 0")
        if batch_len < 1:
            raise ValueError("batch_len must be >= 1")
        self.capacity_batches = capacity_batches
        self.batch_len = batch_len
        self.elements: list = []
        self.inserted = 0
        self.replaced = 0
        self.forced_replacements = 0

    @property
    def capacity(self) -> int:
        return self.capacity_batches * self.batch_len

    def __len__(self) -> int:
        return len(self.elements)

    def insert(self, sample: SensorimotorSample, p_em: float,
               rng: np.random.Generator) -> MemoryUpdateReport:
        if not 0.0 <= p_em <= 1.0:
            raise ValueError("p_em must be a probability")
        if self.capacity == 0:
            return MemoryUpdateReport()
        self.inserted += 1
        if len(self.elements) < self.capacity:
            self.elements.append(sample)
            return MemoryUpdateReport()
        n = len(self.elements)
        idxs = np.flatnonzero(rng.random(n) < p_em)
        forced = idxs.size == 0
        if forced:
            idxs = np.array([rng.integers(0, n)])
            self.forced_replacements += 1
        for i in idxs:
            self.elements[int(i)] = sample
        self.replaced += int(idxs.size)
        return MemoryUpdateReport([int(i) for i in idxs], True,
                                  max(int(idxs.size) - 1, 0))

    def all_samples(self) -> list:
        """Current contents in storage order."""
        return list(self.elements)

    def diversity(self) -> float:
        """Fraction of distinct elements (1.0 when empty)."""
        if not self.elements:
            return 1.0
        return len({s.key() for s in self.elements}) / len(self.elements)
