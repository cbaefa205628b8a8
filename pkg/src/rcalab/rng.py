"""Counter-based randomness built on Philox.

A stream is addressed by (seed, stream, lane, time, index): the 128-bit key
carries (seed, stream), the 256-bit counter starts at (lane << 192) |
(index << 128) | (time << 64).  Every draw is then a pure function of that
address and never depends on scheduling, batch layout, or thread count.
Replicates are grouped into fixed blocks of REPLICATE_BLOCK rows; a replicate
always reads the same row of its block's draw matrix regardless of how many
replicates run alongside it.
"""

from __future__ import annotations

import numpy as np

__all__ = ["CounterRng", "REPLICATE_BLOCK", "LANE_INIT", "LANE_NOISE", "LANE_SCHEDULE"]

REPLICATE_BLOCK = 1024

LANE_INIT = 1
LANE_NOISE = 2
LANE_SCHEDULE = 3

_MASK64 = (1 << 64) - 1


class CounterRng:
    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream = int(stream) & _MASK64

    def block(self, lane: int, t: int = 0, index: int = 0) -> np.random.Generator:
        """Fresh generator for the (lane, t, index) stream."""
        if lane < 0 or t < 0 or index < 0:
            raise ValueError("lane, t, and index must be non-negative")
        counter = (int(lane) << 192) | (int(index) << 128) | (int(t) << 64)
        return np.random.Generator(
            np.random.Philox(key=[self.seed, self.stream], counter=counter)
        )
