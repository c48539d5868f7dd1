"""Per-device, per-purpose random streams.

Every stream is a Philox counter-based generator keyed by the run seed, a
purpose code and the device id. Draws for one purpose never shift the draws of
another, and the streams do not depend on the order devices are processed in.
"""

from __future__ import annotations

import numpy as np

PLACEMENT = 0
DESTINATION = 1
RESPONSE = 2


def stream(seed: int, purpose: int, device: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(purpose, device))
    return np.random.Generator(np.random.Philox(ss))


class Streams:
    """Lazily created generators for a single run."""

    def __init__(self, seed: int):
        self.seed = seed
        self._cache: dict[tuple[int, int], np.random.Generator] = {}

    def get(self, purpose: int, device: int) -> np.random.Generator:
        key = (purpose, device)
        gen = self._cache.get(key)
        if gen is None:
            gen = self._cache[key] = stream(self.seed, purpose, device)
        return gen

    def placement(self, device: int) -> np.random.Generator:
        return self.get(PLACEMENT, device)

    def destination(self, device: int) -> np.random.Generator:
        return self.get(DESTINATION, device)

    def response(self, device: int) -> np.random.Generator:
        return self.get(RESPONSE, device)
