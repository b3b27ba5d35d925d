"""Named counter-based random streams.

Every consumer of randomness (parameter init, dropout masks, condition
sampling, batch shuffling, data generation) draws from its own Philox stream
keyed by ``(seed, purpose, index)``. Turning an ablation switch on or off
therefore never shifts the random numbers seen by an unrelated purpose.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _stream_key(seed: int, purpose: str, index: int) -> int:
    digest = hashlib.sha256(f"{seed}:{purpose}:{index}".encode()).digest()
    return int.from_bytes(digest[:16], "little")


def philox(seed: int, purpose: str, index: int = 0) -> np.random.Generator:
    """Returns a fresh Philox generator for the given purpose."""
    return np.random.Generator(np.random.Philox(key=_stream_key(seed, purpose, index)))


class RngStreams:
    """Lazily created, cached generators for one seed."""

    def __init__(self, seed: int, scope: str = ""):
        self.seed = int(seed)
        self.scope = scope
        self._streams: dict[tuple[str, int], np.random.Generator] = {}

    def stream(self, purpose: str, index: int = 0) -> np.random.Generator:
        key = (purpose, index)
        if key not in self._streams:
            self._streams[key] = philox(self.seed, self.scope + purpose, index)
        return self._streams[key]

    def fresh(self, purpose: str, index: int = 0) -> np.random.Generator:
        """A new generator that does not share state with :meth:`stream`."""
        return philox(self.seed, self.scope + purpose, index)

    def scoped(self, name: str) -> RngStreams:
        """Independent streams for one fold or one training stage."""
        return RngStreams(self.seed, f"{self.scope}{name}/")
