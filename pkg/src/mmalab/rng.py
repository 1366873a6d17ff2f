"""Counter-based random streams: one root seed, independent per-path substreams.

A stream is addressed by ``(seed, path, component)``; the component index is
fixed per draw type so adding a component never perturbs existing draws.
"""

from __future__ import annotations

import numpy as np

COMPONENTS = ("count", "s", "x", "z", "gaussian", "past_count", "past_w", "past_x", "past_z")


def stream(seed: int, path: int, component: str) -> np.random.Generator:
    """Philox generator for one ``(path, component)`` cell of a root seed."""
    if seed is None:
        raise ValueError("a seed is mandatory for stochastic runs")
    comp = COMPONENTS.index(component)
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(path), comp))
    return np.random.Generator(np.random.Philox(ss))


class PathStreams:
    """Lazily created substreams for a single path."""

    def __init__(self, seed: int, path: int):
        self.seed, self.path = int(seed), int(path)
        self._cache: dict[str, np.random.Generator] = {}

    def __getitem__(self, component: str) -> np.random.Generator:
        if component not in self._cache:
            self._cache[component] = stream(self.seed, self.path, component)
        return self._cache[component]
