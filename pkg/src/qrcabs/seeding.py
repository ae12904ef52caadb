"""Deterministic per-cell RNG derivation for parallel sweeps.

Every random draw in a sweep comes from a generator spawned as
``SeedSequence(root_seed, spawn_key=(index..., purpose, ...))``, never from a
shared sequential stream, so results are independent of worker count and any
single cell can be recomputed in isolation.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "PURPOSE_COUPLING",
    "PURPOSE_TRAIN_INPUTS",
    "PURPOSE_TEST_INPUTS",
    "PURPOSE_TRAIN_SHOTS",
    "PURPOSE_TEST_SHOTS",
    "PURPOSE_THRESHOLD",
    "PURPOSE_TIMETRACE",
    "spawn_rng",
    "spawn_seed",
]

PURPOSE_COUPLING = 0
PURPOSE_TRAIN_INPUTS = 1
PURPOSE_TEST_INPUTS = 2
PURPOSE_TRAIN_SHOTS = 3
PURPOSE_TEST_SHOTS = 4
PURPOSE_THRESHOLD = 5
PURPOSE_TIMETRACE = 6


def _sequence(root_seed, key):
    return np.random.SeedSequence(int(root_seed), spawn_key=tuple(int(k) for k in key))


def spawn_rng(root_seed, *key):
    """Generator for the stream identified by ``(root_seed, *key)``."""
    return np.random.default_rng(_sequence(root_seed, key))


def spawn_seed(root_seed, *key):
    """Stable 64-bit integer seed for the same stream (for record keeping)."""
    return int(_sequence(root_seed, key).generate_state(1, np.uint64)[0])
