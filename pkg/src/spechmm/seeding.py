"""Deterministic seed derivation for experiment runs.

Every random draw in the sweep harness comes from a seed derived off the
run's base seed plus an index path, so cells are reproducible in isolation
and adding trials or grid points never perturbs existing cells.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

# Stream tags keep dataset sampling and EM initialization independent even
# when they share the same (size, trial) indices.
STREAM_DATA = 0
STREAM_EM = 1
STREAM_TEST = 2


def derive_seed(base_seed: int, *path: int) -> int:
    """Map (base_seed, index path) to a single uint64 seed.

    Uses numpy's SeedSequence spawn keys, so distinct paths give
    statistically independent streams.
    """
    if base_seed < 0:
        raise ValidationError(f"base_seed must be non-negative, got {base_seed}")
    for p in path:
        if p < 0:
            raise ValidationError(f"seed path entries must be non-negative, got {path}")
    ss = np.random.SeedSequence(base_seed, spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
