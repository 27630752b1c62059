"""Per-path random streams.

Each path draws from its own generator derived from ``(seed, path_id, purpose)``
through ``numpy.random.SeedSequence`` spawn keys, so a path's randomness does
not depend on which batch or worker simulates it.
"""

from enum import IntEnum

import numpy as np


class StreamPurpose(IntEnum):
    """Independent sub-streams of a single path."""
    ENDPOINTS = 0
    NOISE = 1
    KERNEL = 2
    START = 3
    BRIDGE = 4


def path_rng(seed: int, path_id: int, purpose: StreamPurpose) -> np.random.Generator:
    """Generator for one path and one purpose."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(int(path_id), int(purpose)))
    return np.random.default_rng(sequence)


def stacked_normals(seed: int, path_ids: np.ndarray, size: tuple[int, ...]) -> np.ndarray:
    """Standard normals of shape ``(len(path_ids), *size)``, one stream per path."""
    out = np.empty((len(path_ids), *size))
    for row, path_id in enumerate(path_ids):
        out[row] = path_rng(seed, path_id, StreamPurpose.NOISE).standard_normal(size)
    return out


def stacked_uniforms(seed: int, path_ids: np.ndarray, size: tuple[int, ...],
                     purpose: StreamPurpose) -> np.ndarray:
    """Uniforms on [0, 1) of shape ``(len(path_ids), *size)``, one stream per path."""
    out = np.empty((len(path_ids), *size))
    for row, path_id in enumerate(path_ids):
        out[row] = path_rng(seed, path_id, purpose).random(size)
    return out
