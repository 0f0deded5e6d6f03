"""Observation encoding into the 2-channel policy input.

Channel 0 holds static obstacles (1.0) and the agent's own planned path
restricted to the window (0.5); channel 1 holds observed agents (1.0),
including the observer at the centre. The lite network consumes a centre
crop of the encoded window.
"""

from typing import Optional

import numpy as np

from .env import Observation
from .planning import Path

OBSTACLE = 1.0
PATH = 0.5


def encode_observation(obs: Observation, path: Optional[Path]) -> np.ndarray:
    """(2, m, m) float32 tensor; values in {0.0, 0.5, 1.0}."""
    m = obs.obstacles.shape[0]
    radius = m // 2
    enc = np.zeros((2, m, m), dtype=np.float32)
    enc[0][obs.obstacles] = OBSTACLE
    if path is not None:
        cr, cc = obs.center
        for r, c in path.cells:
            wr, wc = r - cr + radius, c - cc + radius
            if 0 <= wr < m and 0 <= wc < m:
                assert enc[0, wr, wc] != OBSTACLE, "path crosses an obstacle"
                enc[0, wr, wc] = PATH
    enc[1][obs.agents] = 1.0
    return enc


def center_crop(encoded: np.ndarray, size: int) -> np.ndarray:
    """Crop the spatial dims of a (2, m, m) encoding to (2, size, size)."""
    m = encoded.shape[-1]
    if size > m:
        raise ValueError(f"cannot crop {m} to {size}")
    lo = (m - size) // 2
    return np.ascontiguousarray(encoded[:, lo:lo + size, lo:lo + size])
