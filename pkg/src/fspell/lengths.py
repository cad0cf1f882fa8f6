"""Word-length encoding on the unit circle.

A length L in 1..30 maps to the angle 2*pi*(L/30 - 0.5) and is represented
as (sin, cos). Regression targets on the circle keep length errors bounded
and scale-free. Decoding inverts the map via atan2 and snaps to the nearest
integer length; the raw continuous value is also exposed for ranking
penalties that should not round.
"""

from __future__ import annotations

import logging
import math

import numpy as np

logger = logging.getLogger(__name__)

MAX_WORD_LEN = 30


def encode_length(length: int) -> np.ndarray:
    """(sin, cos) of the length angle; always unit-norm."""
    if not 1 <= length <= MAX_WORD_LEN:
        logger.warning("word length %d outside [1, %d]; clamping to %d",
                       length, MAX_WORD_LEN, MAX_WORD_LEN)
        length = MAX_WORD_LEN
    angle = 2.0 * math.pi * (length / MAX_WORD_LEN - 0.5)
    return np.array([math.sin(angle), math.cos(angle)], dtype=np.float64)


def continuous_length(vec) -> float:
    """Invert the circle map without rounding; result lies in (0, 30]."""
    v = np.asarray(vec, dtype=np.float64)
    if v.shape != (2,):
        raise ValueError("length vector must have exactly 2 components")
    if v[0] == 0.0 and v[1] == 0.0:
        raise ValueError("undefined angle: zero-length prediction vector")
    angle = math.atan2(v[0], v[1])
    return MAX_WORD_LEN * (angle / (2.0 * math.pi) + 0.5)


def decode_length(vec) -> int:
    """Integer length in [1, 30] whose encoding is circularly closest."""
    v = np.asarray(vec, dtype=np.float64)
    target = math.atan2(v[0], v[1]) if (v[0] != 0.0 or v[1] != 0.0) else None
    if target is None:
        raise ValueError("undefined angle: zero-length prediction vector")
    best, best_dist = 1, math.inf
    for length in range(1, MAX_WORD_LEN + 1):
        angle = 2.0 * math.pi * (length / MAX_WORD_LEN - 0.5)
        diff = abs(math.remainder(angle - target, 2.0 * math.pi))
        if diff < best_dist:
            best, best_dist = length, diff
    return best
