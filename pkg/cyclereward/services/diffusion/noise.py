# cyclereward/services/diffusion/noise.py
from __future__ import annotations

from typing import Sequence

import numpy as np

_MASK64 = (1 << 64) - 1


def keyed_generator(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, stream); platform independent."""
    return np.random.Generator(np.random.Philox(key=[int(seed) & _MASK64, int(stream) & _MASK64]))


def keyed_normal(seed: int, stream: int, shape: Sequence[int]) -> np.ndarray:
    return keyed_generator(seed, stream).standard_normal(tuple(shape))
