# cyclereward/services/denoiser/embedding.py
from __future__ import annotations

import threading

import numpy as np
from cachetools import LRUCache, cached


@cached(LRUCache(maxsize=4096), lock=threading.Lock())
def timestep_embedding(t: int, dim: int = 16) -> np.ndarray:
    """
    Sinusoidal embedding of timestep t: dim/2 sines followed by dim/2
    cosines at geometrically spaced frequencies. Returned read-only.
    """
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / half)
    angles = float(t) * freqs
    emb = np.concatenate([np.sin(angles), np.cos(angles)])
    if dim % 2:
        emb = np.concatenate([emb, [0.0]])
    emb.setflags(write=False)
    return emb
