# cyclereward/services/diffusion/schedule.py
from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from cachetools import LRUCache, cached

from cyclereward.core.errors import ConfigError


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    """
    Per-step diffusion tables, 1-indexed: entry [t] belongs to timestep t and
    entry [0] is the t=0 convention (beta 0, alpha_bar 1, sigma 0).

    `timesteps[i]` is the timestep the denoiser is queried at for step i.
    It is the identity for a base schedule and the original timestep for a
    respaced one.
    """
    T: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray
    posterior_sigma: np.ndarray
    timesteps: np.ndarray

    def check_t(self, t: int) -> int:
        t = int(t)
        if not 1 <= t <= self.T:
            raise ConfigError(f"timestep {t} outside [1, {self.T}]")
        return t


def _derive(T: int, beta: np.ndarray, timesteps: np.ndarray) -> NoiseSchedule:
    alpha = 1.0 - beta
    alpha[0] = 1.0
    alpha_bar = np.cumprod(alpha)
    var = np.zeros(T + 1)
    var[1:] = (1.0 - alpha_bar[:-1]) / (1.0 - alpha_bar[1:]) * beta[1:]
    return NoiseSchedule(
        T=T,
        beta=_frozen(beta),
        alpha=_frozen(alpha),
        alpha_bar=_frozen(alpha_bar),
        posterior_sigma=_frozen(np.sqrt(var)),
        timesteps=_frozen(timesteps),
    )


@cached(LRUCache(maxsize=32), lock=threading.Lock())
def make_schedule(T: int = 100, beta_start: float = 1e-4, beta_end: float = 0.02) -> NoiseSchedule:
    """Linear beta schedule, endpoints inclusive."""
    if T < 1:
        raise ConfigError(f"T must be >= 1, got {T}")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise ConfigError(f"need 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})")
    beta = np.zeros(T + 1)
    beta[1:] = np.linspace(beta_start, beta_end, T) if T > 1 else beta_start
    return _derive(T, beta, np.arange(T + 1))


def respace(s: NoiseSchedule, k: int) -> NoiseSchedule:
    """
    k-step schedule over evenly spaced original timesteps tau_1 < ... < tau_k = T,
    with beta'_i = 1 - alpha_bar[tau_i] / alpha_bar[tau_{i-1}].
    """
    if not 1 <= k <= s.T:
        raise ConfigError(f"respace needs 1 <= k <= {s.T}, got {k}")
    if k == s.T:
        return s
    taus = np.unique(np.round(np.linspace(s.T / k, s.T, k)).astype(int))
    taus = np.concatenate([[0], taus])
    ab = s.alpha_bar[taus]
    beta = np.zeros(len(taus))
    beta[1:] = 1.0 - ab[1:] / ab[:-1]
    return _derive(len(taus) - 1, beta, taus)
