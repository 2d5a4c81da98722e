# cyclereward/core/errors.py
"""
Exception hierarchy. The CLI maps these onto exit codes:

  ConfigError, TapeBudgetError, DatasetError -> 2
  MissingArtifactError                       -> 3
  DivergenceError                            -> 4  (NumericalError included)
"""
from __future__ import annotations

from typing import Sequence


class CycleRewardError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(CycleRewardError, ValueError):
    """Invalid configuration value or argument."""


class ShapeMismatchError(CycleRewardError, ValueError):
    def __init__(self, op: str, lhs: Sequence[int], rhs: Sequence[int], detail: str = ""):
        self.op = op
        self.lhs = tuple(lhs)
        self.rhs = tuple(rhs)
        msg = f"{op}: shape mismatch {self.lhs} vs {self.rhs}"
        if detail:
            msg = f"{msg} ({detail})"
        super().__init__(msg)


class TapeError(CycleRewardError, RuntimeError):
    """Misuse of a gradient tape (non-scalar loss, consumed tape)."""


class DivergenceError(CycleRewardError, ArithmeticError):
    """Training produced a non-finite loss."""


class NumericalError(DivergenceError):
    """An op produced NaN/Inf or hit a near-zero denominator."""

    def __init__(self, op: str, detail: str):
        self.op = op
        super().__init__(f"{op}: {detail}")


class TapeBudgetError(CycleRewardError, ValueError):
    """Full-sampling fine-tuning asked to keep more denoising steps than allowed."""


class DatasetError(CycleRewardError, ValueError):
    """Malformed dataset/checkpoint file or impossible dataset request."""


class MissingArtifactError(CycleRewardError, FileNotFoundError):
    """A file referenced by the config does not exist."""
