"""Working-precision settings shared by the high-precision evaluators."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import mpmath


class PrecisionError(RuntimeError):
    """Raised when the escalation cap is reached before results stabilise."""


@dataclass(frozen=True)
class PrecisionConfig:
    """Binary working precision with an escalation cap.

    Attributes
    ----------
    bits : int
        Starting precision, at least 64.
    target_tol : float
        Absolute agreement required between successive precisions.
    max_bits : int
        Escalation stops (with :class:`PrecisionError`) beyond this.
    """

    bits: int = 128
    target_tol: float = 1e-30
    max_bits: int = 1 << 15

    def __post_init__(self):
        if self.bits < 64:
            raise ValueError("bits must be at least 64")
        if not self.target_tol > 0:
            raise ValueError("target_tol must be positive")
        if self.max_bits < self.bits:
            raise ValueError("max_bits below bits")


def escalate(fn: Callable[[int], "mpmath.mpf"], cfg: PrecisionConfig, start_bits: int | None = None):
    """Evaluate ``fn(bits)`` at doubling precisions until two runs agree.

    Returns
    -------
    (value, bits)
        The higher-precision value and the precision that produced it.
    """
    bits = max(cfg.bits, start_bits or 0)
    prev = None
    while bits <= cfg.max_bits:
        with mpmath.workprec(bits):
            val = fn(bits)
        if prev is not None:
            with mpmath.workprec(bits):
                if abs(val - prev) < cfg.target_tol:
                    return val, bits
        prev = val
        bits *= 2
    raise PrecisionError(f"no agreement to {cfg.target_tol} below {cfg.max_bits} bits")
