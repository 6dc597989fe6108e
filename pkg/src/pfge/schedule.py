"""Cyclical (sawtooth) learning-rate schedule and training-budget validation.

Within each cycle of length ``c`` the rate descends linearly from near
``alpha1`` down to exactly ``alpha2`` at the cycle's last iteration, then
jumps back up. Snapshots are always collected at iterations ``i`` with
``i % c == 0``, which by construction is where the rate bottoms out at
``alpha2``. The budget structure is ``c | P | n``: the recording period ``P``
must be a multiple of the cycle length, and the total iteration count ``n``
a multiple of ``P`` (or of ``c`` when no recording period applies).
"""

from dataclasses import dataclass
from typing import Optional

from .errors import ConfigurationError, InvalidArgumentError


@dataclass(frozen=True)
class LrSchedule:
    """Triangle-wave bounds and period: alpha1 > alpha2 > 0, cycle_len >= 2."""

    alpha1: float
    alpha2: float
    cycle_len: int

    def __post_init__(self):
        if not (self.alpha1 > self.alpha2 > 0.0):
            raise ConfigurationError(
                f"need alpha1 > alpha2 > 0, got alpha1={self.alpha1}, alpha2={self.alpha2}"
            )
        if self.cycle_len < 2:
            raise ConfigurationError(f"cycle_len must be >= 2, got {self.cycle_len}")


@dataclass(frozen=True)
class BudgetSpec:
    """Total iteration budget, optionally with a model-recording period."""

    total_iters: int
    record_period: Optional[int] = None

    def __post_init__(self):
        if self.total_iters < 1:
            raise ConfigurationError(f"total_iters must be positive, got {self.total_iters}")
        if self.record_period is not None and self.record_period < 1:
            raise ConfigurationError(
                f"record_period must be positive, got {self.record_period}"
            )


def lr_at(sched: LrSchedule, i: int) -> float:
    """Learning rate at iteration i (1-based).

    Piecewise linear within each cycle: with phase ``t = ((i-1) % c + 1) / c``
    the rate is ``alpha1 + (alpha2 - alpha1) * t``, so it equals alpha2
    exactly whenever ``i % c == 0`` and resets to near alpha1 at the next
    cycle's first iteration.
    """
    if i < 1:
        raise InvalidArgumentError(f"iteration index must be >= 1, got {i}")
    c = sched.cycle_len
    t = ((i - 1) % c + 1) / c
    # Convex form so the floor is hit exactly at t == 1.
    return sched.alpha1 * (1.0 - t) + sched.alpha2 * t


def validate_budget(sched: LrSchedule, budget: BudgetSpec) -> BudgetSpec:
    """Check the c | P | n divisibility structure; return the budget unchanged.

    Raises ConfigurationError naming the violated constraint.
    """
    c = sched.cycle_len
    n = budget.total_iters
    P = budget.record_period
    if P is not None:
        if P % c != 0:
            raise ConfigurationError(
                f"record_period must be a multiple of cycle_len: {P} % {c} != 0"
            )
        if n % P != 0:
            raise ConfigurationError(
                f"total_iters must be a multiple of record_period: {n} % {P} != 0"
            )
    elif n % c != 0:
        raise ConfigurationError(
            f"total_iters must be a multiple of cycle_len: {n} % {c} != 0"
        )
    return budget
