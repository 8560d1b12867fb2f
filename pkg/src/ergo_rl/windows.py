"""Sliding transition windows and the aggregates computed from them:
discounted n-step returns, raw window sums, and the sign-aware fractional
root that estimates per-step growth from a window total."""

from __future__ import annotations

import math
from collections import deque
from typing import NamedTuple


class Transition(NamedTuple):
    state: int
    action: int
    reward: float
    next_state: int


class WindowBuffer:
    """Fixed-width window over a transition stream.

    mode 0 emits every full window, advancing one transition at a time, so
    consecutive windows overlap in N-1 entries. mode 1 emits disjoint
    windows, clearing the buffer after each emission. After T pushes mode 0
    has emitted max(0, T - N + 1) windows and mode 1 floor(T / N).
    """

    __slots__ = ("capacity", "mode", "_slots")

    def __init__(self, capacity: int, mode: int = 0):
        if capacity < 1:
            raise ValueError("capacity must be at least 1")
        if mode not in (0, 1):
            raise ValueError("mode must be 0 (overlapping) or 1 (disjoint)")
        self.capacity = int(capacity)
        self.mode = int(mode)
        self._slots: deque[Transition] = deque()

    def __len__(self) -> int:
        return len(self._slots)

    def clear(self) -> None:
        self._slots.clear()

    def push(self, transition: Transition):
        """Append one transition; return the full window when one is ready."""
        self._slots.append(transition)
        if len(self._slots) < self.capacity:
            return None
        window = tuple(self._slots)
        if self.mode == 0:
            self._slots.popleft()
        else:
            self._slots.clear()
        return window


def n_step_return(rewards, gamma: float) -> float:
    """Discounted sum over the window: sum_k gamma^k * rewards[k]."""
    if len(rewards) == 0:
        raise ValueError("rewards must be nonempty")
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie strictly inside (0, 1)")
    acc = 0.0
    weight = 1.0
    for r in rewards:
        acc += weight * float(r)
        weight *= gamma
    return acc


def window_sum(rewards, n: int) -> float:
    """Undiscounted total of exactly n rewards."""
    if len(rewards) != n:
        raise ValueError(f"expected exactly {n} rewards, got {len(rewards)}")
    acc = 0.0
    for r in rewards:
        acc += float(r)
    return acc


def mgm(window_total: float, n: int) -> float:
    """Sign-aware n-th root of a window total: sgn(x) * |x|^(1/n).

    mgm(0, n) is 0 by convention, and n == 1 returns the total unchanged.
    Magnitudes below 1e-300 short-circuit to 0 so the log-based root cannot
    underflow into a NaN.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    x = float(window_total)
    if n == 1:
        return x
    if abs(x) < 1e-300:
        return 0.0
    magnitude = math.exp(math.log(abs(x)) / n)
    return magnitude if x > 0.0 else -magnitude
