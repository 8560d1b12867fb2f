"""Greedy n-step Bellman backups with an optional growth-blended step
reward, plus fixed-point iteration and contraction diagnostics.

The blended per-step reward is (1 - lam) * r + (1 - gamma) * lam * growth.
lam=0 recovers the plain optimality backup; lam=1 with a constant growth
table c makes q identically c the fixed point. The n-step operator is n
exact one-step greedy backups, each taking a full expectation over the
kernel, so these routines are noise-free references for the sampled
learner.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .mdp import FiniteMdp, _check_qtable


@dataclass(frozen=True)
class OperatorConfig:
    """Backup depth and blend weight."""

    n_steps: int
    lam: float

    def __post_init__(self):
        if int(self.n_steps) < 1:
            raise ValueError("n_steps must be at least 1")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")
        object.__setattr__(self, "n_steps", int(self.n_steps))


def validate_growth_table(mdp: FiniteMdp, growth) -> np.ndarray:
    growth = np.asarray(growth, dtype=np.float64)
    if growth.shape != (mdp.n_states, mdp.n_actions):
        raise ValueError("growth table shape must match (S, A)")
    if not np.all(np.isfinite(growth)):
        raise ValueError("growth table entries must be finite")
    return growth


def step_reward_table(mdp: FiniteMdp, growth, lam: float) -> np.ndarray:
    """Per-step reward after blending: (1-lam) r + (1-gamma) lam growth."""
    growth = validate_growth_table(mdp, growth)
    return (1.0 - lam) * mdp.reward + (1.0 - mdp.gamma) * lam * growth


def standard_bellman_n(q, mdp: FiniteMdp, n_steps: int = 1) -> np.ndarray:
    """n_steps applications of the plain greedy backup
    q <- r + gamma * P @ max_a q."""
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    q = _check_qtable(q)
    if q.shape != mdp.reward.shape:
        raise ValueError("Q-table shape must match (S, A)")
    return _kernels.bellman_backup(mdp.transition, mdp.reward, mdp.gamma, q, n_steps)


def regularized_bellman_n(q, mdp: FiniteMdp, growth, cfg: OperatorConfig) -> np.ndarray:
    """n_steps greedy backups with the growth-blended step reward."""
    q = _check_qtable(q)
    if q.shape != mdp.reward.shape:
        raise ValueError("Q-table shape must match (S, A)")
    step = step_reward_table(mdp, growth, cfg.lam)
    return _kernels.bellman_backup(mdp.transition, step, mdp.gamma, q, cfg.n_steps)


def fixed_point(
    mdp: FiniteMdp,
    growth,
    cfg: OperatorConfig,
    tol: float,
    max_iter: int = 10**6,
    return_info: bool = False,
):
    """Iterate the blended backup from q = 0 until successive iterates
    differ by less than tol in infinity norm.

    The backup is a gamma^n contraction, so this terminates well inside the
    iteration cap for any sane gamma; hitting the cap raises RuntimeError.
    """
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    step = step_reward_table(mdp, growth, cfg.lam)
    q = np.zeros_like(mdp.reward)
    for iteration in range(1, max_iter + 1):
        nxt = _kernels.bellman_backup(mdp.transition, step, mdp.gamma, q, cfg.n_steps)
        diff = float(np.max(np.abs(nxt - q)))
        q = nxt
        if diff < tol:
            return (q, iteration) if return_info else q
    raise RuntimeError("fixed-point iteration hit the cap; check gamma configuration")


def contraction_ratio(mdp: FiniteMdp, growth, cfg: OperatorConfig, q1, q2) -> float:
    """||T q1 - T q2||_inf / ||q1 - q2||_inf for the blended n-step backup.

    Always at most gamma^n; the bound is attained exactly when q2 is q1
    plus a constant shift.
    """
    q1 = _check_qtable(q1)
    q2 = _check_qtable(q2)
    denom = float(np.max(np.abs(q1 - q2)))
    if denom == 0.0:
        raise ValueError("q1 and q2 must differ")
    step = step_reward_table(mdp, growth, cfg.lam)
    t1 = _kernels.bellman_backup(mdp.transition, step, mdp.gamma, q1, cfg.n_steps)
    t2 = _kernels.bellman_backup(mdp.transition, step, mdp.gamma, q2, cfg.n_steps)
    return float(np.max(np.abs(t1 - t2))) / denom
