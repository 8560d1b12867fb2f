"""Growth-regularized multi-step Q-learning on a sliding window.

Each emitted window of N transitions contributes one tabular update for the
window's first (state, action) pair:

    target = (1 - lam) * delta_N + lam * (1 - gamma^N) * G_hat
             + gamma^N * max_a q(s_N, a)
    q(s0, a0) <- (1 - alpha) * q(s0, a0) + alpha * target

where delta_N is the discounted window return, G_hat the sign-aware N-th
root of the window's reward total, and s_N the state reached after the
window. The greedy policy is refreshed after every update. With lam=0 and
overlapping windows this is exactly plain multi-step Q-learning.

The bootstrap is discounted by gamma^N and read at the state after the
window, matching the undiscounted-to-discounted bookkeeping of the n-step
return; episode boundaries clear the window so no window ever mixes two
wealth paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .windows import Transition, WindowBuffer, mgm, n_step_return, window_sum


@dataclass(frozen=True)
class LearnerConfig:
    """Hyperparameters for one training run.

    mode_e selects window progression: 0 overlapping (stride 1), 1 disjoint
    (stride N). Exploration is epsilon-greedy with a linear decay from
    epsilon_start to epsilon_end over epsilon_decay_steps. With
    alpha_visit_decay the effective step size for an update is
    alpha / (number of updates so far at that (s, a)), i.e. running means
    when alpha is 1.
    """

    lam: float
    gamma: float
    alpha: float
    n_steps: int
    mode_e: int = 0
    total_steps: int = 10_000
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int = 5_000
    seed: int = 0
    alpha_visit_decay: bool = False

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie strictly inside (0, 1)")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if int(self.n_steps) < 1:
            raise ValueError("n_steps must be at least 1")
        if self.mode_e not in (0, 1):
            raise ValueError("mode_e must be 0 or 1")
        if int(self.total_steps) < 1:
            raise ValueError("total_steps must be at least 1")
        for name in ("epsilon_start", "epsilon_end"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.epsilon_start < self.epsilon_end:
            raise ValueError("epsilon_start must be at least epsilon_end")
        if int(self.epsilon_decay_steps) < 1:
            raise ValueError("epsilon_decay_steps must be at least 1")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "total_steps", int(self.total_steps))
        object.__setattr__(self, "epsilon_decay_steps", int(self.epsilon_decay_steps))
        object.__setattr__(self, "seed", int(self.seed))

    @classmethod
    def from_dict(cls, payload: dict, seed: int | None = None) -> "LearnerConfig":
        """Build from a JSON-style mapping; the blend weight key is 'lambda'."""
        known = {
            "lambda": "lam", "gamma": "gamma", "alpha": "alpha",
            "n_steps": "n_steps", "mode_e": "mode_e", "total_steps": "total_steps",
            "epsilon_start": "epsilon_start", "epsilon_end": "epsilon_end",
            "epsilon_decay_steps": "epsilon_decay_steps", "seed": "seed",
            "alpha_visit_decay": "alpha_visit_decay",
        }
        fields = {}
        for key, value in payload.items():
            if key not in known:
                raise ValueError(f"unknown key learner.{key}")
            fields[known[key]] = value
        for required in ("lam", "gamma", "alpha", "n_steps"):
            if required not in fields:
                json_key = "lambda" if required == "lam" else required
                raise ValueError(f"missing required config key: learner.{json_key}")
        if seed is not None:
            fields["seed"] = seed
        return cls(**fields)


class WindowUpdate(NamedTuple):
    step: int
    s0: int
    a0: int
    delta_n: float
    mgm_value: float
    td_error: float
    epsilon: float


@dataclass
class TrainReport:
    final_q: np.ndarray
    final_policy: np.ndarray
    per_window_log: list[WindowUpdate]
    q_trace: np.ndarray
    max_abs_reward: float
    policy_versions: list[tuple[int, ...]] | None = None


def greedy_policy(q) -> np.ndarray:
    """Per-state argmax with smallest-index tie-break."""
    q = np.asarray(q, dtype=np.float64)
    return q.argmax(axis=1).astype(np.int64)


def epsilon_at(cfg: LearnerConfig, step: int) -> float:
    if step >= cfg.epsilon_decay_steps:
        return cfg.epsilon_end
    return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * (
        step / cfg.epsilon_decay_steps
    )


def algorithm1_update(q, window, cfg: LearnerConfig, alpha: float | None = None) -> np.ndarray:
    """One window update, returning a new Q-table.

    Only the entry for the window's first (state, action) pair changes;
    pass alpha to override the configured constant step size.
    """
    if len(window) != cfg.n_steps:
        raise ValueError(f"window must hold exactly {cfg.n_steps} transitions")
    q = np.array(q, dtype=np.float64, copy=True)
    if alpha is None:
        alpha = cfg.alpha
    rewards = [tr.reward for tr in window]
    delta = n_step_return(rewards, cfg.gamma)
    ghat = mgm(window_sum(rewards, cfg.n_steps), cfg.n_steps)
    gamma_n = cfg.gamma**cfg.n_steps
    s0, a0 = window[0].state, window[0].action
    s_next = window[-1].next_state
    boot = float(q[s_next].max())
    target = ((1.0 - cfg.lam) * delta + cfg.lam * (1.0 - gamma_n) * ghat) + gamma_n * boot
    q[s0, a0] = (1.0 - alpha) * q[s0, a0] + alpha * target
    return q


def train(env, cfg: LearnerConfig, q0=None, record_policy_versions: bool = False) -> TrainReport:
    """Run cfg.total_steps of epsilon-greedy interaction with window updates.

    Deterministic given (cfg.seed, env seed). Episode terminations clear
    the window buffer, so windows never straddle a reset. When
    record_policy_versions is set, the report carries, per emitted window,
    the greedy-policy version under which each of its transitions was
    generated (all equal under mode_e=1 by construction).
    """
    n_states, n_actions = env.n_states, env.n_actions
    if q0 is None:
        q = np.zeros((n_states, n_actions))
    else:
        q = np.array(q0, dtype=np.float64, copy=True)
        if q.shape != (n_states, n_actions):
            raise ValueError("q0 shape must match the environment")
    rng = np.random.default_rng(cfg.seed)
    policy = q.argmax(axis=1).astype(np.int64)
    buffer = WindowBuffer(cfg.n_steps, cfg.mode_e)
    gamma, lam, alpha, n = cfg.gamma, cfg.lam, cfg.alpha, cfg.n_steps
    gamma_n = gamma**n
    e_start, e_end, e_decay = cfg.epsilon_start, cfg.epsilon_end, cfg.epsilon_decay_steps
    counts = np.zeros((n_states, n_actions), dtype=np.int64) if cfg.alpha_visit_decay else None
    log: list[WindowUpdate] = []
    trace: list[float] = []
    version_log: list[tuple[int, ...]] | None = [] if record_policy_versions else None
    pending_versions: list[int] = []
    policy_version = 0
    max_abs_reward = 0.0
    state = int(env.reset())
    for t in range(cfg.total_steps):
        if t >= e_decay:
            eps = e_end
        else:
            eps = e_start + (e_end - e_start) * (t / e_decay)
        if rng.random() < eps:
            action = int(rng.integers(n_actions))
        else:
            action = int(policy[state])
        obs = env.step(action)
        reward = float(obs.reward)
        if abs(reward) > max_abs_reward:
            max_abs_reward = abs(reward)
        window = buffer.push(Transition(state, action, reward, int(obs.state)))
        if version_log is not None:
            pending_versions.append(policy_version)
        if window is not None:
            if version_log is not None:
                version_log.append(tuple(pending_versions[-n:]))
                if cfg.mode_e == 1:
                    pending_versions.clear()
                else:
                    del pending_versions[:-n + 1 or None]
            # same accumulation order as windows.n_step_return / window_sum
            delta = 0.0
            total = 0.0
            weight = 1.0
            for tr in window:
                delta += weight * tr.reward
                weight *= gamma
                total += tr.reward
            ghat = mgm(total, n)
            s0, a0 = window[0].state, window[0].action
            s_next = window[-1].next_state
            boot = float(q[s_next].max())
            target = ((1.0 - lam) * delta + lam * (1.0 - gamma_n) * ghat) + gamma_n * boot
            old = float(q[s0, a0])
            if counts is None:
                a_eff = alpha
            else:
                counts[s0, a0] += 1
                a_eff = alpha / counts[s0, a0]
            new_value = (1.0 - a_eff) * old + a_eff * target
            q[s0, a0] = new_value
            trace.append(new_value)
            policy[s0] = q[s0].argmax()
            log.append(WindowUpdate(t, s0, a0, delta, ghat, target - old, eps))
            if version_log is not None:
                policy_version += 1
        if obs.terminated:
            buffer.clear()
            pending_versions.clear()
            state = int(env.reset())
        else:
            state = int(obs.state)
    if not np.all(np.isfinite(q)):
        raise RuntimeError("training produced non-finite Q values")
    return TrainReport(
        final_q=q,
        final_policy=greedy_policy(q),
        per_window_log=log,
        q_trace=np.asarray(trace),
        max_abs_reward=max_abs_reward,
        policy_versions=version_log,
    )


def q_value_bound(cfg: LearnerConfig, max_abs_reward: float) -> float:
    """Fixed-point bound on |q| for rewards bounded by max_abs_reward,
    starting from q = 0."""
    gamma_n = cfg.gamma**cfg.n_steps
    delta_bound = max_abs_reward * (1.0 - gamma_n) / (1.0 - cfg.gamma)
    ghat_bound = mgm(cfg.n_steps * max_abs_reward, cfg.n_steps)
    blended = (1.0 - cfg.lam) * delta_bound + cfg.lam * (1.0 - gamma_n) * abs(ghat_bound)
    return blended / (1.0 - gamma_n)


def train_log_to_csv(report: TrainReport) -> str:
    lines = ["step,s0,a0,delta_n,mgm,td_error,epsilon"]
    for entry in report.per_window_log:
        lines.append(
            f"{entry.step},{entry.s0},{entry.a0},{entry.delta_n!r},"
            f"{entry.mgm_value!r},{entry.td_error!r},{entry.epsilon!r}"
        )
    return "\n".join(lines) + "\n"
