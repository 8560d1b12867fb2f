"""Shared test utilities: independent oracle implementations and random
instance factories.

The oracles here deliberately avoid the package's own kernels and solvers
(explicit loops, einsum, linear least squares) so every numerical claim is
checked along two distinct routes.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from ergo_rl.bellman import OperatorConfig, fixed_point
from ergo_rl.gbm import GbmChainSpec, analytic_growth_rate
from ergo_rl.mdp import FiniteMdp, induced_chain, stationary_distribution
from ergo_rl.qlearning import LearnerConfig, greedy_policy


def random_mdp(rng, n_states, n_actions, gamma=0.9):
    transition = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    reward = rng.uniform(-1.0, 1.0, size=(n_states, n_actions))
    return FiniteMdp(transition=transition, reward=reward, gamma=gamma)


def stationary_linear_solve(chain):
    """Stationary distribution via least squares on [P^T - I; 1] d = [0; 1]."""
    chain = np.asarray(chain, dtype=np.float64)
    n = chain.shape[0]
    a = np.vstack([chain.T - np.eye(n), np.ones((1, n))])
    b = np.concatenate([np.zeros(n), [1.0]])
    d, *_ = np.linalg.lstsq(a, b, rcond=None)
    return d


def classical_policy_evaluation(mdp, policy, tol=1e-14, max_iter=1_000_000):
    """Plain policy evaluation of the raw reward by iterating
    q <- r + gamma P^pi q."""
    policy = np.asarray(policy, dtype=np.int64)
    idx = np.arange(mdp.n_states)
    q = np.zeros_like(mdp.reward)
    for _ in range(max_iter):
        nxt = mdp.reward + mdp.gamma * np.einsum(
            "saj,j->sa", mdp.transition, q[idx, policy]
        )
        if np.max(np.abs(nxt - q)) < tol:
            return nxt
        q = nxt
    raise RuntimeError("policy evaluation oracle did not converge")


def blended_policy_evaluation_iterative(mdp, policy, growth, lam, tol=1e-14, max_iter=1_000_000):
    """Iterate q <- (1-lam) r + (1-gamma) lam growth + gamma P^pi q."""
    policy = np.asarray(policy, dtype=np.int64)
    idx = np.arange(mdp.n_states)
    step = (1.0 - lam) * mdp.reward + (1.0 - mdp.gamma) * lam * np.asarray(growth)
    q = np.zeros_like(mdp.reward)
    for _ in range(max_iter):
        nxt = step + mdp.gamma * np.einsum("saj,j->sa", mdp.transition, q[idx, policy])
        if np.max(np.abs(nxt - q)) < tol:
            return nxt
        q = nxt
    raise RuntimeError("blended evaluation oracle did not converge")


def value_iteration(mdp, tol=1e-13, max_iter=1_000_000):
    """Classical one-step value iteration on the Q-table, via einsum."""
    q = np.zeros_like(mdp.reward)
    for _ in range(max_iter):
        nxt = mdp.reward + mdp.gamma * np.einsum("saj,j->sa", mdp.transition, q.max(axis=1))
        if np.max(np.abs(nxt - q)) < tol:
            return nxt
        q = nxt
    raise RuntimeError("value iteration oracle did not converge")


def two_step_blended_backup_paths(q, mdp, growth, lam):
    """Two-step blended greedy backup by explicit summation over every
    length-2 state path, with nested Python loops."""
    n_states, n_actions = mdp.reward.shape
    step = (1.0 - lam) * mdp.reward + (1.0 - mdp.gamma) * lam * np.asarray(growth)
    best_q = q.max(axis=1)
    out = np.empty((n_states, n_actions))
    for s0 in range(n_states):
        for a0 in range(n_actions):
            outer = 0.0
            for s1 in range(n_states):
                inner_best = -np.inf
                for a1 in range(n_actions):
                    inner = 0.0
                    for s2 in range(n_states):
                        inner += mdp.transition[s1, a1, s2] * best_q[s2]
                    inner_best = max(inner_best, step[s1, a1] + mdp.gamma * inner)
                outer += mdp.transition[s0, a0, s1] * inner_best
            out[s0, a0] = step[s0, a0] + mdp.gamma * outer
    return out


def stationary_growth_table(mdp, gbm_spec):
    """growth_of callable: each policy's table is constant at the
    stationary-weighted growth rate of its induced chain."""

    def growth_of(policy):
        dist = stationary_distribution(induced_chain(mdp, policy))
        g = analytic_growth_rate(gbm_spec, dist)
        return np.full((mdp.n_states, mdp.n_actions), g)

    return growth_of


def self_consistent_growth_policy(mdp, gbm_spec, cfg: OperatorConfig, tol=1e-10, max_rounds=100):
    """Alternate between the fixed point's greedy policy and that policy's
    stationary growth rate until the policy stabilizes.

    Returns (policy, growth_table, qtable); raises RuntimeError if the
    policy cycles instead of stabilizing.
    """
    growth_of = stationary_growth_table(mdp, gbm_spec)
    policy = np.zeros(mdp.n_states, dtype=np.int64)
    for _ in range(max_rounds):
        growth = growth_of(policy)
        q = fixed_point(mdp, growth, cfg, tol)
        new_policy = greedy_policy(q)
        if np.array_equal(new_policy, policy):
            return policy, growth, q
        policy = new_policy
    raise RuntimeError("self-consistent growth loop did not stabilize")


def train_multistep_q(env, cfg: LearnerConfig, q0=None):
    """Plain multi-step Q-learning baseline.

    Written independently of the package trainer: its own window handling
    and return accumulation, the same epsilon-greedy consumption of the
    RNG stream. Returns (final_q, q_trace).
    """
    n_states, n_actions = env.n_states, env.n_actions
    q = np.zeros((n_states, n_actions)) if q0 is None else np.array(q0, dtype=np.float64)
    rng = np.random.default_rng(cfg.seed)
    policy = q.argmax(axis=1).astype(np.int64)
    gamma_n = cfg.gamma**cfg.n_steps
    window: deque = deque()
    trace: list[float] = []
    state = int(env.reset())
    for t in range(cfg.total_steps):
        if t >= cfg.epsilon_decay_steps:
            eps = cfg.epsilon_end
        else:
            eps = cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * (
                t / cfg.epsilon_decay_steps
            )
        if rng.random() < eps:
            action = int(rng.integers(n_actions))
        else:
            action = int(policy[state])
        obs = env.step(action)
        window.append((state, action, float(obs.reward), int(obs.state)))
        if len(window) == cfg.n_steps:
            ret = 0.0
            weight = 1.0
            for _, _, reward, _ in window:
                ret += weight * reward
                weight *= cfg.gamma
            s0, a0 = window[0][0], window[0][1]
            s_next = window[-1][3]
            target = ret + gamma_n * float(q[s_next].max())
            q[s0, a0] = (1.0 - cfg.alpha) * float(q[s0, a0]) + cfg.alpha * target
            trace.append(float(q[s0, a0]))
            policy[s0] = q[s0].argmax()
            if cfg.mode_e == 0:
                window.popleft()
            else:
                window.clear()
        if obs.terminated:
            window.clear()
            state = int(env.reset())
        else:
            state = int(obs.state)
    return q, np.asarray(trace)


def default_gbm_env_spec():
    """Small two-action chain where the actions steer toward different
    drift states, so policies have genuinely different growth rates."""
    from ergo_rl.envs import GbmChainEnvSpec

    kernels = np.array([
        [[0.8, 0.1, 0.1], [0.6, 0.2, 0.2], [0.7, 0.2, 0.1]],
        [[0.1, 0.2, 0.7], [0.1, 0.1, 0.8], [0.2, 0.1, 0.7]],
    ])
    return GbmChainEnvSpec(
        mu=np.array([0.05, 0.0, -0.03]),
        sigma=np.array([0.1, 0.05, 0.2]),
        kernels=kernels,
        dt=1.0,
        r0=1.0,
        horizon=200,
    )
