"""Finite tabular MDPs: kernels, deterministic policies, stationary
distributions, and exact growth-blended policy evaluation.

Everything here is a pure function over dense numpy arrays. These routines
double as ground-truth oracles for the Bellman-operator and learner modules,
so they favor direct linear algebra over sampling.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

ROW_SUM_ATOL = 1e-12
ENUMERATION_CAP = 10**6


@dataclass(frozen=True)
class FiniteMdp:
    """Finite MDP with a dense kernel.

    transition[s, a, s'] is P(s'|s, a), reward[s, a] the per-step reward,
    and gamma the discount, strictly inside (0, 1). Every (s, a) slice of
    the kernel must be a probability vector to within 1e-12.
    """

    transition: np.ndarray
    reward: np.ndarray
    gamma: float

    def __post_init__(self):
        transition = np.ascontiguousarray(self.transition, dtype=np.float64)
        reward = np.ascontiguousarray(self.reward, dtype=np.float64)
        if transition.ndim != 3 or transition.shape[0] != transition.shape[2]:
            raise ValueError("transition must have shape (S, A, S)")
        if reward.shape != transition.shape[:2]:
            raise ValueError("reward must have shape (S, A) matching transition")
        if np.any(transition < 0.0):
            raise ValueError("transition probabilities must be nonnegative")
        rows = transition.sum(axis=2)
        if np.max(np.abs(rows - 1.0)) > ROW_SUM_ATOL:
            raise ValueError("every transition row must sum to 1 within 1e-12")
        if not np.all(np.isfinite(reward)):
            raise ValueError("rewards must be finite")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie strictly inside (0, 1)")
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "reward", reward)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]


def as_policy(mdp: FiniteMdp, policy) -> np.ndarray:
    """Coerce to an int vector of one action index per state, validated."""
    pol = np.asarray(policy, dtype=np.int64)
    if pol.shape != (mdp.n_states,):
        raise ValueError(f"policy must map all {mdp.n_states} states to actions")
    if np.any(pol < 0) or np.any(pol >= mdp.n_actions):
        raise ValueError("policy contains an out-of-range action index")
    return pol


def induced_chain(mdp: FiniteMdp, policy) -> np.ndarray:
    """State-to-state matrix under a deterministic policy: row s is
    transition[s, policy[s], :]."""
    pol = as_policy(mdp, policy)
    return mdp.transition[np.arange(mdp.n_states), pol, :].copy()


def _check_chain(chain) -> np.ndarray:
    chain = np.asarray(chain, dtype=np.float64)
    if chain.ndim != 2 or chain.shape[0] != chain.shape[1]:
        raise ValueError("chain must be a square matrix")
    if np.any(chain < 0.0) or np.max(np.abs(chain.sum(axis=1) - 1.0)) > ROW_SUM_ATOL:
        raise ValueError("chain must be row-stochastic")
    return chain


def stationary_distribution(chain, tol: float = 1e-12, max_iter: int = 10**6) -> np.ndarray:
    """Stationary distribution d with d @ chain = d, by power iteration.

    Iterates from the uniform distribution until successive iterates differ
    by less than tol in infinity norm. Raises RuntimeError if the cap is
    hit, which usually means the chain is periodic or reducible.
    """
    chain = _check_chain(chain)
    n = chain.shape[0]
    d = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = d @ chain
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - d)) < tol:
            residual = np.max(np.abs(nxt @ chain - nxt))
            if residual > 1e-8:
                raise RuntimeError(f"stationary residual {residual:.3e} exceeds 1e-8")
            return nxt
        d = nxt
    raise RuntimeError(
        "power iteration did not converge; the chain is likely periodic or reducible"
    )


def policy_evaluation_regularized(mdp: FiniteMdp, policy, growth, lam: float) -> np.ndarray:
    """Exact Q-values of a policy under the growth-blended step reward.

    Solves the per-(s, a) fixed point of

        q = (1 - lam) * r + (1 - gamma) * lam * growth + gamma * P^pi q

    by a direct linear solve on the state values v(s) = q(s, pi(s)).
    lam=0 is classical policy evaluation of r; lam=1 with a constant growth
    table c returns q identically c.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must lie in [0, 1]")
    pol = as_policy(mdp, policy)
    growth = np.asarray(growth, dtype=np.float64)
    if growth.shape != mdp.reward.shape:
        raise ValueError("growth table shape must match (S, A)")
    n = mdp.n_states
    step = (1.0 - lam) * mdp.reward + (1.0 - mdp.gamma) * lam * growth
    chain = mdp.transition[np.arange(n), pol, :]
    v = np.linalg.solve(np.eye(n) - mdp.gamma * chain, step[np.arange(n), pol])
    q = step + mdp.gamma * (mdp.transition @ v)
    check = step + mdp.gamma * (mdp.transition @ q[np.arange(n), pol])
    assert np.max(np.abs(check - q)) < 1e-10, "policy evaluation residual too large"
    return q


def iter_policies(n_states: int, n_actions: int):
    """All deterministic policies in lexicographic order, as int arrays."""
    for actions in itertools.product(range(n_actions), repeat=n_states):
        yield np.array(actions, dtype=np.int64)


def enumerate_optimal_policy(mdp: FiniteMdp, growth_of, lam: float):
    """Brute-force argmax over all deterministic policies.

    growth_of(policy) must supply the growth table to evaluate that policy
    under. Policies are scored by max over (s, a) of their Q-table; ties
    keep the lexicographically smallest policy. Intended purely as a test
    oracle for small instances.
    """
    count = mdp.n_actions**mdp.n_states
    if count > ENUMERATION_CAP:
        raise ValueError(f"refusing to enumerate {count} policies (cap {ENUMERATION_CAP})")
    best_policy = None
    best_q = None
    best_score = -np.inf
    for pol in iter_policies(mdp.n_states, mdp.n_actions):
        q = policy_evaluation_regularized(mdp, pol, growth_of(pol), lam)
        score = float(q.max())
        if score > best_score:
            best_policy, best_q, best_score = pol, q, score
    return best_policy, best_q


def find_dominant_policy(mdp: FiniteMdp, growth_of, lam: float, tol: float = 1e-9):
    """Policy whose Q-table dominates every other policy's at every (s, a).

    Returns (policy, qtable) or None when no such policy exists. Same
    enumeration cap as enumerate_optimal_policy.
    """
    count = mdp.n_actions**mdp.n_states
    if count > ENUMERATION_CAP:
        raise ValueError(f"refusing to enumerate {count} policies (cap {ENUMERATION_CAP})")
    evaluated = [
        (pol, policy_evaluation_regularized(mdp, pol, growth_of(pol), lam))
        for pol in iter_policies(mdp.n_states, mdp.n_actions)
    ]
    for pol, q in evaluated:
        if all(np.all(q >= other_q - tol) for _, other_q in evaluated):
            return pol, q
    return None


# -- serialization ------------------------------------------------------------

def mdp_to_json(mdp: FiniteMdp, indent: int | None = 2) -> str:
    payload = {
        "n_states": mdp.n_states,
        "n_actions": mdp.n_actions,
        "gamma": mdp.gamma,
        "transition": mdp.transition.tolist(),
        "reward": mdp.reward.tolist(),
    }
    return json.dumps(payload, indent=indent)


def mdp_from_json(text: str) -> FiniteMdp:
    payload = json.loads(text)
    mdp = FiniteMdp(
        transition=np.asarray(payload["transition"], dtype=np.float64),
        reward=np.asarray(payload["reward"], dtype=np.float64),
        gamma=float(payload["gamma"]),
    )
    if mdp.n_states != payload["n_states"] or mdp.n_actions != payload["n_actions"]:
        raise ValueError("declared n_states/n_actions do not match array shapes")
    return mdp


def _check_qtable(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 2:
        raise ValueError("Q-table must be a 2D (states x actions) array")
    if not np.all(np.isfinite(q)):
        raise ValueError("Q-table entries must be finite")
    return q


def qtable_to_json(q, indent: int | None = None) -> str:
    return json.dumps(_check_qtable(q).tolist(), indent=indent)


def qtable_from_json(text: str) -> np.ndarray:
    return _check_qtable(json.loads(text))


def qtable_to_csv(q) -> str:
    q = _check_qtable(q)
    lines = ["state,action,value"]
    for s in range(q.shape[0]):
        for a in range(q.shape[1]):
            lines.append(f"{s},{a},{float(q[s, a])!r}")
    return "\n".join(lines) + "\n"


def qtable_from_csv(text: str) -> np.ndarray:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0] != "state,action,value":
        raise ValueError("expected header 'state,action,value'")
    entries = {}
    for ln in lines[1:]:
        s, a, v = ln.split(",")
        entries[(int(s), int(a))] = float(v)
    n_states = max(s for s, _ in entries) + 1
    n_actions = max(a for _, a in entries) + 1
    if len(entries) != n_states * n_actions:
        raise ValueError("CSV does not cover the full (state, action) grid")
    q = np.empty((n_states, n_actions))
    for (s, a), v in entries.items():
        q[s, a] = v
    return _check_qtable(q)
