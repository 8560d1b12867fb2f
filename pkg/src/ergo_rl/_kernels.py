"""Hot numeric kernels in two interchangeable variants.

``bellman_backup`` and ``gbm_log_path`` are the names the rest of the
package calls; they point at whichever variant ergo_rl._backend selected.
The explicit ``*_numpy`` / ``*_numba`` variants stay importable (the numba
ones whenever numba is installed, regardless of the active backend) so the
equivalence tests and benchmarks can compare them directly.
"""

from __future__ import annotations

from bisect import bisect_left

import numpy as np

from ._backend import USING_NUMBA

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via ERGO_RL_BACKEND=numpy
    HAVE_NUMBA = False


def bellman_backup_numpy(transition, step_reward, gamma, q, n_steps):
    """Apply n_steps greedy backups: q <- step_reward + gamma * P @ max_a q."""
    out = q
    for _ in range(n_steps):
        out = step_reward + gamma * (transition @ out.max(axis=1))
    return out


def _bellman_backup_loops(transition, step_reward, gamma, q, n_steps):
    n_states, n_actions = step_reward.shape
    cur = q.copy()
    nxt = np.empty_like(cur)
    values = np.empty(n_states)
    for _ in range(n_steps):
        for s in range(n_states):
            best = cur[s, 0]
            for a in range(1, n_actions):
                if cur[s, a] > best:
                    best = cur[s, a]
            values[s] = best
        for s in range(n_states):
            for a in range(n_actions):
                acc = 0.0
                for sp in range(n_states):
                    acc += transition[s, a, sp] * values[sp]
                nxt[s, a] = step_reward[s, a] + gamma * acc
        cur, nxt = nxt, cur
    return cur


def gbm_log_path_numpy(chain_cum, drift, vol, z, u, start_state, log_r0):
    """Log-wealth path: one GBM increment then one chain transition per step.

    chain_cum holds row-wise cumulative transition probabilities; z and u
    are pre-drawn standard normals and uniforms, one of each per step. The
    state sequence is inherently sequential; the increments and their
    running sum are vectorized.
    """
    horizon = z.shape[0]
    n = chain_cum.shape[0]
    states = np.empty(horizon + 1, dtype=np.int64)
    states[0] = start_state
    rows = chain_cum.tolist()
    uu = u.tolist()
    s = int(start_state)
    for t in range(horizon):
        j = bisect_left(rows[s], uu[t])
        s = j if j < n else n - 1
        states[t + 1] = s
    visited = states[:-1]
    increments = drift[visited] + vol[visited] * z
    log_values = np.cumsum(np.concatenate(((log_r0,), increments)))
    return log_values, states


def _gbm_log_path_loops(chain_cum, drift, vol, z, u, start_state, log_r0):
    horizon = z.shape[0]
    n = chain_cum.shape[0]
    log_values = np.empty(horizon + 1)
    states = np.empty(horizon + 1, dtype=np.int64)
    log_values[0] = log_r0
    states[0] = start_state
    s = start_state
    acc = log_r0
    for t in range(horizon):
        acc += drift[s] + vol[s] * z[t]
        log_values[t + 1] = acc
        x = u[t]
        j = 0
        while j < n - 1 and chain_cum[s, j] < x:
            j += 1
        s = j
        states[t + 1] = s
    return log_values, states


if HAVE_NUMBA:
    bellman_backup_numba = njit(cache=True)(_bellman_backup_loops)
    gbm_log_path_numba = njit(cache=True)(_gbm_log_path_loops)
else:
    bellman_backup_numba = None
    gbm_log_path_numba = None

if USING_NUMBA:
    bellman_backup = bellman_backup_numba
    gbm_log_path = gbm_log_path_numba
else:
    bellman_backup = bellman_backup_numpy
    gbm_log_path = gbm_log_path_numpy
