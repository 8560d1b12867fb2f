"""Per-state geometric-Brownian-motion reward dynamics over a Markov chain.

While the chain sits in state i the cumulative reward R follows
dR = mu_i R dt + sigma_i R dW; one chain transition happens per dt step.
The long-run growth of such a trajectory concentrates on

    sum_i d_i * (mu_i - sigma_i^2 / 2)

with d the stationary distribution of the chain, and the simulator here
exists to check that law numerically. Trajectories are stored in log space:
at the horizons the statistical checks need, wealth itself can leave the
range of a double even though its log is perfectly tame.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .mdp import _check_chain


@dataclass(frozen=True)
class GbmChainSpec:
    """Per-state drift/volatility and the discretization step."""

    mu: np.ndarray
    sigma: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=np.float64))
        sigma = np.atleast_1d(np.asarray(self.sigma, dtype=np.float64))
        if mu.ndim != 1 or mu.shape != sigma.shape:
            raise ValueError("mu and sigma must be 1D vectors of equal length")
        if np.any(sigma < 0.0):
            raise ValueError("sigma must be nonnegative")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def n_states(self) -> int:
        return self.mu.shape[0]

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(
            {"mu": self.mu.tolist(), "sigma": self.sigma.tolist(), "dt": self.dt},
            indent=indent,
        )

    @classmethod
    def from_json(cls, text: str) -> "GbmChainSpec":
        payload = json.loads(text)
        return cls(mu=payload["mu"], sigma=payload["sigma"], dt=float(payload["dt"]))


@dataclass(frozen=True)
class WealthTrajectory:
    """Cumulative-reward path R_0..R_T, stored as log values.

    The wealth itself is strictly positive by construction; ``values``
    exposes it via exp, which can overflow/underflow for extreme paths
    while ``log_values`` stays exact.
    """

    log_values: np.ndarray
    dt: float
    states: np.ndarray | None = None

    def __post_init__(self):
        log_values = np.asarray(self.log_values, dtype=np.float64)
        if log_values.ndim != 1 or log_values.shape[0] < 1:
            raise ValueError("log_values must be a nonempty 1D array")
        if not np.all(np.isfinite(log_values)):
            raise ValueError("log_values must be finite")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "log_values", log_values)

    @classmethod
    def from_values(cls, values, dt: float) -> "WealthTrajectory":
        values = np.asarray(values, dtype=np.float64)
        if np.any(values <= 0.0) or not np.all(np.isfinite(values)):
            raise ValueError("wealth values must be strictly positive and finite")
        return cls(log_values=np.log(values), dt=dt)

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_values)

    def __len__(self) -> int:
        return self.log_values.shape[0]

    def to_csv(self) -> str:
        lines = ["step,time,wealth,log_wealth"]
        for step, lw in enumerate(self.log_values):
            lw = float(lw)
            lines.append(f"{step},{step * self.dt!r},{math.exp(lw)!r},{lw!r}")
        return "\n".join(lines) + "\n"


def analytic_growth_rate(spec: GbmChainSpec, dist) -> float:
    """Closed-form long-run log growth per unit time:
    sum_i d_i * (mu_i - sigma_i^2 / 2)."""
    dist = np.asarray(dist, dtype=np.float64)
    if dist.shape != (spec.n_states,):
        raise ValueError("distribution length must match the number of states")
    return float(dist @ (spec.mu - 0.5 * spec.sigma**2))


def simulate_gbm_chain(
    spec: GbmChainSpec,
    chain,
    horizon: int,
    r0: float,
    seed: int,
    start_state: int = 0,
) -> WealthTrajectory:
    """Simulate the chain-modulated GBM for ``horizon`` steps of size dt.

    Each step applies one exact log-space GBM increment in the current
    state, then one chain transition:

        ln R_{t+1} = ln R_t + (mu_i - sigma_i^2/2) dt + sigma_i sqrt(dt) z

    with z standard normal from the seeded stream. Exact log-space stepping
    leaves no discretization bias, only statistical error.
    """
    chain = _check_chain(chain)
    if chain.shape[0] != spec.n_states:
        raise ValueError("chain size must match the number of states")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if not r0 > 0.0:
        raise ValueError("r0 must be positive")
    if not 0 <= start_state < spec.n_states:
        raise ValueError("start_state out of range")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(horizon)
    u = rng.random(horizon)
    drift = (spec.mu - 0.5 * spec.sigma**2) * spec.dt
    vol = spec.sigma * math.sqrt(spec.dt)
    chain_cum = np.cumsum(chain, axis=1)
    log_values, states = _kernels.gbm_log_path(
        chain_cum, drift, vol, z, u, start_state, math.log(r0)
    )
    return WealthTrajectory(log_values=log_values, dt=spec.dt, states=states)


def empirical_growth_rate(traj: WealthTrajectory) -> float:
    """Realized log growth per unit time, (ln R_T - ln R_0) / (T dt)."""
    if len(traj) < 2:
        raise ValueError("trajectory needs at least 2 points")
    steps = len(traj) - 1
    return float((traj.log_values[-1] - traj.log_values[0]) / (steps * traj.dt))


def standard_geometric_mean_rate(r_start: float, r_end: float, span: float) -> float:
    """Plain per-unit-time growth factor (r_end / r_start)^(1/span).

    This is the baseline estimator the windowed sign-aware variant improves
    on. It refuses zero or mixed-sign endpoints, and note that two negative
    endpoints yield a positive factor, happily reporting "growth" for
    wealth that is decaying deeper into the negatives.
    """
    if not span > 0.0:
        raise ValueError("span must be positive")
    if r_start == 0.0 or r_end == 0.0 or (r_start < 0.0) != (r_end < 0.0):
        raise ValueError("endpoints must share the same nonzero sign")
    return float((r_end / r_start) ** (1.0 / span))
