"""Seeded, resettable environments with a uniform tabular interface.

All three environments expose ``n_states``, ``n_actions``, ``reset() -> int``
and ``step(action) -> EnvObservation``. Episodes end by truncation (coin
toss, GBM chain) or by dropping the pole / leaving the track (cart-pole);
the learner clears its window at either kind of boundary.

* CoinTossEnv: multiplicative betting. Each step a fair coin multiplies the
  staked fraction of wealth by up_factor or down_factor. The expected
  one-step reward is increasing in the stake, while the per-step log growth
  peaks at the Kelly fraction, so expectation-maximizers and growth
  maximizers genuinely disagree here.
* GbmChainEnv: the chain-modulated GBM dynamic as a learnable environment;
  actions pick which transition kernel drives the chain.
* CartPoleEnv: the classic balancing benchmark with a uniformly bucketed
  4D state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .mdp import _check_chain


class EnvObservation(NamedTuple):
    state: int
    reward: float
    terminated: bool


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


# -- coin toss ----------------------------------------------------------------

@dataclass(frozen=True)
class CoinTossSpec:
    """Multiplicative coin-toss betting.

    A stake f of current wealth is exposed each step; heads multiply the
    stake by up_factor, tails by down_factor. Actions index into
    ``fractions``. The learner observes a single dummy state by default
    (the optimal stake is wealth-independent); set observe_log_wealth for a
    bucketed log-wealth state instead.
    """

    up_factor: float = 0.5
    down_factor: float = -0.4
    fractions: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    r0: float = 100.0
    horizon: int = 200
    observe_log_wealth: bool = False
    log_wealth_buckets: int = 17

    def __post_init__(self):
        if not (self.up_factor > 0.0 > self.down_factor > -1.0):
            raise ValueError("need up_factor > 0 > down_factor > -1")
        fr = tuple(float(f) for f in self.fractions)
        if not fr or any(not 0.0 <= f <= 1.0 for f in fr) or list(fr) != sorted(fr):
            raise ValueError("fractions must be ascending values in [0, 1]")
        if not self.r0 > 0.0:
            raise ValueError("r0 must be positive")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.log_wealth_buckets < 1:
            raise ValueError("log_wealth_buckets must be at least 1")
        object.__setattr__(self, "fractions", fr)


def coin_toss_step(spec: CoinTossSpec, wealth: float, action: int, heads: bool):
    """One bet: returns (new_wealth, reward) with reward = f * c * wealth."""
    if not wealth > 0.0:
        raise ValueError("wealth must be positive")
    fraction = spec.fractions[action]
    factor = spec.up_factor if heads else spec.down_factor
    reward = fraction * factor * wealth
    return wealth + reward, reward


def kelly_optimal_fraction(spec: CoinTossSpec, resolution: float = 1e-6) -> float:
    """Stake maximizing expected log growth, by grid search on [0, 1]."""
    grid = np.linspace(0.0, 1.0, int(round(1.0 / resolution)) + 1)
    growth = 0.5 * np.log1p(spec.up_factor * grid) + 0.5 * np.log1p(spec.down_factor * grid)
    return float(grid[int(np.argmax(growth))])


def coin_toss_wealth_paths(
    spec: CoinTossSpec, fraction: float, n_episodes: int, horizon: int, rng
) -> np.ndarray:
    """Terminal wealth of n_episodes fixed-fraction episodes, vectorized.

    Uses the same wealth recurrence and the same draw order as stepping
    CoinTossEnv episode by episode with one generator, so results match a
    stepped rollout bit for bit.
    """
    u = rng.random((n_episodes, horizon))
    wealth = np.full(n_episodes, spec.r0)
    for t in range(horizon):
        factor = np.where(u[:, t] < 0.5, spec.up_factor, spec.down_factor)
        wealth = wealth + fraction * factor * wealth
    return wealth


class CoinTossEnv:
    def __init__(self, spec: CoinTossSpec | None = None, seed: int = 0):
        self.spec = spec if spec is not None else CoinTossSpec()
        self._rng = np.random.default_rng(seed)
        self.n_actions = len(self.spec.fractions)
        self.n_states = self.spec.log_wealth_buckets if self.spec.observe_log_wealth else 1
        self.dt = 1.0
        self.wealth = self.spec.r0
        self._steps = 0

    def _state(self) -> int:
        if not self.spec.observe_log_wealth:
            return 0
        # unit-width buckets in ln(wealth / r0), clamped at the edges
        buckets = self.spec.log_wealth_buckets
        offset = math.log(self.wealth / self.spec.r0) + buckets / 2.0
        return min(max(int(math.floor(offset)), 0), buckets - 1)

    def reset(self) -> int:
        self.wealth = self.spec.r0
        self._steps = 0
        return self._state()

    def step(self, action: int) -> EnvObservation:
        heads = self._rng.random() < 0.5
        self.wealth, reward = coin_toss_step(self.spec, self.wealth, action, heads)
        self._steps += 1
        return EnvObservation(self._state(), reward, self._steps >= self.spec.horizon)


# -- GBM chain ----------------------------------------------------------------

@dataclass(frozen=True)
class GbmChainEnvSpec:
    """Chain-modulated GBM wealth as an environment.

    kernels[a] is the row-stochastic state-transition matrix used when
    action a is applied; mu/sigma give the per-state GBM parameters of the
    wealth increment earned in the current state.
    """

    mu: np.ndarray
    sigma: np.ndarray
    kernels: np.ndarray
    dt: float = 1.0
    r0: float = 1.0
    horizon: int = 200
    start_state: int = 0

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=np.float64))
        sigma = np.atleast_1d(np.asarray(self.sigma, dtype=np.float64))
        kernels = np.asarray(self.kernels, dtype=np.float64)
        if mu.shape != sigma.shape or mu.ndim != 1:
            raise ValueError("mu and sigma must be 1D vectors of equal length")
        if np.any(sigma < 0.0):
            raise ValueError("sigma must be nonnegative")
        n = mu.shape[0]
        if kernels.ndim != 3 or kernels.shape[1:] != (n, n):
            raise ValueError("kernels must have shape (A, S, S)")
        for k in kernels:
            _check_chain(k)
        if not self.dt > 0.0 or not self.r0 > 0.0:
            raise ValueError("dt and r0 must be positive")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if not 0 <= self.start_state < n:
            raise ValueError("start_state out of range")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "kernels", kernels)

    @property
    def n_states(self) -> int:
        return self.mu.shape[0]

    @property
    def n_actions(self) -> int:
        return self.kernels.shape[0]


def induced_gbm_kernel(spec: GbmChainEnvSpec, policy) -> np.ndarray:
    """State chain obtained by always applying policy[s] in state s."""
    pol = np.asarray(policy, dtype=np.int64)
    if pol.shape != (spec.n_states,):
        raise ValueError("policy must assign one action per state")
    return np.stack([spec.kernels[pol[s], s, :] for s in range(spec.n_states)])


class GbmChainEnv:
    """Wealth is tracked in log space; very long rollouts keep an exact log
    while the linear ``wealth`` view may saturate the double range."""

    def __init__(self, spec: GbmChainEnvSpec, seed: int = 0):
        self.spec = spec
        self._rng = np.random.default_rng(seed)
        self.n_states = spec.n_states
        self.n_actions = spec.n_actions
        self.dt = spec.dt
        self._drift = (spec.mu - 0.5 * spec.sigma**2) * spec.dt
        self._vol = spec.sigma * math.sqrt(spec.dt)
        self._cum = np.cumsum(spec.kernels, axis=2)
        self.log_wealth = math.log(spec.r0)
        self.state = spec.start_state
        self._steps = 0

    @property
    def wealth(self) -> float:
        return _safe_exp(self.log_wealth)

    def reset(self) -> int:
        self.log_wealth = math.log(self.spec.r0)
        self.state = self.spec.start_state
        self._steps = 0
        return self.state

    def step(self, action: int) -> EnvObservation:
        if not 0 <= action < self.n_actions:
            raise ValueError("action out of range")
        s = self.state
        z = self._rng.standard_normal()
        increment = self._drift[s] + self._vol[s] * z
        reward = _safe_exp(self.log_wealth) * math.expm1(increment)
        self.log_wealth += increment
        u = self._rng.random()
        nxt = int(np.searchsorted(self._cum[action, s], u, side="left"))
        self.state = min(nxt, self.n_states - 1)
        self._steps += 1
        return EnvObservation(self.state, reward, self._steps >= self.spec.horizon)


# -- cart-pole ----------------------------------------------------------------

@dataclass(frozen=True)
class CartPoleSpec:
    """Cart-pole physics constants, termination bounds, and bucket counts.

    Constants are the de-facto standard benchmark values. The 4D state
    (position, velocity, angle, angular velocity) is discretized by uniform
    bucketing over the clip ranges; out-of-range values clamp to the edge
    buckets.
    """

    gravity: float = 9.8
    cart_mass: float = 1.0
    pole_mass: float = 0.1
    half_length: float = 0.5
    force_mag: float = 10.0
    tau: float = 0.02
    x_threshold: float = 2.4
    theta_threshold: float = 12.0 * math.pi / 180.0
    max_steps: int = 500
    buckets: tuple[int, ...] = (3, 3, 6, 3)
    x_dot_clip: float = 3.0
    theta_dot_clip: float = 3.5

    def __post_init__(self):
        positive = (
            self.gravity, self.cart_mass, self.pole_mass, self.half_length,
            self.force_mag, self.tau, self.x_threshold, self.theta_threshold,
            self.x_dot_clip, self.theta_dot_clip,
        )
        if any(not v > 0.0 for v in positive):
            raise ValueError("all physics constants and bounds must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        buckets = tuple(int(b) for b in self.buckets)
        if len(buckets) != 4 or any(b < 1 for b in buckets):
            raise ValueError("buckets must be 4 counts, each at least 1")
        object.__setattr__(self, "buckets", buckets)

    @property
    def n_states(self) -> int:
        n = 1
        for b in self.buckets:
            n *= b
        return n


def _out_of_bounds(spec: CartPoleSpec, state) -> bool:
    return abs(state[0]) >= spec.x_threshold or abs(state[2]) >= spec.theta_threshold


def cartpole_step(spec: CartPoleSpec, state, action: int):
    """One semi-implicit Euler step of the cart-pole dynamics.

    Returns (new_state, reward, dropped): +1 while the pole stays inside
    the position/angle bounds, -1 on the step that leaves them. A state
    already at or past a bound counts as dropped regardless of the action.
    """
    x, x_dot, theta, theta_dot = (float(v) for v in state)
    force = spec.force_mag if action == 1 else -spec.force_mag
    cos_t = math.cos(theta)
    sin_t = math.sin(theta)
    total_mass = spec.cart_mass + spec.pole_mass
    pole_ml = spec.pole_mass * spec.half_length
    temp = (force + pole_ml * theta_dot**2 * sin_t) / total_mass
    theta_acc = (spec.gravity * sin_t - cos_t * temp) / (
        spec.half_length * (4.0 / 3.0 - spec.pole_mass * cos_t**2 / total_mass)
    )
    x_acc = temp - pole_ml * theta_acc * cos_t / total_mass
    x_dot += spec.tau * x_acc
    x += spec.tau * x_dot
    theta_dot += spec.tau * theta_acc
    theta += spec.tau * theta_dot
    new_state = np.array([x, x_dot, theta, theta_dot])
    dropped = _out_of_bounds(spec, state) or _out_of_bounds(spec, new_state)
    return new_state, (-1.0 if dropped else 1.0), dropped


def discretize(state, spec: CartPoleSpec) -> int:
    """Uniform-bucket index of a continuous 4D state, row-major flattened."""
    ranges = (
        (-spec.x_threshold, spec.x_threshold),
        (-spec.x_dot_clip, spec.x_dot_clip),
        (-spec.theta_threshold, spec.theta_threshold),
        (-spec.theta_dot_clip, spec.theta_dot_clip),
    )
    index = 0
    for value, (lo, hi), count in zip(state, ranges, spec.buckets):
        b = int((float(value) - lo) / (hi - lo) * count)
        index = index * count + min(max(b, 0), count - 1)
    return index


class CartPoleEnv:
    def __init__(self, spec: CartPoleSpec | None = None, seed: int = 0):
        self.spec = spec if spec is not None else CartPoleSpec()
        self._rng = np.random.default_rng(seed)
        self.n_states = self.spec.n_states
        self.n_actions = 2
        self.continuous_state = np.zeros(4)
        self._steps = 0

    def reset(self) -> int:
        self.continuous_state = self._rng.uniform(-0.05, 0.05, size=4)
        self._steps = 0
        return discretize(self.continuous_state, self.spec)

    def step(self, action: int) -> EnvObservation:
        if action not in (0, 1):
            raise ValueError("action must be 0 (left) or 1 (right)")
        self.continuous_state, reward, dropped = cartpole_step(
            self.spec, self.continuous_state, action
        )
        self._steps += 1
        terminated = dropped or self._steps >= self.spec.max_steps
        return EnvObservation(discretize(self.continuous_state, self.spec), reward, terminated)


# -- config-driven construction -----------------------------------------------

_SPEC_FIELDS = {
    "coin_toss": (
        "up_factor", "down_factor", "fractions", "r0", "horizon",
        "observe_log_wealth", "log_wealth_buckets",
    ),
    "gbm_chain": ("mu", "sigma", "kernels", "dt", "r0", "horizon", "start_state"),
    "cartpole": (
        "gravity", "cart_mass", "pole_mass", "half_length", "force_mag", "tau",
        "x_threshold", "theta_threshold", "max_steps", "buckets",
        "x_dot_clip", "theta_dot_clip",
    ),
}

ENV_TYPES = tuple(sorted(_SPEC_FIELDS))


def make_env(env_config: dict, seed: int = 0):
    """Build an environment from a config mapping with a ``type`` key."""
    if "type" not in env_config:
        raise ValueError("missing required config key: env.type")
    env_type = env_config["type"]
    if env_type not in _SPEC_FIELDS:
        raise ValueError(f"unknown env.type {env_type!r}; expected one of {ENV_TYPES}")
    allowed = _SPEC_FIELDS[env_type]
    fields = {}
    for key, value in env_config.items():
        if key == "type":
            continue
        if key not in allowed:
            raise ValueError(f"unknown key env.{key} for env.type {env_type!r}")
        if key in ("fractions", "buckets"):
            value = tuple(value)
        fields[key] = value
    if env_type == "coin_toss":
        return CoinTossEnv(CoinTossSpec(**fields), seed=seed)
    if env_type == "gbm_chain":
        for key in ("mu", "sigma", "kernels"):
            if key not in fields:
                raise ValueError(f"missing required config key: env.{key}")
        return GbmChainEnv(GbmChainEnvSpec(**fields), seed=seed)
    return CartPoleEnv(CartPoleSpec(**fields), seed=seed)
