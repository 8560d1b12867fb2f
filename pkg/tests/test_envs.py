"""Tests for the three environments and config-driven construction."""

import math

import numpy as np
import pytest
from helpers import default_gbm_env_spec

from ergo_rl.envs import (
    CartPoleEnv,
    CartPoleSpec,
    CoinTossEnv,
    CoinTossSpec,
    GbmChainEnv,
    GbmChainEnvSpec,
    cartpole_step,
    coin_toss_step,
    coin_toss_wealth_paths,
    discretize,
    induced_gbm_kernel,
    kelly_optimal_fraction,
    make_env,
)
from ergo_rl.gbm import GbmChainSpec, analytic_growth_rate
from ergo_rl.mdp import stationary_distribution


class TestCoinTossStep:
    def test_full_stake_heads(self):
        spec = CoinTossSpec()
        wealth, reward = coin_toss_step(spec, 100.0, action=4, heads=True)
        assert reward == 50.0
        assert wealth == 150.0

    def test_zero_stake_ignores_coin(self):
        spec = CoinTossSpec()
        for heads in (True, False):
            wealth, reward = coin_toss_step(spec, 100.0, action=0, heads=heads)
            assert reward == 0.0
            assert wealth == 100.0

    def test_quarter_stake_tails(self):
        spec = CoinTossSpec()
        wealth, reward = coin_toss_step(spec, 100.0, action=1, heads=False)
        assert reward == pytest.approx(-10.0)
        assert wealth == pytest.approx(90.0)

    def test_wealth_stays_positive(self):
        spec = CoinTossSpec()
        rng = np.random.default_rng(0)
        wealth = spec.r0
        for _ in range(5000):
            action = int(rng.integers(len(spec.fractions)))
            wealth, _ = coin_toss_step(spec, wealth, action, heads=bool(rng.integers(2)))
            assert wealth > 0.0

    def test_expected_reward_increases_with_stake(self):
        # E[reward | f] = 0.5 * (up + down) * f * wealth = 0.05 * f * wealth
        spec = CoinTossSpec()
        per_unit = 0.5 * (spec.up_factor + spec.down_factor)
        assert per_unit == pytest.approx(0.05)
        means = [per_unit * f * 100.0 for f in spec.fractions]
        assert all(b > a for a, b in zip(means, means[1:]))

    def test_log_growth_gap_between_full_and_kelly_stake(self):
        # the sign flip that makes expectation and time-average disagree
        full = 0.5 * (math.log(1.5) + math.log(0.6))
        kelly = 0.5 * (math.log(1.125) + math.log(0.9))
        assert full == pytest.approx(-0.05268025782891315, abs=1e-14)
        assert kelly == pytest.approx(0.006211259999278438, abs=1e-14)
        assert full < 0.0 < kelly


class TestKellyFraction:
    def test_default_coin_gives_quarter(self):
        assert kelly_optimal_fraction(CoinTossSpec()) == pytest.approx(0.25, abs=1e-6)

    def test_symmetric_coin_gives_zero(self):
        spec = CoinTossSpec(up_factor=0.5, down_factor=-0.5)
        assert kelly_optimal_fraction(spec) == 0.0

    def test_two_to_one_payoff_gives_half(self):
        spec = CoinTossSpec(up_factor=1.0, down_factor=-0.5)
        assert kelly_optimal_fraction(spec) == pytest.approx(0.5, abs=1e-6)


class TestCoinTossEnv:
    def test_dummy_state_and_horizon(self):
        env = CoinTossEnv(CoinTossSpec(horizon=3), seed=1)
        assert env.n_states == 1
        assert env.n_actions == 5
        assert env.reset() == 0
        for step in range(3):
            obs = env.step(4)
            assert obs.state == 0
            assert obs.terminated == (step == 2)

    def test_vectorized_paths_match_stepped_env_exactly(self):
        spec = CoinTossSpec(horizon=50)
        seed = 123
        episodes = 4
        env = CoinTossEnv(spec, seed=seed)
        stepped = []
        for _ in range(episodes):
            env.reset()
            for _ in range(spec.horizon):
                env.step(3)
            stepped.append(env.wealth)
        vector = coin_toss_wealth_paths(
            spec, spec.fractions[3], episodes, spec.horizon, np.random.default_rng(seed)
        )
        np.testing.assert_array_equal(vector, np.asarray(stepped))

    def test_log_wealth_observation_variant(self):
        spec = CoinTossSpec(observe_log_wealth=True)
        env = CoinTossEnv(spec, seed=2)
        assert env.n_states == 17
        assert env.reset() == 8  # ln(w/r0) = 0 sits in the middle bucket
        obs = None
        for _ in range(100):
            obs = env.step(4)
        assert 0 <= obs.state < 17

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            CoinTossSpec(down_factor=-1.5)
        with pytest.raises(ValueError):
            CoinTossSpec(fractions=(0.5, 0.25))
        with pytest.raises(ValueError):
            CoinTossSpec(fractions=(0.5, 1.5))


class TestGbmChainEnv:
    def test_noiseless_reward_is_deterministic_growth(self):
        single = GbmChainEnvSpec(
            mu=[0.1], sigma=[0.0], kernels=np.ones((1, 1, 1)), dt=1.0, r0=1.0, horizon=5
        )
        env = GbmChainEnv(single, seed=0)
        env.reset()
        obs = env.step(0)
        assert obs.reward == pytest.approx(math.exp(0.1) - 1.0, rel=1e-12)
        wealth = env.wealth
        obs = env.step(0)
        assert obs.reward == pytest.approx(wealth * (math.exp(0.1) - 1.0), rel=1e-12)

    def test_policies_have_different_analytic_growth(self):
        spec = default_gbm_env_spec()
        rates = []
        for action in (0, 1):
            policy = np.full(spec.n_states, action)
            dist = stationary_distribution(induced_gbm_kernel(spec, policy))
            rates.append(
                analytic_growth_rate(GbmChainSpec(mu=spec.mu, sigma=spec.sigma, dt=spec.dt), dist)
            )
        assert abs(rates[0] - rates[1]) > 1e-3

    def test_empirical_growth_matches_analytic_for_fixed_action(self):
        base = default_gbm_env_spec()
        horizon = 200_000
        spec = GbmChainEnvSpec(
            mu=base.mu, sigma=base.sigma, kernels=base.kernels,
            dt=base.dt, r0=base.r0, horizon=horizon,
        )
        env = GbmChainEnv(spec, seed=5)
        env.reset()
        log_w0 = env.log_wealth
        for _ in range(horizon):
            env.step(0)
        realized = (env.log_wealth - log_w0) / horizon
        policy = np.zeros(spec.n_states, dtype=int)
        dist = stationary_distribution(induced_gbm_kernel(spec, policy))
        expected = analytic_growth_rate(
            GbmChainSpec(mu=spec.mu, sigma=spec.sigma, dt=spec.dt), dist
        )
        assert realized == pytest.approx(expected, abs=2e-3)

    def test_truncates_at_horizon(self):
        spec = default_gbm_env_spec()
        env = GbmChainEnv(spec, seed=0)
        env.reset()
        obs = None
        for _ in range(spec.horizon):
            obs = env.step(0)
        assert obs.terminated


class TestCartPole:
    def test_upright_motionless_survives_one_step(self):
        spec = CartPoleSpec()
        new_state, reward, dropped = cartpole_step(spec, np.zeros(4), action=1)
        assert not dropped
        assert reward == 1.0
        assert abs(new_state[2]) < spec.theta_threshold

    def test_state_at_angle_bound_terminates_for_any_action(self):
        spec = CartPoleSpec()
        state = np.array([0.0, 0.0, spec.theta_threshold, 0.0])
        for action in (0, 1):
            _, reward, dropped = cartpole_step(spec, state, action)
            assert dropped
            assert reward == -1.0

    def test_constant_left_topples_before_fifty_steps(self):
        spec = CartPoleSpec()
        state = np.zeros(4)
        dropped = False
        steps = 0
        for steps in range(1, 51):
            state, _, dropped = cartpole_step(spec, state, action=0)
            if dropped:
                break
        assert dropped and steps < 50

    def test_determinism_bitwise(self):
        env_a = CartPoleEnv(seed=9)
        env_b = CartPoleEnv(seed=9)
        env_a.reset()
        env_b.reset()
        rng = np.random.default_rng(0)
        for action in rng.integers(0, 2, size=100):
            obs_a = env_a.step(int(action))
            obs_b = env_b.step(int(action))
            np.testing.assert_array_equal(env_a.continuous_state, env_b.continuous_state)
            assert obs_a == obs_b
            if obs_a.terminated:
                env_a.reset()
                env_b.reset()

    def test_truncation_keeps_positive_reward(self):
        # a pole that never drops ends the episode at max_steps with +1
        spec = CartPoleSpec(max_steps=3, force_mag=1e-9)
        env = CartPoleEnv(spec, seed=0)
        env.reset()
        env.continuous_state = np.zeros(4)
        obs = None
        for _ in range(3):
            obs = env.step(1)
        assert obs.terminated
        assert obs.reward == 1.0


class TestDiscretize:
    def test_zero_state_hits_central_bucket(self):
        spec = CartPoleSpec()
        # per-dimension central buckets (1, 1, 3, 1) flattened row-major
        expected = ((1 * 3 + 1) * 6 + 3) * 3 + 1
        assert discretize(np.zeros(4), spec) == expected

    def test_out_of_range_clamps_to_edge(self):
        spec = CartPoleSpec()
        assert discretize(np.array([-100.0, -100.0, -100.0, -100.0]), spec) == 0
        assert discretize(np.array([100.0, 100.0, 100.0, 100.0]), spec) == spec.n_states - 1

    def test_total_index_count(self):
        spec = CartPoleSpec(buckets=(2, 3, 4, 5))
        assert spec.n_states == 2 * 3 * 4 * 5
        rng = np.random.default_rng(3)
        indices = set()
        for _ in range(20_000):
            index = discretize(rng.uniform(-3, 3, size=4), spec)
            assert 0 <= index < spec.n_states
            indices.add(index)
        assert len(indices) == spec.n_states


class TestMakeEnv:
    def test_builds_each_type(self):
        assert isinstance(make_env({"type": "coin_toss"}), CoinTossEnv)
        assert isinstance(make_env({"type": "cartpole", "max_steps": 100}), CartPoleEnv)
        spec = default_gbm_env_spec()
        env = make_env({
            "type": "gbm_chain",
            "mu": spec.mu.tolist(),
            "sigma": spec.sigma.tolist(),
            "kernels": spec.kernels.tolist(),
        })
        assert isinstance(env, GbmChainEnv)

    def test_missing_type_is_named(self):
        with pytest.raises(ValueError, match="env.type"):
            make_env({})

    def test_unknown_type_and_key(self):
        with pytest.raises(ValueError, match="unknown env.type"):
            make_env({"type": "pong"})
        with pytest.raises(ValueError, match="env.upfactor"):
            make_env({"type": "coin_toss", "upfactor": 1.0})
