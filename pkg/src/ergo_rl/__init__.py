"""Tabular RL toolkit blending expected returns with a time-average
growth-rate regularizer.

The package covers the full loop: exact finite-MDP oracles (mdp), the
chain-modulated GBM reward model and its closed-form growth rate (gbm),
sliding-window return aggregates (windows), the blended n-step Bellman
backup with contraction/fixed-point checks (bellman), the sliding-window
Q-learner (qlearning), three benchmark environments (envs), randomized
verification suites (verify), and a CLI harness (cli).
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .bellman import (
    OperatorConfig,
    contraction_ratio,
    fixed_point,
    regularized_bellman_n,
    standard_bellman_n,
)
from .envs import (
    CartPoleEnv,
    CartPoleSpec,
    CoinTossEnv,
    CoinTossSpec,
    EnvObservation,
    GbmChainEnv,
    GbmChainEnvSpec,
    kelly_optimal_fraction,
    make_env,
)
from .gbm import (
    GbmChainSpec,
    WealthTrajectory,
    analytic_growth_rate,
    empirical_growth_rate,
    simulate_gbm_chain,
    standard_geometric_mean_rate,
)
from .mdp import (
    FiniteMdp,
    enumerate_optimal_policy,
    find_dominant_policy,
    induced_chain,
    policy_evaluation_regularized,
    stationary_distribution,
)
from .qlearning import LearnerConfig, TrainReport, algorithm1_update, greedy_policy, train
from .windows import Transition, WindowBuffer, mgm, n_step_return, window_sum

__all__ = [
    "BACKEND",
    "CartPoleEnv",
    "CartPoleSpec",
    "CoinTossEnv",
    "CoinTossSpec",
    "EnvObservation",
    "FiniteMdp",
    "GbmChainEnv",
    "GbmChainEnvSpec",
    "GbmChainSpec",
    "LearnerConfig",
    "OperatorConfig",
    "TrainReport",
    "Transition",
    "WealthTrajectory",
    "WindowBuffer",
    "algorithm1_update",
    "analytic_growth_rate",
    "contraction_ratio",
    "empirical_growth_rate",
    "enumerate_optimal_policy",
    "find_dominant_policy",
    "fixed_point",
    "greedy_policy",
    "induced_chain",
    "kelly_optimal_fraction",
    "make_env",
    "mgm",
    "n_step_return",
    "policy_evaluation_regularized",
    "regularized_bellman_n",
    "simulate_gbm_chain",
    "standard_bellman_n",
    "standard_geometric_mean_rate",
    "stationary_distribution",
    "train",
    "window_sum",
    "__version__",
]
