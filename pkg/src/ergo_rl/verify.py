"""Randomized verification suites.

* prop1: Monte-Carlo check that simulated chain-modulated GBM trajectories
  realize the closed-form stationary-weighted growth rate, plus the 1/T
  decay of the cross-seed variance.
* prop2: contraction and fixed-point behavior of the blended n-step greedy
  backup over a grid of (gamma, n, lam), including tightness of the
  gamma^n bound under constant shifts.

Both return a SuiteResult with printable lines and, on failure, enough of
the offending instance to reproduce it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .bellman import OperatorConfig, contraction_ratio, fixed_point, regularized_bellman_n
from .gbm import GbmChainSpec, analytic_growth_rate, empirical_growth_rate, simulate_gbm_chain
from .mdp import FiniteMdp, stationary_distribution


@dataclass
class SuiteResult:
    name: str
    passed: bool
    lines: list[str] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)


def random_mdp(rng, n_states: int, n_actions: int, gamma: float = 0.9) -> FiniteMdp:
    """Dense random MDP: Dirichlet transition rows (all states reachable),
    rewards uniform in [-1, 1]."""
    transition = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    reward = rng.uniform(-1.0, 1.0, size=(n_states, n_actions))
    return FiniteMdp(transition=transition, reward=reward, gamma=gamma)


def random_gbm_instance(rng, max_states: int = 5):
    """Random (spec, chain) pair with strictly positive transition rows."""
    n = int(rng.integers(2, max_states + 1))
    chain = rng.dirichlet(np.ones(n), size=n)
    spec = GbmChainSpec(
        mu=rng.uniform(-0.05, 0.1, size=n),
        sigma=rng.uniform(0.0, 0.3, size=n),
        dt=1.0,
    )
    return spec, chain


def run_prop1_suite(
    seed: int = 0,
    n_instances: int = 5,
    n_seeds: int = 20,
    horizon: int = 10**5,
    stderr_factor: float = 3.0,
    variance_ratio_min: float = 1.7,
) -> SuiteResult:
    """Growth-rate law: per instance the cross-seed mean of the realized
    growth must land within stderr_factor standard errors of the analytic
    value, and doubling the horizon must cut the cross-seed variance (at
    least 1x per instance, variance_ratio_min on average)."""
    rng = np.random.default_rng(seed)
    result = SuiteResult(name="prop1", passed=True)
    result.lines.append(
        f"prop1 suite: seed={seed} instances={n_instances} seeds={n_seeds} horizon={horizon}"
    )
    ratios = []
    for i in range(n_instances):
        spec, chain = random_gbm_instance(rng)
        dist = stationary_distribution(chain)
        target = analytic_growth_rate(spec, dist)
        base = seed * 1_000_000 + i * 10_000
        rates = np.array([
            empirical_growth_rate(simulate_gbm_chain(spec, chain, horizon, 1.0, base + k))
            for k in range(n_seeds)
        ])
        rates_2x = np.array([
            empirical_growth_rate(simulate_gbm_chain(spec, chain, 2 * horizon, 1.0, base + 5_000 + k))
            for k in range(n_seeds)
        ])
        mean = float(rates.mean())
        stderr = float(rates.std(ddof=1) / np.sqrt(n_seeds))
        z = abs(mean - target) / stderr if stderr > 0 else np.inf
        ratio = float(rates.var(ddof=1) / rates_2x.var(ddof=1))
        ratios.append(ratio)
        ok = z <= stderr_factor and ratio >= 1.0
        result.lines.append(
            f"  instance {i}: states={spec.n_states} analytic={target:+.6f} "
            f"mc_mean={mean:+.6f} stderr={stderr:.2e} |z|={z:.2f} "
            f"var_ratio={ratio:.2f} [{'ok' if ok else 'FAIL'}]"
        )
        if not ok:
            result.passed = False
            result.failures.append({
                "suite": "prop1",
                "instance": i,
                "seed_base": base,
                "mu": spec.mu.tolist(),
                "sigma": spec.sigma.tolist(),
                "dt": spec.dt,
                "chain": chain.tolist(),
                "analytic": target,
                "mc_mean": mean,
                "stderr": stderr,
                "var_ratio": ratio,
            })
    mean_ratio = float(np.mean(ratios))
    ok = mean_ratio >= variance_ratio_min
    result.lines.append(
        f"  mean variance ratio (horizon doubling): {mean_ratio:.2f} "
        f"(need >= {variance_ratio_min}) [{'ok' if ok else 'FAIL'}]"
    )
    if not ok:
        result.passed = False
        result.failures.append({
            "suite": "prop1", "check": "variance_ratio",
            "mean_ratio": mean_ratio, "ratios": ratios,
        })
    result.lines.append(f"prop1: {'PASS' if result.passed else 'FAIL'}")
    return result


def run_prop2_suite(
    seed: int = 0,
    n_mdps: int = 5,
    n_pairs: int = 1000,
    gammas=(0.5, 0.9, 0.99),
    n_steps_grid=(1, 2, 3, 5),
    lams=(0.0, 0.5, 1.0),
    ratio_tol: float = 1e-9,
    tightness_tol: float = 1e-12,
    fp_tol: float = 1e-10,
) -> SuiteResult:
    """Contraction and fixed point of the blended backup.

    For every (gamma, n, lam) cell: all pair ratios <= gamma^n + ratio_tol,
    a constant-shift pair attains gamma^n to tightness_tol, and the fixed
    point's residual stays below 10 * fp_tol.
    """
    rng = np.random.default_rng(seed)
    result = SuiteResult(name="prop2", passed=True)
    result.lines.append(
        f"prop2 suite: seed={seed} mdps={n_mdps} pairs={n_pairs} "
        f"gammas={tuple(gammas)} n={tuple(n_steps_grid)} lam={tuple(lams)}"
    )
    for i in range(n_mdps):
        n_states = int(rng.integers(2, 7))
        n_actions = int(rng.integers(2, 4))
        base = random_mdp(rng, n_states, n_actions, gamma=0.9)
        growth = rng.normal(0.0, 1.0, size=(n_states, n_actions))
        pairs = [
            (
                rng.normal(0.0, 5.0, size=(n_states, n_actions)),
                rng.normal(0.0, 5.0, size=(n_states, n_actions)),
            )
            for _ in range(n_pairs)
        ]
        shift_base = rng.normal(0.0, 5.0, size=(n_states, n_actions))
        worst_excess = -np.inf
        worst_tightness = 0.0
        worst_residual = 0.0
        cell_ok = True
        for gamma in gammas:
            mdp = replace(base, gamma=gamma)
            for n in n_steps_grid:
                bound = gamma**n
                for lam in lams:
                    cfg = OperatorConfig(n_steps=n, lam=lam)
                    for q1, q2 in pairs:
                        ratio = contraction_ratio(mdp, growth, cfg, q1, q2)
                        worst_excess = max(worst_excess, ratio - bound)
                        if ratio > bound + ratio_tol:
                            cell_ok = False
                    tight = contraction_ratio(
                        mdp, growth, cfg, shift_base, shift_base + 0.75
                    )
                    worst_tightness = max(worst_tightness, abs(tight - bound))
                    if abs(tight - bound) > tightness_tol:
                        cell_ok = False
                    q_star = fixed_point(mdp, growth, cfg, tol=fp_tol)
                    residual = float(
                        np.max(np.abs(regularized_bellman_n(q_star, mdp, growth, cfg) - q_star))
                    )
                    worst_residual = max(worst_residual, residual)
                    if residual >= 10 * fp_tol:
                        cell_ok = False
        result.lines.append(
            f"  mdp {i}: S={n_states} A={n_actions} "
            f"max(ratio - gamma^n)={worst_excess:+.2e} "
            f"tightness_err={worst_tightness:.2e} fp_residual={worst_residual:.2e} "
            f"[{'ok' if cell_ok else 'FAIL'}]"
        )
        if not cell_ok:
            result.passed = False
            result.failures.append({
                "suite": "prop2",
                "mdp_index": i,
                "transition": base.transition.tolist(),
                "reward": base.reward.tolist(),
                "growth": growth.tolist(),
                "max_ratio_excess": worst_excess,
                "tightness_err": worst_tightness,
                "fp_residual": worst_residual,
            })
    result.lines.append(f"prop2: {'PASS' if result.passed else 'FAIL'}")
    return result


SUITES = {"prop1": run_prop1_suite, "prop2": run_prop2_suite}
