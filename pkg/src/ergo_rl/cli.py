"""Command-line experiment driver: seeded training and evaluation runs,
lambda sweeps, and the randomized verification suites.

Configs are JSON with ``env``, ``learner``, and optional ``eval`` /
``sweep`` / ``out_dir`` sections; see the README for the full schema.
Exit codes: 0 success, 1 runtime or property failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .envs import make_env
from .mdp import qtable_from_json, qtable_to_json
from .qlearning import LearnerConfig, TrainReport, greedy_policy, train, train_log_to_csv
from .verify import SUITES

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

# fixed offsets so training and evaluation consume distinct env streams
ENV_SEED_OFFSET = 1_000_003
EVAL_SEED_OFFSET = 2_000_003

logger = logging.getLogger("ergo_rl")


class ConfigError(Exception):
    """Invalid or incomplete experiment configuration."""


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top-level config must be a JSON object")
    return cfg


def _learner_config(cfg: dict, seed: int | None = None) -> LearnerConfig:
    if "learner" not in cfg:
        raise ConfigError("missing required config key: learner")
    try:
        return LearnerConfig.from_dict(cfg["learner"], seed=seed)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _build_env(cfg: dict, seed: int):
    if "env" not in cfg:
        raise ConfigError("missing required config key: env")
    try:
        return make_env(cfg["env"], seed=seed)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _build_eval_env(cfg: dict, seed: int, eval_horizon: int):
    env_cfg = dict(cfg.get("env", {}))
    if env_cfg.get("type") in ("coin_toss", "gbm_chain"):
        env_cfg["horizon"] = eval_horizon
    return _build_env({"env": env_cfg}, seed)


def _manifest_text(cfg: dict, seed: int) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    payload = {
        "config": cfg,
        "seed": seed,
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "version": __version__,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _write_train_artifacts(out: Path, cfg: dict, seed: int, report: TrainReport) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "qtable.json").write_text(qtable_to_json(report.final_q) + "\n")
    policy_lines = ["state,action"]
    policy_lines += [f"{s},{int(a)}" for s, a in enumerate(report.final_policy)]
    (out / "policy.csv").write_text("\n".join(policy_lines) + "\n")
    (out / "train_log.csv").write_text(train_log_to_csv(report))
    (out / "manifest.json").write_text(_manifest_text(cfg, seed))


@dataclass
class EvalSummary:
    """Greedy-policy evaluation over a fixed number of episodes."""

    cumulative_rewards: list[float]
    steps: list[int]
    terminal_wealths: list[float] | None
    median: float
    mean: float
    min: float
    max: float
    growth_rate: float | None

    def to_json(self) -> str:
        payload = {
            "n_episodes": len(self.cumulative_rewards),
            "median": self.median,
            "mean": self.mean,
            "min": self.min,
            "max": self.max,
            "growth_rate": self.growth_rate,
        }
        if self.terminal_wealths is not None:
            payload["median_terminal_wealth"] = float(np.median(self.terminal_wealths))
        return json.dumps(payload, indent=2, sort_keys=True)


def evaluate_policy(env, policy, n_episodes: int, horizon: int) -> EvalSummary:
    """Roll out the greedy policy for n_episodes of at most horizon steps."""
    policy = np.asarray(policy, dtype=np.int64)
    if policy.shape != (env.n_states,):
        raise ValueError("policy length must match the environment state count")
    has_wealth = hasattr(env, "wealth")
    rewards: list[float] = []
    steps_list: list[int] = []
    wealths: list[float] | None = [] if has_wealth else None
    growths: list[float] = []
    dt = getattr(env, "dt", 1.0)
    for _ in range(n_episodes):
        state = int(env.reset())
        total = 0.0
        steps = 0
        for _ in range(horizon):
            obs = env.step(int(policy[state]))
            total += obs.reward
            steps += 1
            state = int(obs.state)
            if obs.terminated:
                break
        rewards.append(total)
        steps_list.append(steps)
        if has_wealth:
            wealths.append(float(env.wealth))
            if steps > 0:
                growths.append(math.log(env.wealth / env.spec.r0) / (steps * dt))
            else:
                growths.append(0.0)
    arr = np.asarray(rewards)
    return EvalSummary(
        cumulative_rewards=rewards,
        steps=steps_list,
        terminal_wealths=wealths,
        median=float(np.median(arr)),
        mean=float(arr.mean()),
        min=float(arr.min()),
        max=float(arr.max()),
        growth_rate=float(np.mean(growths)) if has_wealth else None,
    )


def eval_csv_text(summary: EvalSummary) -> str:
    lines = ["episode,cumulative_reward,terminal_wealth,steps"]
    for i, (reward, steps) in enumerate(zip(summary.cumulative_rewards, summary.steps)):
        wealth = "" if summary.terminal_wealths is None else repr(summary.terminal_wealths[i])
        lines.append(f"{i},{reward!r},{wealth},{steps}")
    return "\n".join(lines) + "\n"


# -- commands -----------------------------------------------------------------

def cmd_train(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.get("learner", {}).get("seed", 0)
    lcfg = _learner_config(cfg, seed=seed)
    env = _build_env(cfg, seed=seed + ENV_SEED_OFFSET)
    out = Path(args.out) if args.out else Path(cfg.get("out_dir", "."))
    logger.info("training: %s steps on %s", lcfg.total_steps, cfg["env"].get("type"))
    report = train(env, lcfg)
    try:
        _write_train_artifacts(out, cfg, seed, report)
    except OSError as exc:
        print(f"error: cannot write artifacts to {out}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    logger.info("wrote artifacts to %s", out)
    print(f"trained {lcfg.total_steps} steps; {len(report.per_window_log)} updates; "
          f"artifacts in {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    try:
        qtable_text = Path(args.qtable).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read qtable {args.qtable}: {exc}") from exc
    q = qtable_from_json(qtable_text)
    eval_block = cfg.get("eval", {})
    n_episodes = int(eval_block.get("n_eval_episodes", 100))
    horizon = int(eval_block.get("eval_horizon", 1000))
    seed = args.seed if args.seed is not None else cfg.get("learner", {}).get("seed", 0)
    env = _build_eval_env(cfg, seed=seed + EVAL_SEED_OFFSET, eval_horizon=horizon)
    if q.shape != (env.n_states, env.n_actions):
        raise ValueError(
            f"qtable shape {q.shape} does not match environment "
            f"({env.n_states} states, {env.n_actions} actions)"
        )
    summary = evaluate_policy(env, greedy_policy(q), n_episodes, horizon)
    out = Path(args.out) if args.out else Path(cfg.get("out_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    (out / "eval.csv").write_text(eval_csv_text(summary))
    (out / "eval_summary.json").write_text(summary.to_json() + "\n")
    print(summary.to_json())
    return EXIT_OK


def run_sweep_cell(cfg: dict, lam: float, seed: int, cell_dir) -> dict:
    """Train and evaluate one (lambda, seed) cell; fully self-contained so
    cells can run in any order or in parallel."""
    cell_cfg = json.loads(json.dumps(cfg))  # deep copy, JSON-clean
    cell_cfg["learner"]["lambda"] = lam
    cell_cfg["learner"]["seed"] = seed
    lcfg = _learner_config(cell_cfg, seed=seed)
    env = _build_env(cell_cfg, seed=seed + ENV_SEED_OFFSET)
    report = train(env, lcfg)
    cell_dir = Path(cell_dir)
    _write_train_artifacts(cell_dir, cell_cfg, seed, report)
    eval_block = cfg.get("eval", {})
    n_episodes = int(eval_block.get("n_eval_episodes", 100))
    horizon = int(eval_block.get("eval_horizon", 1000))
    eval_env = _build_eval_env(cell_cfg, seed=seed + EVAL_SEED_OFFSET, eval_horizon=horizon)
    summary = evaluate_policy(eval_env, report.final_policy, n_episodes, horizon)
    (cell_dir / "eval.csv").write_text(eval_csv_text(summary))
    (cell_dir / "eval_summary.json").write_text(summary.to_json() + "\n")
    return {
        "lambda": lam,
        "seed": seed,
        "median": summary.median,
        "mean": summary.mean,
        "min": summary.min,
        "max": summary.max,
        "growth_rate": summary.growth_rate,
    }


def sweep_csv_text(rows: list[dict]) -> str:
    lines = ["lambda,seed,median,mean,min,max,growth_rate"]
    for row in rows:
        growth = "" if row["growth_rate"] is None else repr(row["growth_rate"])
        lines.append(
            f"{row['lambda']!r},{row['seed']},{row['median']!r},{row['mean']!r},"
            f"{row['min']!r},{row['max']!r},{growth}"
        )
    return "\n".join(lines) + "\n"


def _sweep_cells(cfg: dict) -> list[tuple[float, int]]:
    sweep = cfg.get("sweep")
    if not isinstance(sweep, dict):
        raise ConfigError("missing required config key: sweep")
    lambdas = sweep.get("lambdas")
    if not lambdas:
        raise ConfigError("missing required config key: sweep.lambdas")
    if any(not 0.0 <= float(lam) <= 1.0 for lam in lambdas):
        raise ConfigError("sweep.lambdas values must lie in [0, 1]")
    if "seeds" in sweep:
        seeds = [int(s) for s in sweep["seeds"]]
    else:
        base = int(cfg.get("learner", {}).get("seed", 0))
        seeds = [base + k for k in range(int(sweep.get("n_seeds", 1)))]
    if not seeds:
        raise ConfigError("sweep needs at least one seed")
    return [(float(lam), seed) for lam in lambdas for seed in seeds]


def _cell_dir(out: Path, lam: float, seed: int) -> Path:
    return out / f"cell_lambda{lam:g}_seed{seed}"


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    cells = _sweep_cells(cfg)
    out = Path(args.out) if args.out else Path(cfg.get("out_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    rows: dict[tuple[float, int], dict] = {}
    failures: list[dict] = []
    jobs = max(1, int(args.jobs))
    logger.info("sweep: %d cells, %d worker(s)", len(cells), jobs)
    if jobs == 1:
        for lam, seed in cells:
            try:
                rows[(lam, seed)] = run_sweep_cell(cfg, lam, seed, _cell_dir(out, lam, seed))
            except Exception as exc:  # noqa: BLE001 - per-cell isolation
                failures.append({"lambda": lam, "seed": seed, "error": str(exc)})
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                pool.submit(run_sweep_cell, cfg, lam, seed, _cell_dir(out, lam, seed)): (lam, seed)
                for lam, seed in cells
            }
            for future, (lam, seed) in futures.items():
                try:
                    rows[(lam, seed)] = future.result()
                except Exception as exc:  # noqa: BLE001
                    failures.append({"lambda": lam, "seed": seed, "error": str(exc)})
    ordered = [rows[cell] for cell in cells if cell in rows]
    (out / "sweep.csv").write_text(sweep_csv_text(ordered))
    print(f"sweep: {len(ordered)} of {len(cells)} cells completed; results in {out}/sweep.csv")
    if failures:
        (out / "failures.json").write_text(json.dumps(failures, indent=2))
        for failure in failures:
            print(f"cell lambda={failure['lambda']} seed={failure['seed']} failed: "
                  f"{failure['error']}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        print(
            f"unknown suite {args.suite!r}; available suites: {', '.join(sorted(SUITES))}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    kwargs = {} if args.seed is None else {"seed": args.seed}
    result = SUITES[args.suite](**kwargs)
    for line in result.lines:
        print(line)
    if not result.passed:
        out = Path(args.out) if args.out else Path(".")
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"verify_{args.suite}_failures.json"
        path.write_text(json.dumps(result.failures, indent=2))
        print(f"failing instances written to {path}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# -- entry point --------------------------------------------------------------

def _configure_logging() -> None:
    level_name = os.environ.get("ERGO_RL_LOG", "error").strip().lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level_name not in levels:
        print(
            f"warning: ERGO_RL_LOG must be one of {sorted(levels)}; using 'error'",
            file=sys.stderr,
        )
        level_name = "error"
    logging.basicConfig(level=levels[level_name], format="%(levelname)s %(name)s: %(message)s")
    logger.setLevel(levels[level_name])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ergo-rl",
        description="Train, evaluate, sweep, and verify growth-regularized tabular Q-learning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a policy from a JSON config")
    p_train.add_argument("config")
    p_train.add_argument("--out", help="artifact directory (default: config out_dir or .)")
    p_train.add_argument("--seed", type=int, help="override the config seed")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a stored Q-table greedily")
    p_eval.add_argument("qtable")
    p_eval.add_argument("config")
    p_eval.add_argument("--out", help="artifact directory")
    p_eval.add_argument("--seed", type=int, help="override the config seed")
    p_eval.set_defaults(func=cmd_eval)

    p_sweep = sub.add_parser("sweep", help="train+eval over lambda values x seeds")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--out", help="artifact directory")
    p_sweep.add_argument("--seed", type=int, help="unused for sweeps; cells use sweep seeds")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel cell workers")
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify", help="run a randomized verification suite")
    p_verify.add_argument("suite", help=f"one of: {', '.join(sorted(SUITES))}")
    p_verify.add_argument("--out", help="directory for failure dumps")
    p_verify.add_argument("--seed", type=int, help="suite RNG seed")
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
