"""Experiment harness: seeded multi-run solves, policy evaluation, scaling
sweeps and the exact-vs-sampled verification suite, all driven by flags or
a JSON config file (flags win).

Results are CSV with a stable column set:
run, seed, domain, agents, T, N, K, backend, value_mean, value_ci95,
time_algo_s, time_sim_s, sim_steps, policy_nodes
(scaling adds sweep, norm_steps, fit_a, fit_b, fit_r2). Solver time is
split by accumulating a timer inside the simulator wrapper, so
time_algo_s excludes domain simulation while time_sim_s is exactly it.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import threading
import time
from dataclasses import dataclass, fields

import numpy as np

from .domains import DomainSpec, make_domain
from .exact import ExactBackend, exact_policy_value
from .heuristics import HeuristicPortfolio
from .improve import ImproveParams, decrspi
from .model import GenerativeSimulator
from .policy import deserialize_policy, serialize_policy
from .rngs import EVALUATE, stream
from .rollout import rollout_episodes
from .verify import run_all

CSV_COLUMNS = [
    "run", "seed", "domain", "agents", "T", "N", "K", "backend",
    "value_mean", "value_ci95", "time_algo_s", "time_sim_s", "sim_steps",
    "policy_nodes",
]
SCALING_EXTRAS = ["sweep", "norm_steps", "fit_a", "fit_b", "fit_r2"]


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    domain: str = "signalmatch"
    agents: int | None = None
    targets: int = 2
    horizon: int | None = None
    nodes: int = 3
    trials: int = 20
    seed: int = 0
    runs: int = 20
    mdp_share: float = 0.45
    min_improve: float = 1e-4
    max_rounds: int = 100
    backend: str = "rollout"
    episodes: int = 1000
    workers: int = 1
    out: str = "results.csv"
    policy_out: str = "policy.json"

    def __post_init__(self):
        for name in ("nodes", "trials", "runs", "max_rounds", "episodes", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive (got {getattr(self, name)})")
        if self.min_improve <= 0:
            raise ConfigError(f"min_improve must be positive (got {self.min_improve})")
        if not 0.0 <= self.mdp_share <= 1.0:
            raise ConfigError(f"mdp_share must be in [0, 1] (got {self.mdp_share})")
        if self.backend not in ("rollout", "exact"):
            raise ConfigError(f"backend must be rollout or exact (got {self.backend!r})")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigError(f"horizon must be positive (got {self.horizon})")

    def domain_spec(self) -> DomainSpec:
        try:
            return DomainSpec(self.domain, horizon=self.horizon, agents=self.agents,
                              targets=self.targets)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def improve_params(self) -> ImproveParams:
        return ImproveParams(min_improve=self.min_improve, max_rounds=self.max_rounds,
                             k_samples=self.trials, n_nodes=self.nodes)


class InstrumentedSimulator(GenerativeSimulator):
    """Counts and times every simulator call; safe under threaded rollouts."""

    def __init__(self, inner: GenerativeSimulator):
        self.inner = inner
        self.num_agents = inner.num_agents
        self.action_counts = inner.action_counts
        self.obs_counts = inner.obs_counts
        self.reward_range = inner.reward_range
        self.steps = 0
        self.resets = 0
        self.time_sim = 0.0
        self._lock = threading.Lock()

    def sample_initial(self, rng):
        t0 = time.perf_counter()
        s = self.inner.sample_initial(rng)
        dt = time.perf_counter() - t0
        with self._lock:
            self.resets += 1
            self.time_sim += dt
        return s

    def step(self, state, actions, rng):
        t0 = time.perf_counter()
        out = self.inner.step(state, actions, rng)
        dt = time.perf_counter() - t0
        with self._lock:
            self.steps += 1
            self.time_sim += dt
        return out

    def value_range(self, horizon):
        return self.inner.value_range(horizon)


def _ci95(samples) -> float:
    if len(samples) < 2:
        return 0.0
    return 1.96 * float(np.std(samples, ddof=1)) / math.sqrt(len(samples))


def _build(config: RunConfig):
    spec = config.domain_spec()
    sim, model = make_domain(spec)
    if config.backend == "exact" and model is None:
        raise ConfigError(f"backend exact needs a tabular model; domain {config.domain} "
                          f"at this size has none")
    portfolio = HeuristicPortfolio(sim, model, horizon=spec.horizon,
                                   mdp_share=config.mdp_share)
    return spec, sim, model, portfolio


def _write_csv(path: str, columns: list[str], rows: list[dict]):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _solve_once(config: RunConfig, spec, sim, model, portfolio, seed: int):
    """One instrumented solve; returns (result, row dict without run index)."""
    inst = InstrumentedSimulator(sim)
    backend = ExactBackend(model) if config.backend == "exact" else None
    t0 = time.perf_counter()
    result = decrspi(inst, portfolio, spec.horizon, config.improve_params(), seed,
                     backend=backend, workers=config.workers)
    wall = time.perf_counter() - t0
    if config.backend == "exact":
        start = (result.policy.start_node,) * result.policy.num_agents
        value_mean = exact_policy_value(model, model.b0(), result.policy, 1, start)
        ci = 0.0
    else:
        est = rollout_episodes(sim, result.policy, config.episodes,
                               stream(seed, EVALUATE), keep_samples=True,
                               workers=config.workers)
        value_mean = est.mean
        ci = _ci95(est.per_sample)
    row = {
        "seed": seed,
        "domain": config.domain,
        "agents": sim.num_agents,
        "T": spec.horizon,
        "N": config.nodes,
        "K": config.trials,
        "backend": config.backend,
        "value_mean": repr(value_mean),
        "value_ci95": repr(ci),
        "time_algo_s": f"{max(wall - inst.time_sim, 0.0):.6f}",
        "time_sim_s": f"{inst.time_sim:.6f}",
        "sim_steps": inst.steps,
        "policy_nodes": result.policy.node_count(),
    }
    return result, value_mean, row


def run_solve(config: RunConfig) -> list[dict]:
    """Solve `runs` times with consecutive seeds; write one CSV row per run
    and save the best policy."""
    spec, sim, model, portfolio = _build(config)
    rows = []
    best_value, best_result, best_seed = -np.inf, None, None
    for run in range(config.runs):
        seed = config.seed + run
        result, value, row = _solve_once(config, spec, sim, model, portfolio, seed)
        row["run"] = run
        rows.append(row)
        if value > best_value:
            best_value, best_result, best_seed = value, result, seed
        print(f"run {run} seed {seed} value {value:.4f} "
              f"(algo {row['time_algo_s']}s, sim {row['time_sim_s']}s)")
    _write_csv(config.out, CSV_COLUMNS, rows)
    with open(config.policy_out, "w") as fh:
        fh.write(serialize_policy(best_result.policy, domain=config.domain, seed=best_seed))
    print(f"wrote {config.out} and {config.policy_out} (best value {best_value:.4f})")
    return rows


def run_evaluate(policy_file: str, config: RunConfig) -> dict:
    """Monte-Carlo evaluation of a stored policy: mean return and 95% CI."""
    with open(policy_file) as fh:
        policy = deserialize_policy(fh.read())
    spec = config.domain_spec()
    if spec.horizon != policy.T and config.horizon is not None:
        raise ConfigError(f"horizon {config.horizon} does not match policy T={policy.T}")
    spec = DomainSpec(config.domain, horizon=policy.T, agents=config.agents,
                      targets=config.targets)
    sim, _ = make_domain(spec)
    if policy.num_agents != sim.num_agents:
        raise ConfigError(f"policy has {policy.num_agents} agents, domain has "
                          f"{sim.num_agents}")
    for i, pol in enumerate(policy.agents):
        if pol.num_actions != sim.action_counts[i] or pol.num_obs != sim.obs_counts[i]:
            raise ConfigError(f"agent {i} action/observation counts do not match domain")
    est = rollout_episodes(sim, policy, config.episodes, stream(config.seed, EVALUATE),
                           keep_samples=True, workers=config.workers)
    ci = _ci95(est.per_sample)
    row = {
        "run": 0,
        "seed": config.seed,
        "domain": config.domain,
        "agents": sim.num_agents,
        "T": policy.T,
        "N": policy.N,
        "K": config.episodes,
        "backend": "evaluate",
        "value_mean": repr(est.mean),
        "value_ci95": repr(ci),
        "time_algo_s": "0.000000",
        "time_sim_s": "0.000000",
        "sim_steps": est.steps,
        "policy_nodes": policy.node_count(),
    }
    _write_csv(config.out, CSV_COLUMNS, [row])
    print(f"mean {est.mean:.4f} +- {ci:.4f} over {config.episodes} episodes")
    return row


def _linear_fit(xs, ys) -> tuple[float, float, float]:
    """Least-squares slope, intercept, R^2."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(xs, ys, 1)
    pred = slope * xs + intercept
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def run_scaling(config: RunConfig, agent_counts=None, horizons=None) -> list[dict]:
    """Sweep agent count (sensor network) or horizon and record, per point,
    the solve timings plus the per-layer normalized simulator step count.

    norm_steps sums, over layers t, the mean steps per evaluation trajectory
    launched at t; one K-trajectory batch per layer costs exactly T-t+1
    steps per trajectory, so the sum tracks (T^2+T)/2.
    """
    if bool(agent_counts) == bool(horizons):
        raise ConfigError("scaling needs exactly one of agent list or horizon list")
    rows = []
    points = agent_counts if agent_counts else horizons
    sweep = "agents" if agent_counts else "horizon"
    for idx, point in enumerate(points):
        cfg = RunConfig(**{**_as_dict(config),
                           "agents": point if agent_counts else config.agents,
                           "horizon": config.horizon if agent_counts else point,
                           "runs": 1})
        spec, sim, model, portfolio = _build(cfg)
        result, value, row = _solve_once(cfg, spec, sim, model, portfolio, cfg.seed)
        norm = sum(
            result.stats.eval_steps[t] / result.stats.eval_trajs[t]
            for t in result.stats.eval_steps
        )
        row.update({"run": idx, "sweep": sweep, "norm_steps": f"{norm:.3f}",
                    "fit_a": "", "fit_b": "", "fit_r2": ""})
        rows.append(row)
        print(f"{sweep}={point}: value {value:.4f}, algo {row['time_algo_s']}s, "
              f"norm_steps {norm:.1f}")
    summary = {c: "" for c in CSV_COLUMNS + SCALING_EXTRAS}
    summary.update({"run": "fit", "domain": config.domain, "sweep": sweep})
    if agent_counts:
        slope, intercept, r2 = _linear_fit(
            agent_counts, [float(r["time_algo_s"]) for r in rows]
        )
        summary.update({"fit_a": repr(slope), "fit_b": repr(intercept),
                        "fit_r2": repr(r2)})
        print(f"time_algo vs agents: slope {slope:.4f}, R^2 {r2:.4f}")
    else:
        devs = [
            abs(float(r["norm_steps"]) - (t * t + t) / 2) / ((t * t + t) / 2)
            for r, t in zip(rows, horizons)
        ]
        summary.update({"fit_a": repr(max(devs))})
        print(f"max relative deviation from (T^2+T)/2: {max(devs):.4f}")
    rows.append(summary)
    _write_csv(config.out, CSV_COLUMNS + SCALING_EXTRAS, rows)
    return rows


def run_oracle(config: RunConfig) -> bool:
    """Exact-vs-sampled verification suite on an oracle-capable domain."""
    spec, sim, model, _ = _build(config)
    if model is None:
        raise ConfigError(f"domain {config.domain} has no tabular model to verify against")
    ok = True
    for check in run_all(model, sim, seed=config.seed):
        status = "PASS" if check.passed else "FAIL"
        print(f"[{status}] {check.name}: {check.detail}")
        ok &= check.passed
    return ok


def _as_dict(config: RunConfig) -> dict:
    return {f.name: getattr(config, f.name) for f in fields(RunConfig)}


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--domain", help="signalmatch | meetinggrid | dsn")
    parser.add_argument("--agents", help="agent count; comma list for scaling sweeps")
    parser.add_argument("--horizon", help="episode length T; comma list for sweeps")
    parser.add_argument("--nodes", type=int, help="policy nodes per layer (default 3)")
    parser.add_argument("--trials", type=int, help="samples K per estimate (default 20)")
    parser.add_argument("--seed", type=int, help="root seed (default 0)")
    parser.add_argument("--runs", type=int, help="independent solves (default 20)")
    parser.add_argument("--mdp-share", type=float, dest="mdp_share",
                        help="probability of the MDP heuristic (default 0.45)")
    parser.add_argument("--min-improve", type=float, dest="min_improve",
                        help="acceptance threshold (default 1e-4)")
    parser.add_argument("--max-rounds", type=int, dest="max_rounds",
                        help="sweep cap per (layer, node) (default 100)")
    parser.add_argument("--backend", help="rollout | exact")
    parser.add_argument("--episodes", type=int, help="evaluation episodes (default 1000)")
    parser.add_argument("--workers", type=int, help="rollout threads (default 1)")
    parser.add_argument("--targets", type=int, help="sensor-network targets (default 2)")
    parser.add_argument("--out", help="results CSV path")
    parser.add_argument("--policy-out", dest="policy_out", help="policy JSON path")
    parser.add_argument("--config", help="JSON config file; flags override it")


def load_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_values = json.load(fh)
        unknown = set(file_values) - {f.name for f in fields(RunConfig)}
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        values.update(file_values)
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    for name in ("agents", "horizon"):
        if isinstance(values.get(name), str):
            parts = _int_list(values[name])
            if len(parts) != 1:
                raise ConfigError(f"{name} must be a single integer here (got {values[name]!r})")
            values[name] = parts[0]
    return RunConfig(**values)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="decrspi",
        description="Learn decentralized joint policies from a black-box simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, txt in [
        ("solve", "run seeded solves and write results + the best policy"),
        ("evaluate", "Monte-Carlo evaluation of a stored policy"),
        ("scaling", "agent-count or horizon sweeps with timing splits"),
        ("oracle", "exact-vs-sampled verification suite"),
    ]:
        p = sub.add_parser(name, help=txt)
        _add_common(p)
        if name == "evaluate":
            p.add_argument("policy_file")
    args = parser.parse_args(argv)
    try:
        if args.command == "scaling":
            agent_counts = horizons = None
            if getattr(args, "agents", None) and "," in args.agents:
                agent_counts = _int_list(args.agents)
                args.agents = None
            if getattr(args, "horizon", None) and "," in str(args.horizon):
                horizons = _int_list(args.horizon)
                args.horizon = None
            config = load_config(args)
            run_scaling(config, agent_counts=agent_counts, horizons=horizons)
        else:
            config = load_config(args)
            if args.command == "solve":
                run_solve(config)
            elif args.command == "evaluate":
                run_evaluate(args.policy_file, config)
            else:
                if not run_oracle(config):
                    return 1
    except (ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
