"""Episode execution across solvers, metrics aggregation, and output files.

A scenario is a map, an agent count, a solver with its options, and a seed
list; one episode runs per seed. Reports are pure functions of the spec:
wall-clock decision timings go to a separate file so that metrics.csv and the
episode logs stay byte-identical across runs.
"""

import json
import time
from dataclasses import dataclass, replace
from pathlib import Path as FsPath
from typing import Dict, List, Optional, Tuple

import numpy as np
import torch

from .agent import SolverOptions, build_agent
from .costs import compute_static_costs, uniform_static_costs
from .env import Environment, EpisodeConfig, EpisodeLog, throughput
from .errors import CheckpointError, UsageError
from .grid import Grid
from .heatmap import emit_heatmap
from .maps import generate_maze, generate_random, load_map
from .nets import ARCH_FOLLOWER, ARCH_LITE, load_checkpoint, sample_action, PolicyOutput

SOLVERS = ("follower", "followerlite", "norl")


@dataclass(frozen=True)
class ScenarioSpec:
    map_source: str
    num_agents: int
    episode_length: int
    solver: str
    seeds: Tuple[int, ...]
    ckpt: Optional[str] = None
    use_static_costs: bool = True
    use_dynamic_costs: bool = True
    dyn_weight: float = 1.0
    greedy: bool = False
    obs_size: int = 11
    random_priority: bool = False
    batched: bool = False

    def validate(self):
        if self.solver not in SOLVERS:
            raise UsageError(f"unknown solver {self.solver!r}; choose from {SOLVERS}")
        if self.num_agents < 1:
            raise UsageError("agent count must be positive")
        if self.episode_length < 1:
            raise UsageError("episode length must be positive")
        if not self.seeds:
            raise UsageError("at least one seed required")
        if self.solver != "norl" and self.ckpt is None:
            raise CheckpointError(f"solver {self.solver!r} needs a checkpoint")


@dataclass
class MetricsReport:
    per_seed: List[Tuple[int, float, int]]  # (seed, throughput, goals)
    mean_throughput: float
    ci95: float
    mean_decision_ms: float
    total_goals: int

    def metrics_csv(self) -> str:
        lines = ["seed,throughput,goals"]
        for seed, tp, goals in self.per_seed:
            lines.append(f"{seed},{tp!r},{goals}")
        lines.append(f"mean,{self.mean_throughput!r},{self.total_goals}")
        lines.append(f"ci95,{self.ci95!r},")
        return "\n".join(lines) + "\n"

    def timings_csv(self) -> str:
        return (f"metric,value\nmean_decision_ms,{self.mean_decision_ms!r}\n")


def resolve_map(source: str) -> Grid:
    """A map file path or a generator spec gen:maze:WxH:SEED /
    gen:random:WxH:DENSITY:SEED."""
    if source.startswith("gen:"):
        parts = source.split(":")
        try:
            kind, dims = parts[1], parts[2]
            width, height = (int(v) for v in dims.lower().split("x"))
            if kind == "maze" and len(parts) == 4:
                return generate_maze(int(parts[3]), width, height)
            if kind == "random" and len(parts) == 5:
                return generate_random(int(parts[4]), width, height, float(parts[3]))
        except (IndexError, ValueError) as exc:
            raise UsageError(f"bad generator spec {source!r}: {exc}") from exc
        raise UsageError(f"bad generator spec {source!r}")
    try:
        text = FsPath(source).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read map {source!r}: {exc}") from exc
    return load_map(text)


def _load_solver_net(spec: ScenarioSpec):
    if spec.solver == "norl":
        return None
    net = load_checkpoint(spec.ckpt)
    expected = ARCH_FOLLOWER if spec.solver == "follower" else ARCH_LITE
    if net.arch_name != expected:
        raise CheckpointError(
            f"checkpoint holds a {net.arch_name} network, solver is {spec.solver}")
    net.eval()
    return net


def _build_static(grid: Grid, use_static: bool):
    return compute_static_costs(grid) if use_static else uniform_static_costs(grid)


def run_episode(grid: Grid, static, net, spec: ScenarioSpec, seed: int):
    """One seeded episode; returns (EpisodeLog, decision_seconds, decision_count)."""
    env = Environment(EpisodeConfig(
        grid=grid, num_agents=spec.num_agents, episode_length=spec.episode_length,
        seed=seed, obs_size=spec.obs_size, random_priority=spec.random_priority))
    observations = env.reset()
    options = SolverOptions(
        use_static_costs=spec.use_static_costs,
        use_dynamic_costs=spec.use_dynamic_costs,
        dyn_weight=spec.dyn_weight, greedy=spec.greedy)
    agents = [
        build_agent(i, grid, static,
                    np.random.Generator(np.random.PCG64(env.action_seeds[i])),
                    options, net)
        for i in range(spec.num_agents)
    ]
    decision_seconds = 0.0
    decision_count = 0
    n = spec.num_agents
    while not env.done:
        for i, agent in enumerate(agents):
            agent.set_goal(env.agent_goal(i))
        if spec.batched and net is not None:
            actions, elapsed = _decide_batched(agents, observations, net, options)
            decision_seconds += elapsed
            decision_count += n
        else:
            actions = np.empty(n, dtype=np.int64)
            for i, agent in enumerate(agents):
                tic = time.perf_counter()
                actions[i] = agent.act(observations[i])
                decision_seconds += time.perf_counter() - tic
                decision_count += 1
        observations, events = env.step(actions)
        for i, event in enumerate(events):
            if event.reached_goal:
                agents[i].on_goal_reached()
    return env.log, decision_seconds, decision_count


def _decide_batched(agents, observations, net, options):
    """One forward pass for all agents; identical math to per-agent calls."""
    tic = time.perf_counter()
    encoded = np.stack([agent.prepare_input(observations[i])
                        for i, agent in enumerate(agents)])
    x = torch.from_numpy(encoded)
    if net.recurrent:
        memory = torch.cat([
            agent.memory if agent.memory is not None
            else torch.zeros(1, net.memory_size)
            for agent in agents])
    else:
        memory = None
    with torch.no_grad():
        logits, values, memory = net(x, memory)
    logits64 = logits.double().numpy()
    actions = np.empty(len(agents), dtype=np.int64)
    for i, agent in enumerate(agents):
        if net.recurrent:
            agent.memory = memory[i:i + 1]
        out = PolicyOutput(logits=logits64[i], value=float(values[i]), memory=None)
        actions[i] = sample_action(out, agent.rng, greedy=options.greedy)
    return actions, time.perf_counter() - tic


def run_scenario(spec: ScenarioSpec) -> Tuple[MetricsReport, List[EpisodeLog]]:
    """One episode per seed, aggregated. A pure function of the spec apart
    from the wall-clock timing field."""
    spec.validate()
    grid = resolve_map(spec.map_source)
    net = _load_solver_net(spec)
    static = _build_static(grid, spec.use_static_costs)
    logs = []
    per_seed = []
    total_seconds = 0.0
    total_decisions = 0
    for seed in spec.seeds:
        log, seconds, count = run_episode(grid, static, net, spec, seed)
        logs.append(log)
        per_seed.append((seed, throughput(log), log.total_goals))
        total_seconds += seconds
        total_decisions += count
    values = np.array([tp for _, tp, _ in per_seed], dtype=np.float64)
    n = len(values)
    ci95 = float(1.96 * values.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    report = MetricsReport(
        per_seed=per_seed,
        mean_throughput=float(values.mean()),
        ci95=ci95,
        mean_decision_ms=1000.0 * total_seconds / max(total_decisions, 1),
        total_goals=int(sum(g for _, _, g in per_seed)),
    )
    return report, logs


def write_outputs(out_dir, report: MetricsReport, logs: List[EpisodeLog]):
    """metrics.csv, timings.csv, episode_<seed>.log, heatmap_<seed>.{csv,pnm}."""
    out = FsPath(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.csv").write_text(report.metrics_csv())
    (out / "timings.csv").write_text(report.timings_csv())
    for log in logs:
        (out / f"episode_{log.seed}.log").write_text(log_to_json(log))
        grid = Grid(np.array([[ch == "@" for ch in row] for row in log.map_rows]))
        emit_heatmap(log.visit_counts, grid,
                     out / f"heatmap_{log.seed}.csv", out / f"heatmap_{log.seed}.pnm")


def log_to_json(log: EpisodeLog) -> str:
    return json.dumps(log.to_json_dict(), sort_keys=True, separators=(",", ":")) + "\n"


def log_from_json(text: str) -> EpisodeLog:
    data = json.loads(text)
    h = len(data["map"])
    w = len(data["map"][0])
    return EpisodeLog(
        seed=data["seed"], num_agents=data["num_agents"],
        episode_length=data["episode_length"], obs_size=data["obs_size"],
        random_priority=data["random_priority"], map_rows=data["map"],
        starts=data["starts"], initial_goals=data["initial_goals"],
        executed=data["executed"], denied=data["denied"],
        reached=[(t, a) for t, a in data["reached"]],
        visit_counts=np.array(data["visit_counts"], dtype=np.int64).reshape(h, w),
        final_positions=data["final_positions"],
    )


ABLATION_VARIANTS = ("full", "norl", "no_dynamic", "no_static")


def ablation_matrix(base: ScenarioSpec) -> Dict[str, MetricsReport]:
    """The four component-removal variants over shared seeds."""
    variants = {
        "full": base,
        "norl": replace(base, solver="norl", ckpt=None),
        "no_dynamic": replace(base, use_dynamic_costs=False),
        "no_static": replace(base, use_static_costs=False),
    }
    return {name: run_scenario(spec)[0] for name, spec in variants.items()}


def ablation_csv(reports: Dict[str, MetricsReport]) -> str:
    lines = ["variant,mean_throughput,ci95,total_goals"]
    for name in ABLATION_VARIANTS:
        r = reports[name]
        lines.append(f"{name},{r.mean_throughput!r},{r.ci95!r},{r.total_goals}")
    return "\n".join(lines) + "\n"
