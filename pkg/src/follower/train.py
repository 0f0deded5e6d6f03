"""Training entry point: config parsing, the collect/update loop, validation.

Config files are flat `key = value` text; keys match TrainConfig fields.
Unset keys fall back to the published defaults of the chosen architecture.
The training log is a CSV with one row per update; validation throughput is
filled in every `val_interval` updates and left empty otherwise.
"""

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import List, Optional

import numpy as np
import torch

from .agent import SolverOptions
from .costs import compute_static_costs
from .errors import UsageError
from .nets import ARCH_FOLLOWER, ARCH_LITE, build_network, save_checkpoint
from .ppo import ppo_update
from .rollout import EnvRunner, collect_rollouts
from .scenario import ScenarioSpec, resolve_map, run_episode
from .env import throughput as episode_throughput

LOG_COLUMNS = ("step", "mean_reward", "surrogate_loss", "value_loss",
               "entropy", "clip_fraction", "val_throughput")


@dataclass
class TrainConfig:
    arch: str = ARCH_FOLLOWER
    learning_rate: float = 0.00022
    gamma: float = 0.976
    gae_lambda: float = 0.95
    clip_ratio: float = 0.2
    batch_size: int = 16384
    optimization_epochs: int = 1
    entropy_coef: float = 0.023
    value_loss_coef: float = 0.5
    recurrence_rollout: int = 8
    max_grad_norm: float = 0.5
    num_workers: int = 8
    envs_per_worker: int = 4
    agents_per_env: List[int] = field(default_factory=lambda: [128, 256])
    total_steps: int = 1_000_000_000
    seed: int = 0
    maps: List[str] = field(default_factory=lambda: ["gen:maze:65x65:auto"])
    episode_length: int = 512
    obs_size: int = 11
    segment_length: int = 64
    val_interval: int = 10
    val_map: str = ""
    val_agents: int = 0
    val_seeds: List[int] = field(default_factory=lambda: [0, 1])
    checkpoint_interval: int = 50
    run_dir: str = "runs/default"

    @property
    def num_envs(self) -> int:
        return self.num_workers * self.envs_per_worker


# Published per-architecture defaults; file entries override them.
ARCH_DEFAULTS = {
    ARCH_FOLLOWER: dict(learning_rate=0.00022, gamma=0.976, entropy_coef=0.023,
                        recurrence_rollout=8, num_workers=8,
                        total_steps=1_000_000_000),
    ARCH_LITE: dict(learning_rate=0.000133, gamma=0.971, entropy_coef=0.0157,
                    recurrence_rollout=1, num_workers=4,
                    total_steps=20_000_000),
}

_LIST_INT_FIELDS = {"agents_per_env", "val_seeds"}
_LIST_STR_FIELDS = {"maps"}


def parse_train_config(text: str) -> TrainConfig:
    entries = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {line_no}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        entries[key] = value
    arch = entries.get("arch", ARCH_FOLLOWER)
    if arch not in ARCH_DEFAULTS:
        raise UsageError(f"unknown arch {arch!r}")
    cfg = TrainConfig(arch=arch, **ARCH_DEFAULTS[arch])
    fields = {f.name: f for f in dataclasses.fields(TrainConfig)}
    for key, value in entries.items():
        if key not in fields:
            raise UsageError(f"unknown config key {key!r}")
        setattr(cfg, key, _coerce(key, value, fields[key].type))
    return cfg


def _coerce(key: str, value: str, annotation):
    if key in _LIST_INT_FIELDS:
        return [int(v) for v in value.split(",") if v.strip()]
    if key in _LIST_STR_FIELDS:
        return [v.strip() for v in value.split(",") if v.strip()]
    if annotation in (int, "int"):
        return int(value)
    if annotation in (float, "float"):
        return float(value)
    if annotation in (bool, "bool"):
        return value.lower() in ("1", "true", "yes")
    return value


def load_train_config(path) -> TrainConfig:
    return parse_train_config(FsPath(path).read_text())


def _build_runners(cfg: TrainConfig, net) -> List[EnvRunner]:
    options = SolverOptions()
    runners = []
    static_cache = {}
    for idx in range(cfg.num_envs):
        source = cfg.maps[idx % len(cfg.maps)]
        if source.endswith(":auto"):
            source = source[:-len("auto")] + str(cfg.seed * 1000 + idx)
        if source not in static_cache:
            grid = resolve_map(source)
            static_cache[source] = (grid, compute_static_costs(grid))
        grid, static = static_cache[source]
        agents = cfg.agents_per_env[idx % len(cfg.agents_per_env)]
        runners.append(EnvRunner(
            env_index=idx, grid=grid, static=static, num_agents=agents,
            episode_length=cfg.episode_length, train_seed=cfg.seed,
            net=net, options=options, obs_size=cfg.obs_size))
    return runners


def _validate(cfg: TrainConfig, net, ckpt_path) -> float:
    """Seeded evaluation episodes with the current weights."""
    save_checkpoint(net, ckpt_path)
    spec = ScenarioSpec(
        map_source=cfg.val_map, num_agents=cfg.val_agents,
        episode_length=cfg.episode_length,
        solver="follower" if cfg.arch == ARCH_FOLLOWER else "followerlite",
        seeds=tuple(cfg.val_seeds), ckpt=str(ckpt_path), batched=True)
    grid = resolve_map(cfg.val_map)
    static = compute_static_costs(grid)
    net.eval()
    tps = []
    for seed in cfg.val_seeds:
        log, _, _ = run_episode(grid, static, net, spec, seed)
        tps.append(episode_throughput(log))
    return float(np.mean(tps))


def train(config: TrainConfig):
    """Run the full loop; returns (final checkpoint path, training log path)."""
    run_dir = FsPath(config.run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(config.seed)
    net = build_network(config.arch, seed=config.seed)
    optimizer = torch.optim.Adam(net.parameters(), lr=config.learning_rate)
    shuffle_rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=config.seed, spawn_key=(0xC0FFEE,))))
    runners = _build_runners(config, net)
    width = sum(r.num_agents for r in runners)
    steps_per_iter = width * config.segment_length

    log_path = run_dir / "train_log.csv"
    final_path = run_dir / "final.ckpt"
    rows = [",".join(LOG_COLUMNS)]
    steps = 0
    update = 0
    while steps < config.total_steps:
        buffer = collect_rollouts(runners, net, config.segment_length,
                                  recurrence=config.recurrence_rollout)
        stats = ppo_update(net, optimizer, buffer, config, shuffle_rng)
        steps += steps_per_iter
        update += 1
        val = ""
        if cfg_has_validation(config) and update % config.val_interval == 0:
            val = repr(_validate(config, net, run_dir / "val.ckpt"))
        rows.append(f"{steps},{stats.mean_reward!r},{stats.surrogate_loss!r},"
                    f"{stats.value_loss!r},{stats.entropy!r},"
                    f"{stats.clip_fraction!r},{val}")
        if update % config.checkpoint_interval == 0:
            save_checkpoint(net, run_dir / f"ckpt_{steps}.ckpt")
        log_path.write_text("\n".join(rows) + "\n")
    save_checkpoint(net, final_path)
    log_path.write_text("\n".join(rows) + "\n")
    return final_path, log_path


def cfg_has_validation(cfg: TrainConfig) -> bool:
    return bool(cfg.val_map) and cfg.val_agents > 0
