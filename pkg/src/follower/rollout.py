"""Rollout collection for training: parallel environments, one shared policy.

Environments advance in lockstep; every step the encoded inputs of all agents
across all environments are batched through a single forward pass. Each
environment auto-resets at its episode boundary with a fresh seed from its
own deterministic chain, so the recorded trajectories are a pure function of
the training seed regardless of scheduling.
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import torch

from .agent import PolicyAgent, SolverOptions, compute_reward
from .costs import StaticCostField
from .env import Environment, EpisodeConfig
from .grid import Grid
from .nets import sample_action, PolicyOutput


def derive_env_seed(train_seed: int, env_index: int, episode_index: int) -> int:
    """Stable 64-bit episode seed from (training seed, env, episode)."""
    ss = np.random.SeedSequence(entropy=train_seed,
                                spawn_key=(env_index, episode_index))
    state = ss.generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


class EnvRunner:
    """One environment plus its policy agents, auto-resetting between episodes."""

    def __init__(self, env_index: int, grid: Grid, static: StaticCostField,
                 num_agents: int, episode_length: int, train_seed: int,
                 net, options: SolverOptions, obs_size: int = 11):
        self.env_index = env_index
        self.grid = grid
        self.static = static
        self.num_agents = num_agents
        self.episode_length = episode_length
        self.train_seed = train_seed
        self.net = net
        self.options = options
        self.obs_size = obs_size
        self.episode_index = 0
        self.env: Optional[Environment] = None
        self.agents: List[PolicyAgent] = []
        self.observations = None
        self._start_episode()

    def _start_episode(self):
        seed = derive_env_seed(self.train_seed, self.env_index, self.episode_index)
        self.episode_index += 1
        self.env = Environment(EpisodeConfig(
            grid=self.grid, num_agents=self.num_agents,
            episode_length=self.episode_length, seed=seed,
            obs_size=self.obs_size))
        self.observations = self.env.reset()
        self.agents = [
            PolicyAgent(i, self.grid, self.static,
                        np.random.Generator(np.random.PCG64(self.env.action_seeds[i])),
                        self.options, self.net)
            for i in range(self.num_agents)
        ]

    def prepare_inputs(self) -> np.ndarray:
        for i, agent in enumerate(self.agents):
            agent.set_goal(self.env.agent_goal(i))
        return np.stack([agent.prepare_input(self.observations[i])
                         for i, agent in enumerate(self.agents)])

    def memories(self) -> Optional[torch.Tensor]:
        if not self.net.recurrent:
            return None
        return torch.cat([a.memory if a.memory is not None
                          else torch.zeros(1, self.net.memory_size)
                          for a in self.agents])

    def apply(self, actions: np.ndarray):
        """Step the env with sampled actions; returns (rewards, dones)."""
        prev_positions = [self.env.agent_position(i) for i in range(self.num_agents)]
        self.observations, events = self.env.step(actions)
        rewards = np.zeros(self.num_agents, dtype=np.float32)
        for i, agent in enumerate(self.agents):
            new_position = self.env.agent_position(i)
            rewards[i] = compute_reward(prev_positions[i], new_position, agent.waypoint)
            if events[i].reached_goal:
                agent.on_goal_reached()
        done = self.env.done
        dones = np.full(self.num_agents, float(done), dtype=np.float32)
        if done:
            self._start_episode()
        return rewards, dones

    def peek_values(self) -> np.ndarray:
        """Value estimates of the current states without disturbing agent state."""
        snapshots = [(a.dyn.counts.copy(), a.path, a.waypoint) for a in self.agents]
        encoded = self.prepare_inputs()
        x = torch.from_numpy(encoded)
        with torch.no_grad():
            _, values, _ = self.net(x, self.memories())
        for agent, (counts, path, waypoint) in zip(self.agents, snapshots):
            agent.dyn.counts = counts
            agent.path = path
            agent.waypoint = waypoint
        return values.numpy().astype(np.float32)


@dataclass
class RolloutBuffer:
    """Time-major trajectory data for one PPO iteration."""

    obs: np.ndarray               # (T, B, 2, k, k) float32
    actions: np.ndarray           # (T, B) int64
    log_probs: np.ndarray         # (T, B) float32 (behaviour policy)
    values: np.ndarray            # (T, B) float32
    rewards: np.ndarray           # (T, B) float32
    dones: np.ndarray             # (T, B) float32
    bootstrap_values: np.ndarray  # (B,) float32
    initial_memories: Optional[np.ndarray]  # (chunks, B, H) float32 at chunk starts

    @property
    def segment_length(self) -> int:
        return self.obs.shape[0]

    @property
    def batch_width(self) -> int:
        return self.obs.shape[1]


def collect_rollouts(runners: List[EnvRunner], net, segment_length: int,
                     recurrence: int = 1) -> RolloutBuffer:
    """Advance every runner `segment_length` steps under the shared policy."""
    if net.recurrent and segment_length % recurrence != 0:
        raise ValueError("segment_length must be a multiple of the recurrence rollout")
    obs_l, act_l, logp_l, val_l, rew_l, done_l, mem_l = [], [], [], [], [], [], []
    for t in range(segment_length):
        encoded = np.concatenate([r.prepare_inputs() for r in runners])
        if net.recurrent and t % recurrence == 0:
            mems = torch.cat([r.memories() for r in runners])
            mem_l.append(mems.numpy().astype(np.float32))
        x = torch.from_numpy(encoded)
        memory = (torch.cat([r.memories() for r in runners])
                  if net.recurrent else None)
        with torch.no_grad():
            logits, values, memory = net(x, memory)
            log_probs = torch.log_softmax(logits, dim=-1)
        logits64 = logits.double().numpy()
        actions = np.empty(len(encoded), dtype=np.int64)
        offset = 0
        rewards, dones = [], []
        for runner in runners:
            n = runner.num_agents
            for j, agent in enumerate(runner.agents):
                out = PolicyOutput(logits=logits64[offset + j], value=0.0, memory=None)
                actions[offset + j] = sample_action(out, agent.rng,
                                                    greedy=runner.options.greedy)
                if net.recurrent:
                    agent.memory = memory[offset + j:offset + j + 1]
            r, d = runner.apply(actions[offset:offset + n])
            rewards.append(r)
            dones.append(d)
            offset += n
        obs_l.append(encoded)
        act_l.append(actions)
        taken = log_probs[torch.arange(len(actions)), torch.from_numpy(actions)]
        logp_l.append(taken.numpy().astype(np.float32))
        val_l.append(values.numpy().astype(np.float32))
        rew_l.append(np.concatenate(rewards))
        done_l.append(np.concatenate(dones))
    bootstrap = np.concatenate([r.peek_values() for r in runners])
    return RolloutBuffer(
        obs=np.stack(obs_l), actions=np.stack(act_l),
        log_probs=np.stack(logp_l), values=np.stack(val_l),
        rewards=np.stack(rew_l), dones=np.stack(done_l),
        bootstrap_values=bootstrap,
        initial_memories=np.stack(mem_l) if mem_l else None,
    )
