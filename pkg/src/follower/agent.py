"""Per-agent decision pipelines.

`PolicyAgent` runs the two-stage loop: accumulate dynamic costs from the
current observation, re-plan when the waypoint was reached or the agent left
its path (or the goal changed), encode, run the network, sample. It owns all
mutable per-agent state (dynamic costs, path, reward anchor, recurrent
memory, RNG stream) and never sees other agents' goals or paths.

`SearchAgent` is the learning-free variant: it re-plans every step treating
observed agents as temporary obstacles and takes the first move of the path,
falling back to a random action when boxed in.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .costs import (DynamicCostField, StaticCostField, update_dynamic_costs)
from .encoder import center_crop, encode_observation
from .env import Observation
from .errors import ScenarioError
from .grid import Action, Cell, Grid, action_between
from .nets import policy_step, sample_action
from .planning import Path, needs_replan, next_waypoint, plan_path
from ._kernels import backend as _kb

WAYPOINT_REWARD = 0.01


def compute_reward(prev_position: Cell, new_position: Cell, waypoint: Optional[Cell]) -> float:
    """Reward for arriving at the waypoint that was current when acting."""
    if waypoint is not None and new_position == waypoint:
        return WAYPOINT_REWARD
    return 0.0


@dataclass
class SolverOptions:
    use_static_costs: bool = True
    use_dynamic_costs: bool = True
    dyn_weight: float = 1.0
    greedy: bool = False


class _AgentBase:
    def __init__(self, agent_id: int, grid: Grid, static: StaticCostField,
                 rng: np.random.Generator, options: SolverOptions):
        self.id = agent_id
        self.grid = grid
        self.static = static
        self.rng = rng
        self.options = options
        self.dyn = DynamicCostField.zeros(grid)
        self.goal: Optional[Cell] = None

    def set_goal(self, goal: Cell):
        self.goal = goal

    def on_goal_reached(self):
        """Arriving at a goal clears the accumulated dynamic costs."""
        self.dyn.reset()

    def _observe_costs(self, obs: Observation):
        if self.options.use_dynamic_costs:
            update_dynamic_costs(self.dyn, obs)

    def _plan_dyn(self):
        return self.dyn if self.options.use_dynamic_costs else None


class PolicyAgent(_AgentBase):
    """Plan-then-follow agent driven by a shared policy network."""

    def __init__(self, agent_id, grid, static, rng, options, net):
        super().__init__(agent_id, grid, static, rng, options)
        self.net = net
        self.memory = None
        self.path: Optional[Path] = None
        self.waypoint: Optional[Cell] = None

    def reset_episode(self):
        self.memory = None
        self.path = None
        self.waypoint = None
        self.dyn.reset()

    def prepare_input(self, obs: Observation) -> np.ndarray:
        """Costs, re-planning, and encoding; everything before the network."""
        if self.goal is None:
            raise ScenarioError(f"agent {self.id} has no goal")
        self._observe_costs(obs)
        position = obs.center
        if (self.path is None or self.path.goal != self.goal
                or needs_replan(self.path, position)):
            self.path = plan_path(self.grid, self.static, self._plan_dyn(),
                                  position, self.goal,
                                  dyn_weight=self.options.dyn_weight)
            if self.path is None:
                raise ScenarioError(
                    f"agent {self.id}: goal {self.goal} unreachable from {position}")
            self.waypoint = next_waypoint(self.path, position)
        encoded = encode_observation(obs, self.path)
        if self.net.input_size != encoded.shape[-1]:
            encoded = center_crop(encoded, self.net.input_size)
        return encoded

    def act(self, obs: Observation) -> Action:
        encoded = self.prepare_input(obs)
        out = policy_step(self.net, encoded, self.memory)
        self.memory = out.memory
        return Action(sample_action(out, self.rng, greedy=self.options.greedy))


class SearchAgent(_AgentBase):
    """Re-plans around observed agents each step; no learned component."""

    def reset_episode(self):
        self.dyn.reset()

    def act(self, obs: Observation) -> Action:
        if self.goal is None:
            raise ScenarioError(f"agent {self.id} has no goal")
        self._observe_costs(obs)
        position = obs.center
        path = self._plan_blocking_agents(obs, position)
        if path is None or len(path.cells) < 2:
            return Action(int(self.rng.integers(len(Action))))
        return action_between(position, path.cells[1])

    def _plan_blocking_agents(self, obs: Observation, position: Cell):
        """A* with observed agents' cells (except self) turned into obstacles."""
        m = obs.agents.shape[0]
        radius = m // 2
        blocked = self.grid._blocked_u8.copy()
        rows, cols = np.nonzero(obs.agents)
        cr, cc = position
        h, w = blocked.shape
        for r, c in zip(rows, cols):
            if r == radius and c == radius:
                continue
            gr, gc = cr + (r - radius), cc + (c - radius)
            if 0 <= gr < h and 0 <= gc < w:
                blocked[gr, gc] = 1
        if blocked[self.goal[0], self.goal[1]]:
            return None
        weights = self.static.cost + self.options.dyn_weight * self._dyn_counts()
        flat = _kb().astar(blocked, weights, self.grid.to_flat(position),
                           self.grid.to_flat(self.goal), 1.0)
        if flat is None:
            return None
        return Path(cells=tuple(self.grid.to_cell(int(i)) for i in flat))

    def _dyn_counts(self):
        if self.options.use_dynamic_costs:
            return self.dyn.counts
        return 0


def build_agent(agent_id: int, grid: Grid, static: StaticCostField,
                rng: np.random.Generator, options: SolverOptions,
                net=None):
    if net is None:
        return SearchAgent(agent_id, grid, static, rng, options)
    return PolicyAgent(agent_id, grid, static, rng, options, net)
