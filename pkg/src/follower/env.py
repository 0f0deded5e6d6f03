"""Deterministic lifelong grid environment.

Agents move simultaneously on a shared 4-connected grid. Conflicting moves
are revoked (the contested cell goes to one winner, everyone else stays put,
denials cascade), an agent reaching its goal is immediately assigned a fresh
random reachable one, and every source of randomness is derived from the
episode seed: stream 0 drives start/initial-goal sampling, stream i+1 belongs
to agent i (goal resampling, optional per-step priority draws, and the
caller's action sampling).
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import ScenarioError, UsageError
from .grid import ACTION_DELTAS, NUM_ACTIONS, Action, Cell, Grid
from ._kernels._pure import resolve_moves


@dataclass(frozen=True)
class EpisodeConfig:
    grid: Grid
    num_agents: int
    episode_length: int
    seed: int
    obs_size: int = 11
    random_priority: bool = False

    def validate(self):
        if self.num_agents < 1:
            raise UsageError("num_agents must be positive")
        if self.episode_length < 1:
            raise UsageError("episode_length must be positive")
        if self.obs_size < 1 or self.obs_size % 2 == 0:
            raise UsageError("obs_size must be odd and positive")
        if self.grid.free_count == 0:
            raise ScenarioError("grid has no free cell")
        if self.num_agents > self.grid.free_count:
            raise ScenarioError(
                f"{self.num_agents} agents do not fit on {self.grid.free_count} free cells")


@dataclass
class Observation:
    """Egocentric m x m window; out-of-grid cells read as obstacles."""

    obstacles: np.ndarray  # (m, m) bool
    agents: np.ndarray     # (m, m) bool, includes self at the centre
    center: Cell


@dataclass
class AgentEvent:
    moved: bool
    denied: bool
    reached_goal: bool


@dataclass
class EpisodeLog:
    """Everything needed to replay and score an episode."""

    seed: int
    num_agents: int
    episode_length: int
    obs_size: int
    random_priority: bool
    map_rows: List[str]
    starts: List[int]
    initial_goals: List[int]
    executed: List[List[int]] = field(default_factory=list)
    denied: List[List[int]] = field(default_factory=list)
    reached: List[Tuple[int, int]] = field(default_factory=list)  # (timestep, agent)
    visit_counts: Optional[np.ndarray] = None                     # (H, W) int64
    final_positions: List[int] = field(default_factory=list)

    @property
    def total_goals(self) -> int:
        return len(self.reached)

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "num_agents": self.num_agents,
            "episode_length": self.episode_length,
            "obs_size": self.obs_size,
            "random_priority": self.random_priority,
            "map": self.map_rows,
            "starts": [int(s) for s in self.starts],
            "initial_goals": [int(g) for g in self.initial_goals],
            "executed": self.executed,
            "denied": self.denied,
            "reached": [[int(t), int(a)] for t, a in self.reached],
            "visit_counts": self.visit_counts.ravel().tolist(),
            "final_positions": [int(p) for p in self.final_positions],
        }


def throughput(log: EpisodeLog, episode_length: Optional[int] = None) -> float:
    """Goals achieved by all agents divided by the episode length."""
    t_max = episode_length if episode_length is not None else log.episode_length
    return log.total_goals / t_max


class Environment:
    """One running episode. Mutate sequentially; independent instances are free
    to run in parallel."""

    def __init__(self, config: EpisodeConfig):
        config.validate()
        self.config = config
        self.grid = config.grid
        self.num_agents = config.num_agents
        self.t = 0
        self.positions = None      # flat int64[N]
        self.goals = None          # flat int64[N]
        self.goals_reached = None  # int64[N]
        self.log: Optional[EpisodeLog] = None
        radius = config.obs_size // 2
        self._radius = radius
        self._pad_obstacles = np.pad(self.grid.blocked, radius, constant_values=True)
        self._pad_agents = np.zeros_like(self._pad_obstacles)

    # -- lifecycle ---------------------------------------------------------

    def reset(self, starts: Optional[Sequence[int]] = None,
              goals: Optional[Sequence[int]] = None,
              agent_seeds: Optional[Sequence] = None,
              action_seeds: Optional[Sequence] = None) -> List[Observation]:
        """Sample starts and unique reachable initial goals; timestep := 0.

        Stream derivation: SeedSequence(seed) spawns 2N+1 children; child 0
        drives start/initial-goal sampling, children 1..N are the per-agent
        environment streams (goal resampling, priority draws), and children
        N+1..2N are handed to the agents' decision code via `action_seeds`.
        The optional overrides bypass sampling (used by replays and by tests
        that need explicit control, e.g. agent relabeling).
        """
        cfg = self.config
        n = cfg.num_agents
        ss = np.random.SeedSequence(cfg.seed)
        children = ss.spawn(2 * n + 1)
        self._env_rng = np.random.Generator(np.random.PCG64(children[0]))
        if agent_seeds is None:
            agent_seeds = children[1:n + 1]
        elif len(agent_seeds) != n:
            raise UsageError("agent_seeds must have one entry per agent")
        self.agent_rngs = [np.random.Generator(np.random.PCG64(s)) for s in agent_seeds]
        if action_seeds is None:
            action_seeds = children[n + 1:]
        elif len(action_seeds) != n:
            raise UsageError("action_seeds must have one entry per agent")
        self.action_seeds = list(action_seeds)

        if starts is None:
            free = self.grid.free_cells_flat()
            starts = self._env_rng.choice(free, size=cfg.num_agents, replace=False)
        starts = np.asarray(starts, dtype=np.int64)
        self._check_cells(starts, "start")
        if len(np.unique(starts)) != len(starts):
            raise UsageError("start cells must be pairwise distinct")

        if goals is None:
            goals = self._assign_initial_goals(starts)
        goals = np.asarray(goals, dtype=np.int64)
        self._check_cells(goals, "goal")
        labels = self.grid.components()
        if not np.array_equal(labels[starts], labels[goals]):
            raise ScenarioError("every goal must be reachable from its start")

        self.positions = starts.copy()
        self.goals = goals.copy()
        self.goals_reached = np.zeros(cfg.num_agents, dtype=np.int64)
        self.t = 0
        self.log = EpisodeLog(
            seed=cfg.seed, num_agents=cfg.num_agents,
            episode_length=cfg.episode_length, obs_size=cfg.obs_size,
            random_priority=cfg.random_priority,
            map_rows=_grid_rows(self.grid),
            starts=[int(s) for s in starts],
            initial_goals=[int(g) for g in goals],
            visit_counts=np.zeros((self.grid.height, self.grid.width), dtype=np.int64),
        )
        self._count_visits()
        self._refresh_agent_pad()
        return [self.observe(i) for i in range(self.num_agents)]

    def _assign_initial_goals(self, starts: np.ndarray) -> np.ndarray:
        """Unique initial goals, each reachable from (and distinct from) its start."""
        taken = set()
        goals = np.empty(len(starts), dtype=np.int64)
        for i, s in enumerate(starts):
            cells = self.grid.component_cells(int(s))
            candidates = [c for c in cells if c != s and c not in taken]
            if not candidates:
                raise ScenarioError(
                    f"no feasible unique initial goal for agent {i}")
            goal = candidates[self._env_rng.integers(len(candidates))]
            taken.add(int(goal))
            goals[i] = goal
        return goals

    def _check_cells(self, cells: np.ndarray, kind: str):
        blocked = self.grid.blocked.ravel()
        if cells.min(initial=0) < 0 or cells.max(initial=0) >= self.grid.size:
            raise UsageError(f"{kind} cell out of bounds")
        if blocked[cells].any():
            raise UsageError(f"{kind} cells must be free")

    # -- stepping ----------------------------------------------------------

    @property
    def done(self) -> bool:
        return self.t >= self.config.episode_length

    def step(self, actions: Sequence[int]):
        """Resolve one joint action; returns (observations, events)."""
        if self.done:
            raise ScenarioError("episode already finished")
        actions = np.asarray(actions, dtype=np.int64)
        if actions.shape != (self.num_agents,):
            raise UsageError("one action per agent required")
        if (actions < 0).any() or (actions >= NUM_ACTIONS).any():
            raise UsageError("unknown action id")

        w, h = self.grid.width, self.grid.height
        rows, cols = self.positions // w, self.positions % w
        deltas = ACTION_DELTAS[actions]
        nrows, ncols = rows + deltas[:, 0], cols + deltas[:, 1]
        inside = (nrows >= 0) & (nrows < h) & (ncols >= 0) & (ncols < w)
        targets = np.where(inside, nrows * w + ncols, self.positions)
        open_cell = np.zeros(self.num_agents, dtype=bool)
        open_cell[inside] = ~self.grid.blocked.ravel()[targets[inside]]
        invalid = (actions != Action.WAIT) & ~(inside & open_cell)
        targets = np.where(invalid, self.positions, targets)

        if self.config.random_priority:
            priority = np.array([rng.random() for rng in self.agent_rngs])
        else:
            priority = np.arange(self.num_agents)
        final, denied_conflict = resolve_moves(self.positions, targets, priority)
        denied = invalid | denied_conflict.astype(bool)

        moved = final != self.positions
        executed = np.where(moved, actions, Action.WAIT).astype(np.int64)
        self.positions = final
        self.t += 1
        self._count_visits()

        reached = self.positions == self.goals
        events = []
        for i in range(self.num_agents):
            if reached[i]:
                self.goals_reached[i] += 1
                self.log.reached.append((self.t, i))
                self.goals[i] = self._resample_goal(i)
            events.append(AgentEvent(moved=bool(moved[i]), denied=bool(denied[i]),
                                     reached_goal=bool(reached[i])))
        self.log.executed.append([int(a) for a in executed])
        self.log.denied.append([int(d) for d in denied])
        if self.done:
            self.log.final_positions = [int(p) for p in self.positions]
        self._refresh_agent_pad()
        return [self.observe(i) for i in range(self.num_agents)], events

    def _resample_goal(self, agent: int) -> int:
        """Uniform over the agent's component minus its current cell (own stream)."""
        pos = int(self.positions[agent])
        cells = self.grid.component_cells(pos)
        k = int(np.searchsorted(cells, pos))
        j = int(self.agent_rngs[agent].integers(len(cells) - 1))
        if j >= k:
            j += 1
        return int(cells[j])

    # -- observation -------------------------------------------------------

    def observe(self, agent: int) -> Observation:
        """The agent's m x m egocentric window; other agents' goals/paths stay hidden."""
        if not 0 <= agent < self.num_agents:
            raise UsageError(f"no agent {agent}")
        m = self.config.obs_size
        r, c = divmod(int(self.positions[agent]), self.grid.width)
        obstacles = self._pad_obstacles[r:r + m, c:c + m].copy()
        agents = self._pad_agents[r:r + m, c:c + m].copy()
        return Observation(obstacles=obstacles, agents=agents, center=(r, c))

    def agent_goal(self, agent: int) -> Cell:
        return self.grid.to_cell(int(self.goals[agent]))

    def agent_position(self, agent: int) -> Cell:
        return self.grid.to_cell(int(self.positions[agent]))

    def _refresh_agent_pad(self):
        self._pad_agents.fill(False)
        rad = self._radius
        rows, cols = self.positions // self.grid.width, self.positions % self.grid.width
        self._pad_agents[rows + rad, cols + rad] = True

    def _count_visits(self):
        rows, cols = self.positions // self.grid.width, self.positions % self.grid.width
        self.log.visit_counts[rows, cols] += 1


def replay_log(grid: Grid, log: EpisodeLog) -> np.ndarray:
    """Apply the logged executed actions from the logged starts; returns final cells."""
    pos = np.array(log.starts, dtype=np.int64)
    w = grid.width
    for step in log.executed:
        deltas = ACTION_DELTAS[np.asarray(step, dtype=np.int64)]
        pos = pos + deltas[:, 0] * w + deltas[:, 1]
    return pos


def _grid_rows(grid: Grid) -> List[str]:
    return ["".join("@" if b else "." for b in row) for row in grid.blocked]
