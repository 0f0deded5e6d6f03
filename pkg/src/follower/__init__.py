"""Lifelong multi-agent pathfinding: simulator, congestion-aware planner,
learnable path-following policies, PPO training, and a benchmark harness."""

from .grid import Action, Grid
from .env import Environment, EpisodeConfig, EpisodeLog, Observation, throughput
from .costs import (DynamicCostField, StaticCostField, compute_static_costs,
                    transition_cost, update_dynamic_costs)
from .planning import Path, needs_replan, next_waypoint, plan_path
from .nets import build_network, load_checkpoint, sample_action, save_checkpoint
from .agent import PolicyAgent, SearchAgent, SolverOptions, compute_reward
from .maps import generate_maze, generate_random, load_map, save_map
from .scenario import MetricsReport, ScenarioSpec, ablation_matrix, run_scenario
from .gae import compute_gae
from .train import TrainConfig, train

__version__ = "0.1.0"
