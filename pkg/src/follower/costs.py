"""Per-cell transition costs: a static congestion penalty precomputed from the
map topology plus a per-agent dynamic penalty accumulated from observations.

The static penalty of a cell is the grid-wide maximum of the average
shortest-path cost divided by the cell's own average, so cells that many
shortest paths funnel through (low average cost) become expensive. The
dynamic part counts how often the owning agent has seen other agents on each
cell and is cleared whenever the agent reaches a goal.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError
from .grid import Grid
from ._kernels import backend as _kb


@dataclass(frozen=True)
class StaticCostField:
    """Immutable per-cell static costs; `avg_cost` is kept for verification."""

    cost: np.ndarray       # (H, W) float64; >= 1 on free cells, NaN on obstacles
    avg_cost: np.ndarray   # (H, W) float64; NaN on obstacles and isolated free cells

    def __post_init__(self):
        self.cost.setflags(write=False)
        self.avg_cost.setflags(write=False)


def compute_static_costs(grid: Grid) -> StaticCostField:
    """All-pairs BFS over free cells, reduced to the congestion penalty field.

    Free cells with no reachable neighbour get cost 1 (they can never lie on
    a path between two distinct cells).
    """
    sums, counts = _kb().pairwise_distance_sums(grid._blocked_u8)
    avg = np.full(grid.size, np.nan, dtype=np.float64)
    reachable = counts > 0
    avg[reachable] = sums[reachable] / counts[reachable]

    cost = np.full(grid.size, np.nan, dtype=np.float64)
    free = ~grid.blocked.ravel()
    if reachable.any():
        max_avg = float(avg[reachable].max())
        cost[reachable] = max_avg / avg[reachable]
    cost[free & ~reachable] = 1.0
    h, w = grid.height, grid.width
    return StaticCostField(cost=cost.reshape(h, w), avg_cost=avg.reshape(h, w))


def uniform_static_costs(grid: Grid) -> StaticCostField:
    """Cost 1 on every free cell (used when the precalculated penalty is disabled)."""
    cost = np.where(grid.blocked, np.nan, 1.0)
    avg = np.full((grid.height, grid.width), np.nan)
    return StaticCostField(cost=cost, avg_cost=avg)


@dataclass
class DynamicCostField:
    """Per-agent observation counter over the whole grid; reset on goal arrival."""

    counts: np.ndarray  # (H, W) int64, non-negative

    @classmethod
    def zeros(cls, grid: Grid) -> "DynamicCostField":
        return cls(counts=np.zeros((grid.height, grid.width), dtype=np.int64))

    def reset(self):
        self.counts.fill(0)


def update_dynamic_costs(dyn: DynamicCostField, obs) -> None:
    """Count every cell of the observation window holding another agent.

    The observer itself (window centre) is never counted. Out-of-window and
    out-of-grid cells are unaffected.
    """
    m = obs.agents.shape[0]
    radius = m // 2
    rows, cols = np.nonzero(obs.agents)
    h, w = dyn.counts.shape
    cr, cc = obs.center
    for r, c in zip(rows, cols):
        if r == radius and c == radius:
            continue  # self
        gr, gc = cr + (r - radius), cc + (c - radius)
        if 0 <= gr < h and 0 <= gc < w:
            dyn.counts[gr, gc] += 1


def transition_costs(static: StaticCostField, dyn: DynamicCostField,
                     dyn_weight: float = 1.0) -> np.ndarray:
    """Full per-cell entering costs: static + dyn_weight * observation counts."""
    if dyn_weight < 0:
        raise UsageError("dynamic cost weight must be non-negative")
    return static.cost + dyn_weight * dyn.counts


def transition_cost(static: StaticCostField, dyn: DynamicCostField, cell,
                    dyn_weight: float = 1.0) -> float:
    """Cost of entering a single free cell."""
    value = float(static.cost[cell] + dyn_weight * dyn.counts[cell])
    if np.isnan(value):
        raise UsageError(f"cell {cell} is an obstacle and has no transition cost")
    return value
