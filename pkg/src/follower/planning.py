"""Individual path planning over transition costs, plus re-plan triggers.

Paths ignore other agents entirely; collision handling is the follower
policy's job. A* charges the cost of every entered cell (the start cell is
free) and uses plain Manhattan distance as the heuristic, which is admissible
because every transition cost is at least 1.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .costs import DynamicCostField, StaticCostField
from .errors import UsageError
from .grid import Cell, Grid
from ._kernels import backend as _kb


@dataclass(frozen=True)
class Path:
    """Cells from the planning start to the goal, consecutive pairs 4-adjacent."""

    cells: Tuple[Cell, ...]

    @property
    def start(self) -> Cell:
        return self.cells[0]

    @property
    def goal(self) -> Cell:
        return self.cells[-1]

    def __len__(self):
        return len(self.cells)


def plan_path(grid: Grid, static: StaticCostField, dyn: Optional[DynamicCostField],
              start: Cell, goal: Cell, dyn_weight: float = 1.0) -> Optional[Path]:
    """Minimum-total-cost path from start to goal, or None when unreachable.

    Cost of a path is the sum of transition costs of entered cells. Dynamic
    costs may be omitted (dyn=None), e.g. for the accumulation-off variant.
    Ties are broken deterministically: larger g first, then row-major order.
    """
    if not grid.is_free(start):
        raise UsageError(f"plan start {start} is not a free cell")
    if not grid.is_free(goal):
        raise UsageError(f"plan goal {goal} is not a free cell")
    if start == goal:
        return Path(cells=(start,))
    if dyn is None:
        weights = np.ascontiguousarray(static.cost)
    else:
        if dyn_weight < 0:
            raise UsageError("dynamic cost weight must be non-negative")
        weights = static.cost + dyn_weight * dyn.counts
    flat = _kb().astar(grid._blocked_u8, weights, grid.to_flat(start),
                       grid.to_flat(goal), 1.0)
    if flat is None:
        return None
    w = grid.width
    return Path(cells=tuple((int(i) // w, int(i) % w) for i in flat))


def path_cost(path: Path, weights: np.ndarray) -> float:
    """Sum of entering costs along the path; the start cell is not charged."""
    total = 0.0
    for r, c in path.cells[1:]:
        total += float(weights[r, c])
    return total


def next_waypoint(path: Path, position: Cell) -> Cell:
    """First cell after the current position, or the goal for a one-cell path."""
    if position != path.cells[0]:
        raise UsageError("position left the path head; re-plan before asking for a waypoint")
    if len(path.cells) >= 2:
        return path.cells[1]
    return path.goal


def needs_replan(path: Path, position: Cell) -> bool:
    """True when the agent reached the waypoint or drifted off the path head."""
    waypoint = path.cells[1] if len(path.cells) >= 2 else path.goal
    return position == waypoint or position != path.cells[0]
