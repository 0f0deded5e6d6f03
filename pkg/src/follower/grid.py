"""Static grid world: 4-connected cells, obstacles, connectivity queries."""

from enum import IntEnum
from typing import List, Tuple

import numpy as np

from .errors import UsageError
from ._kernels import backend as _kb

Cell = Tuple[int, int]


class Action(IntEnum):
    WAIT = 0
    UP = 1      # row - 1
    DOWN = 2    # row + 1
    LEFT = 3    # col - 1
    RIGHT = 4   # col + 1


# Row/col deltas indexed by Action value.
ACTION_DELTAS = np.array([(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)], dtype=np.int64)

NUM_ACTIONS = 5


def action_between(src: Cell, dst: Cell) -> Action:
    """The action that moves src -> dst; cells must coincide or be 4-adjacent."""
    dr, dc = dst[0] - src[0], dst[1] - src[1]
    for a, (adr, adc) in enumerate(ACTION_DELTAS):
        if dr == adr and dc == adc:
            return Action(a)
    raise ValueError(f"cells {src} and {dst} are not 4-adjacent")


class Grid:
    """Immutable obstacle map on a width x height 4-connected grid.

    `blocked` is a (height, width) boolean array, True on static obstacles.
    Positions are (row, col) tuples; internally cells are also addressed by
    flat index row * width + col.
    """

    def __init__(self, blocked: np.ndarray):
        blocked = np.asarray(blocked, dtype=bool)
        if blocked.ndim != 2 or blocked.shape[0] < 1 or blocked.shape[1] < 1:
            raise UsageError("grid must be a 2-D array with positive dimensions")
        self.blocked = blocked.copy()
        self.blocked.setflags(write=False)
        self.height, self.width = blocked.shape
        self._blocked_u8 = np.ascontiguousarray(self.blocked, dtype=np.uint8)
        self._components = None

    @property
    def size(self) -> int:
        return self.height * self.width

    @property
    def free_count(self) -> int:
        return int(self.size - np.count_nonzero(self.blocked))

    def free_cells_flat(self) -> np.ndarray:
        """Flat indices of free cells in row-major order."""
        return np.flatnonzero(~self.blocked.ravel())

    def to_flat(self, cell: Cell) -> int:
        return cell[0] * self.width + cell[1]

    def to_cell(self, flat: int) -> Cell:
        return (flat // self.width, flat % self.width)

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.height and 0 <= cell[1] < self.width

    def is_free(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and not self.blocked[cell[0], cell[1]]

    def components(self) -> np.ndarray:
        """Connected-component label per cell (flat array; -1 on obstacles)."""
        if self._components is None:
            labels = np.full(self.size, -1, dtype=np.int64)
            w, h = self.width, self.height
            blocked = self.blocked.ravel()
            label = 0
            for start in range(self.size):
                if blocked[start] or labels[start] >= 0:
                    continue
                stack = [start]
                labels[start] = label
                while stack:
                    cur = stack.pop()
                    r, c = divmod(cur, w)
                    for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                        if 0 <= nr < h and 0 <= nc < w:
                            nxt = nr * w + nc
                            if not blocked[nxt] and labels[nxt] < 0:
                                labels[nxt] = label
                                stack.append(nxt)
                label += 1
            labels.setflags(write=False)
            self._components = labels
        return self._components

    def component_cells(self, flat: int) -> np.ndarray:
        """Sorted flat indices of the component containing `flat`."""
        labels = self.components()
        if labels[flat] < 0:
            raise UsageError(f"cell {self.to_cell(flat)} is an obstacle")
        return np.flatnonzero(labels == labels[flat])

    def is_connected(self) -> bool:
        """True when all free cells form a single component (and one exists)."""
        labels = self.components()
        mx = labels.max() if labels.size else -1
        return mx == 0

    def bfs_distances(self, source: Cell) -> np.ndarray:
        """Shortest-path lengths from `source` as a (height, width) array, -1 unreachable."""
        if not self.is_free(source):
            raise UsageError(f"BFS source {source} is not a free cell")
        dist = _kb().bfs_distances(self._blocked_u8, self.to_flat(source))
        return dist.reshape(self.height, self.width)

    def __eq__(self, other):
        return isinstance(other, Grid) and np.array_equal(self.blocked, other.blocked)

    def __hash__(self):
        return hash((self.height, self.width, self.blocked.tobytes()))

    def __repr__(self):
        return f"Grid({self.width}x{self.height}, {self.free_count} free)"


def grid_from_text(rows: List[str]) -> Grid:
    """Build a grid from text rows, '#'/'@' blocked and '.' free (test helper)."""
    blocked = np.array([[ch in "#@" for ch in row] for row in rows], dtype=bool)
    return Grid(blocked)
