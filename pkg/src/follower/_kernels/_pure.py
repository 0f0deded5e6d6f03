"""Pure-Python grid kernels (fallback twin of the compiled core).

All functions take the obstacle map as a flattened-or-2D uint8 array plus its
width implied by shape; cells are flat row-major indices. Tie-breaking rules
are part of the contract:

* A* pops by (f, -g, flat index) ascending.
* BFS expands neighbours in UP, DOWN, LEFT, RIGHT order.
* Conflict resolution awards a contested cell to the contender with the
  smallest priority value and revokes moves until a fixed point is reached.
"""

import heapq
from collections import deque

import numpy as np


def bfs_distances(blocked: np.ndarray, source: int) -> np.ndarray:
    """Shortest 4-connected path length from `source` to every cell (-1 unreachable)."""
    h, w = blocked.shape
    flat = blocked.ravel()
    dist = np.full(h * w, -1, dtype=np.int32)
    dist[source] = 0
    q = deque([source])
    while q:
        cur = q.popleft()
        d = dist[cur] + 1
        r, c = divmod(cur, w)
        if r > 0 and not flat[cur - w] and dist[cur - w] < 0:
            dist[cur - w] = d
            q.append(cur - w)
        if r + 1 < h and not flat[cur + w] and dist[cur + w] < 0:
            dist[cur + w] = d
            q.append(cur + w)
        if c > 0 and not flat[cur - 1] and dist[cur - 1] < 0:
            dist[cur - 1] = d
            q.append(cur - 1)
        if c + 1 < w and not flat[cur + 1] and dist[cur + 1] < 0:
            dist[cur + 1] = d
            q.append(cur + 1)
    return dist


def pairwise_distance_sums(blocked: np.ndarray) -> tuple:
    """For every free cell: (sum of BFS distances to reachable free cells, their count).

    Obstacle cells hold (0, 0). Isolated free cells hold (0, 0) as well.
    """
    h, w = blocked.shape
    n = h * w
    sums = np.zeros(n, dtype=np.int64)
    counts = np.zeros(n, dtype=np.int64)
    flat = blocked.ravel()
    for src in range(n):
        if flat[src]:
            continue
        dist = bfs_distances(blocked, src)
        reach = dist > 0
        sums[src] = int(dist[reach].sum())
        counts[src] = int(np.count_nonzero(reach))
    return sums, counts


def astar(blocked: np.ndarray, weights: np.ndarray, start: int, goal: int,
          hscale: float = 1.0) -> np.ndarray:
    """A* over entering-costs `weights`; returns the path as flat indices or None.

    The cost of a path is the sum of weights of entered cells (start excluded).
    Heuristic: hscale * Manhattan distance; hscale must lower-bound every
    free-cell weight for optimality. Ties: larger g first, then smaller index.
    """
    h, w = blocked.shape
    flat_blocked = blocked.ravel()
    flat_w = weights.ravel()
    if flat_blocked[start] or flat_blocked[goal]:
        return None
    gr, gc = divmod(goal, w)
    n = h * w
    g = np.full(n, np.inf, dtype=np.float64)
    parent = np.full(n, -1, dtype=np.int64)
    closed = np.zeros(n, dtype=bool)
    g[start] = 0.0
    sr, sc = divmod(start, w)
    heap = [((abs(sr - gr) + abs(sc - gc)) * hscale, 0.0, start)]
    while heap:
        f, negg, cur = heapq.heappop(heap)
        if closed[cur]:
            continue
        closed[cur] = True
        if cur == goal:
            path = [cur]
            while cur != start:
                cur = parent[cur]
                path.append(cur)
            path.reverse()
            return np.array(path, dtype=np.int64)
        gc_cur = g[cur]
        r, c = divmod(cur, w)
        for nxt, ok in (
            (cur - w, r > 0),
            (cur + w, r + 1 < h),
            (cur - 1, c > 0),
            (cur + 1, c + 1 < w),
        ):
            if not ok or flat_blocked[nxt] or closed[nxt]:
                continue
            ng = gc_cur + flat_w[nxt]
            if ng < g[nxt]:
                g[nxt] = ng
                parent[nxt] = cur
                nr, nc = divmod(nxt, w)
                nf = ng + (abs(nr - gr) + abs(nc - gc)) * hscale
                heapq.heappush(heap, (nf, -ng, nxt))
    return None


def resolve_moves(positions: np.ndarray, targets: np.ndarray,
                  priority: np.ndarray) -> tuple:
    """Revoke conflicting moves until none remain.

    positions: current cells (pairwise distinct); targets: proposed next cells
    (equal to position for WAIT); priority: smaller value wins a contested
    cell. Returns (final cells, denied mask). Guarantees: final cells pairwise
    distinct, no two agents swap cells, denials cascade (a move into a cell
    whose occupant ended up staying is revoked too).
    """
    n = len(positions)
    final = targets.astype(np.int64).copy()
    denied = np.zeros(n, dtype=np.uint8)
    agent_at = {int(p): i for i, p in enumerate(positions)}

    def deny(i):
        final[i] = positions[i]
        denied[i] = 1

    changed = True
    while changed:
        changed = False
        by_target = {}
        for i in range(n):
            if final[i] != positions[i]:
                by_target.setdefault(int(final[i]), []).append(i)
        for cell, movers in by_target.items():
            occ = agent_at.get(cell)
            if occ is not None and final[occ] == positions[occ]:
                for i in movers:  # cell stays occupied: everyone aiming at it waits
                    deny(i)
                changed = True
                continue
            if len(movers) > 1:
                winner = min(movers, key=lambda i: (priority[i], i))
                for i in movers:
                    if i != winner:
                        deny(i)
                changed = True
        for i in range(n):  # edge collisions: head-on swaps are revoked pairwise
            if final[i] == positions[i]:
                continue
            j = agent_at.get(int(final[i]))
            if j is not None and j != i and final[j] == positions[i]:
                deny(i)
                deny(j)
                changed = True
    return final, denied
