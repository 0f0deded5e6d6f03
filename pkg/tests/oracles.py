"""Independent reference implementations used to check the package.

Everything here is deliberately written against different data structures
than the library (dicts and sets instead of flat arrays) so the two sides
cannot share a bug.
"""

import heapq
from collections import deque

import numpy as np


def bfs_lengths(blocked, start):
    """Dict of cell -> shortest path length from start, dict/set based."""
    h, w = blocked.shape
    dist = {start: 0}
    queue = deque([start])
    while queue:
        r, c = queue.popleft()
        for nr, nc in ((r + 1, c), (r - 1, c), (r, c + 1), (r, c - 1)):
            if 0 <= nr < h and 0 <= nc < w and not blocked[nr, nc] \
                    and (nr, nc) not in dist:
                dist[(nr, nc)] = dist[(r, c)] + 1
                queue.append((nr, nc))
    return dist


def brute_static_costs(blocked):
    """Eq.-by-the-book static costs: all-pairs BFS means, then max/avg."""
    h, w = blocked.shape
    avg = {}
    for r in range(h):
        for c in range(w):
            if blocked[r, c]:
                continue
            dist = bfs_lengths(blocked, (r, c))
            others = [d for cell, d in dist.items() if cell != (r, c)]
            if others:
                avg[(r, c)] = sum(others) / len(others)
    cost = np.full((h, w), np.nan)
    max_avg = max(avg.values()) if avg else None
    for r in range(h):
        for c in range(w):
            if blocked[r, c]:
                continue
            if (r, c) in avg:
                cost[r, c] = max_avg / avg[(r, c)]
            else:
                cost[r, c] = 1.0
    return cost


def dijkstra_cost(blocked, weights, start, goal):
    """Minimal sum of entered-cell weights start -> goal, or None."""
    h, w = blocked.shape
    if blocked[start] or blocked[goal]:
        return None
    best = {start: 0.0}
    heap = [(0.0, start)]
    settled = set()
    while heap:
        d, cell = heapq.heappop(heap)
        if cell in settled:
            continue
        settled.add(cell)
        if cell == goal:
            return d
        r, c = cell
        for nr, nc in ((r + 1, c), (r - 1, c), (r, c + 1), (r, c - 1)):
            if 0 <= nr < h and 0 <= nc < w and not blocked[nr, nc]:
                nd = d + weights[nr, nc]
                if nd < best.get((nr, nc), np.inf):
                    best[(nr, nc)] = nd
                    heapq.heappush(heap, (nd, (nr, nc)))
    return None


def resolve_conflicts_fixed_point(positions, targets):
    """Reference conflict resolution: revoke every conflicting move until
    stable, without priorities (used to check cascades and invariants, not
    winner selection)."""
    final = list(targets)
    n = len(positions)
    changed = True
    while changed:
        changed = False
        occupied_stays = {final[i] for i in range(n) if final[i] == positions[i]}
        position_of = {positions[i]: i for i in range(n)}
        for i in range(n):
            if final[i] == positions[i]:
                continue
            # moving into a cell that stays occupied
            if final[i] in occupied_stays:
                final[i] = positions[i]
                changed = True
                continue
            # head-on swap
            j = position_of.get(final[i])
            if j is not None and j != i and final[j] == positions[i]:
                final[i] = positions[i]
                changed = True
    return final


def gae_direct(rewards, values, dones, gamma, lam, bootstrap):
    """O(T^2) weighted-sum form of the advantage estimator (single lane)."""
    t_len = len(rewards)

    def delta(t):
        next_v = bootstrap if t == t_len - 1 else values[t + 1]
        return rewards[t] + gamma * next_v * (1.0 - dones[t]) - values[t]

    advantages = []
    for t in range(t_len):
        total = 0.0
        factor = 1.0
        for k in range(t, t_len):
            total += factor * delta(k)
            if dones[k]:
                break
            factor *= gamma * lam
        advantages.append(total)
    return np.array(advantages)


def finite_difference_grad(fn, params, eps=1e-5):
    """Central differences of scalar fn w.r.t. a flat float64 vector."""
    grad = np.zeros_like(params)
    for i in range(len(params)):
        step = eps * max(1.0, abs(params[i]))
        plus = params.copy()
        plus[i] += step
        minus = params.copy()
        minus[i] -= step
        grad[i] = (fn(plus) - fn(minus)) / (2 * step)
    return grad


def random_connected_grid(rng, height, width, density):
    """Random obstacle grid re-drawn until the free part is connected."""
    while True:
        blocked = rng.random((height, width)) < density
        free = [(r, c) for r in range(height) for c in range(width)
                if not blocked[r, c]]
        if len(free) < 2:
            continue
        if len(bfs_lengths(blocked, free[0])) == len(free):
            return blocked
