# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled grid kernels. Semantics mirror `_pure` exactly, including
tie-breaking and float accumulation order, so results are bit-identical."""

import numpy as np

cimport numpy as cnp
from libc.stdlib cimport free, malloc

cnp.import_array()


def bfs_distances(const cnp.uint8_t[:, ::1] blocked, Py_ssize_t source):
    cdef Py_ssize_t h = blocked.shape[0]
    cdef Py_ssize_t w = blocked.shape[1]
    cdef Py_ssize_t n = h * w
    dist_arr = np.full(n, -1, dtype=np.int32)
    cdef cnp.int32_t[::1] dist = dist_arr
    cdef const cnp.uint8_t* flat = &blocked[0, 0]
    cdef Py_ssize_t* queue = <Py_ssize_t*>malloc(n * sizeof(Py_ssize_t))
    if queue == NULL:
        raise MemoryError()
    cdef Py_ssize_t head = 0, tail = 0, cur, r, c
    cdef cnp.int32_t d
    dist[source] = 0
    queue[tail] = source
    tail += 1
    try:
        while head < tail:
            cur = queue[head]
            head += 1
            d = dist[cur] + 1
            r = cur / w
            c = cur % w
            if r > 0 and flat[cur - w] == 0 and dist[cur - w] < 0:
                dist[cur - w] = d
                queue[tail] = cur - w
                tail += 1
            if r + 1 < h and flat[cur + w] == 0 and dist[cur + w] < 0:
                dist[cur + w] = d
                queue[tail] = cur + w
                tail += 1
            if c > 0 and flat[cur - 1] == 0 and dist[cur - 1] < 0:
                dist[cur - 1] = d
                queue[tail] = cur - 1
                tail += 1
            if c + 1 < w and flat[cur + 1] == 0 and dist[cur + 1] < 0:
                dist[cur + 1] = d
                queue[tail] = cur + 1
                tail += 1
    finally:
        free(queue)
    return dist_arr


def pairwise_distance_sums(const cnp.uint8_t[:, ::1] blocked):
    cdef Py_ssize_t h = blocked.shape[0]
    cdef Py_ssize_t w = blocked.shape[1]
    cdef Py_ssize_t n = h * w
    sums_arr = np.zeros(n, dtype=np.int64)
    counts_arr = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] sums = sums_arr
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef const cnp.uint8_t* flat = &blocked[0, 0]
    cdef cnp.int32_t* dist = <cnp.int32_t*>malloc(n * sizeof(cnp.int32_t))
    cdef Py_ssize_t* queue = <Py_ssize_t*>malloc(n * sizeof(Py_ssize_t))
    if dist == NULL or queue == NULL:
        free(dist)
        free(queue)
        raise MemoryError()
    cdef Py_ssize_t src, i, head, tail, cur, r, c
    cdef cnp.int32_t d
    cdef cnp.int64_t s, cnt
    try:
        for src in range(n):
            if flat[src]:
                continue
            for i in range(n):
                dist[i] = -1
            dist[src] = 0
            head = 0
            tail = 0
            queue[tail] = src
            tail += 1
            s = 0
            cnt = 0
            while head < tail:
                cur = queue[head]
                head += 1
                d = dist[cur] + 1
                r = cur / w
                c = cur % w
                if r > 0 and flat[cur - w] == 0 and dist[cur - w] < 0:
                    dist[cur - w] = d
                    queue[tail] = cur - w
                    tail += 1
                    s += d
                    cnt += 1
                if r + 1 < h and flat[cur + w] == 0 and dist[cur + w] < 0:
                    dist[cur + w] = d
                    queue[tail] = cur + w
                    tail += 1
                    s += d
                    cnt += 1
                if c > 0 and flat[cur - 1] == 0 and dist[cur - 1] < 0:
                    dist[cur - 1] = d
                    queue[tail] = cur - 1
                    tail += 1
                    s += d
                    cnt += 1
                if c + 1 < w and flat[cur + 1] == 0 and dist[cur + 1] < 0:
                    dist[cur + 1] = d
                    queue[tail] = cur + 1
                    tail += 1
                    s += d
                    cnt += 1
            sums[src] = s
            counts[src] = cnt
    finally:
        free(dist)
        free(queue)
    return sums_arr, counts_arr


cdef struct HeapItem:
    double f
    double g
    Py_ssize_t cell


cdef inline bint heap_less(HeapItem a, HeapItem b) noexcept:
    # Order: smaller f, then larger g, then smaller cell index.
    if a.f != b.f:
        return a.f < b.f
    if a.g != b.g:
        return a.g > b.g
    return a.cell < b.cell


cdef inline void heap_push(HeapItem* heap, Py_ssize_t* size, HeapItem item) noexcept:
    cdef Py_ssize_t i = size[0]
    cdef Py_ssize_t p
    heap[i] = item
    size[0] += 1
    while i > 0:
        p = (i - 1) >> 1
        if heap_less(heap[i], heap[p]):
            heap[i], heap[p] = heap[p], heap[i]
            i = p
        else:
            break


cdef inline HeapItem heap_pop(HeapItem* heap, Py_ssize_t* size) noexcept:
    cdef HeapItem top = heap[0]
    cdef Py_ssize_t i = 0, child
    size[0] -= 1
    heap[0] = heap[size[0]]
    while True:
        child = 2 * i + 1
        if child >= size[0]:
            break
        if child + 1 < size[0] and heap_less(heap[child + 1], heap[child]):
            child += 1
        if heap_less(heap[child], heap[i]):
            heap[i], heap[child] = heap[child], heap[i]
            i = child
        else:
            break
    return top


def astar(const cnp.uint8_t[:, ::1] blocked, const cnp.float64_t[:, ::1] weights,
          Py_ssize_t start, Py_ssize_t goal, double hscale=1.0):
    cdef Py_ssize_t h = blocked.shape[0]
    cdef Py_ssize_t w = blocked.shape[1]
    cdef Py_ssize_t n = h * w
    cdef const cnp.uint8_t* bflat = &blocked[0, 0]
    cdef const cnp.float64_t* wflat = &weights[0, 0]
    if bflat[start] or bflat[goal]:
        return None
    cdef double* g = <double*>malloc(n * sizeof(double))
    cdef Py_ssize_t* parent = <Py_ssize_t*>malloc(n * sizeof(Py_ssize_t))
    cdef cnp.uint8_t* closed = <cnp.uint8_t*>malloc(n * sizeof(cnp.uint8_t))
    # Heap capacity: with a consistent heuristic each cell is relaxed at most
    # once per neighbour expansion, so pushes <= 4n + 1.
    cdef HeapItem* heap = <HeapItem*>malloc((4 * n + 8) * sizeof(HeapItem))
    if g == NULL or parent == NULL or closed == NULL or heap == NULL:
        free(g); free(parent); free(closed); free(heap)
        raise MemoryError()
    cdef Py_ssize_t heap_size = 0
    cdef Py_ssize_t i, cur, nxt, r, c, nr, nc, gr, gc, plen
    cdef double inf = float("inf")
    cdef double gcur, ng
    cdef HeapItem item
    cdef bint found = False
    gr = goal / w
    gc = goal % w
    try:
        for i in range(n):
            g[i] = inf
            parent[i] = -1
            closed[i] = 0
        g[start] = 0.0
        r = start / w
        c = start % w
        item.f = (abs(r - gr) + abs(c - gc)) * hscale
        item.g = 0.0
        item.cell = start
        heap_push(heap, &heap_size, item)
        while heap_size > 0:
            item = heap_pop(heap, &heap_size)
            cur = item.cell
            if closed[cur]:
                continue
            closed[cur] = 1
            if cur == goal:
                found = True
                break
            gcur = g[cur]
            r = cur / w
            c = cur % w
            for i in range(4):
                if i == 0:
                    if r == 0:
                        continue
                    nxt = cur - w
                elif i == 1:
                    if r + 1 >= h:
                        continue
                    nxt = cur + w
                elif i == 2:
                    if c == 0:
                        continue
                    nxt = cur - 1
                else:
                    if c + 1 >= w:
                        continue
                    nxt = cur + 1
                if bflat[nxt] or closed[nxt]:
                    continue
                ng = gcur + wflat[nxt]
                if ng < g[nxt]:
                    g[nxt] = ng
                    parent[nxt] = cur
                    nr = nxt / w
                    nc = nxt % w
                    item.f = ng + (abs(nr - gr) + abs(nc - gc)) * hscale
                    item.g = ng
                    item.cell = nxt
                    heap_push(heap, &heap_size, item)
        if not found:
            return None
        plen = 1
        cur = goal
        while cur != start:
            cur = parent[cur]
            plen += 1
        path_arr = np.empty(plen, dtype=np.int64)
        cur = goal
        for i in range(plen - 1, -1, -1):
            path_arr[i] = cur
            cur = parent[cur]
        return path_arr
    finally:
        free(g); free(parent); free(closed); free(heap)
