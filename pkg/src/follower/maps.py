"""Map file parsing (MovingAI grid format) and seeded map generators."""

from typing import List

import numpy as np

from .errors import MapError, UsageError
from .grid import Grid

FREE_CHARS = frozenset(".G")
OBSTACLE_CHARS = frozenset("@TO")


def load_map(text: str) -> Grid:
    """Parse MovingAI map text: octile header then H rows of W characters."""
    lines = text.splitlines()
    if len(lines) < 4:
        raise MapError("truncated header (need 4 header lines)", line=len(lines) or 1)
    if lines[0].strip() != "type octile":
        raise MapError(f"expected 'type octile', got {lines[0]!r}", line=1)
    height = _header_int(lines[1], "height", 2)
    width = _header_int(lines[2], "width", 3)
    if lines[3].strip() != "map":
        raise MapError(f"expected 'map', got {lines[3]!r}", line=4)
    rows = lines[4:]
    while rows and rows[-1] == "":
        rows.pop()
    if len(rows) != height:
        raise MapError(f"expected {height} map rows, found {len(rows)}", line=5)
    blocked = np.zeros((height, width), dtype=bool)
    for r, row in enumerate(rows):
        line_no = 5 + r
        if len(row) != width:
            raise MapError(f"row has {len(row)} characters, expected {width}",
                           line=line_no)
        for c, ch in enumerate(row):
            if ch in OBSTACLE_CHARS:
                blocked[r, c] = True
            elif ch not in FREE_CHARS:
                raise MapError(f"unknown map character {ch!r} in column {c + 1}",
                               line=line_no)
    return Grid(blocked)


def _header_int(line: str, key: str, line_no: int) -> int:
    parts = line.split()
    if len(parts) != 2 or parts[0] != key or not parts[1].isdigit():
        raise MapError(f"expected '{key} <N>', got {line!r}", line=line_no)
    value = int(parts[1])
    if value < 1:
        raise MapError(f"{key} must be positive", line=line_no)
    return value


def save_map(grid: Grid) -> str:
    """Canonical text form: '.' free, '@' obstacle."""
    rows = ["".join("@" if b else "." for b in row) for row in grid.blocked]
    header = f"type octile\nheight {grid.height}\nwidth {grid.width}\nmap\n"
    return header + "\n".join(rows) + "\n"


def generate_random(seed: int, width: int, height: int, density: float,
                    max_retries: int = 1000) -> Grid:
    """I.i.d. obstacles at `density`, re-drawn until all free cells connect."""
    if width < 3 or height < 3:
        raise UsageError("map dimensions must be at least 3")
    if not 0 <= density < 1:
        raise UsageError("density must lie in [0, 1)")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    for _ in range(max_retries):
        blocked = rng.random((height, width)) < density
        grid = Grid(blocked)
        if grid.free_count > 0 and grid.is_connected():
            return grid
    raise MapError(
        f"no connected {width}x{height} map at density {density} "
        f"after {max_retries} draws")


def generate_maze(seed: int, width: int, height: int,
                  extra_opening_rate: float = 0.12) -> Grid:
    """Recursive-division maze with 1-2 cell corridors and extra loop openings.

    Walls are built one cell thick with gaps, then a fraction of removable
    wall cells is knocked out to create loops; the free region stays connected
    by construction.
    """
    if width < 3 or height < 3:
        raise UsageError("map dimensions must be at least 3")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    blocked = np.zeros((height, width), dtype=bool)

    # Walls live on even coordinates and gaps on odd ones, so a child wall can
    # never seal a parent wall's gap; connectivity holds by induction.
    def divide(top, left, bottom, right):
        wall_rows = [r for r in range(top + 1, bottom) if r % 2 == 0]
        wall_cols = [c for c in range(left + 1, right) if c % 2 == 0]
        h, w = bottom - top + 1, right - left + 1
        horizontal = bool(wall_rows) and (h >= w or not wall_cols)
        if horizontal:
            gaps = _gap_positions(rng, [c for c in range(left, right + 1) if c % 2 == 1])
            if not gaps:
                return
            wall = wall_rows[int(rng.integers(len(wall_rows)))]
            for c in range(left, right + 1):
                if c not in gaps:
                    blocked[wall, c] = True
            divide(top, left, wall - 1, right)
            divide(wall + 1, left, bottom, right)
        elif wall_cols:
            gaps = _gap_positions(rng, [r for r in range(top, bottom + 1) if r % 2 == 1])
            if not gaps:
                return
            wall = wall_cols[int(rng.integers(len(wall_cols)))]
            for r in range(top, bottom + 1):
                if r not in gaps:
                    blocked[r, wall] = True
            divide(top, left, bottom, wall - 1)
            divide(top, wall + 1, bottom, right)

    divide(0, 0, height - 1, width - 1)

    # Loop openings: remove wall cells whose removal joins two free cells.
    walls = np.argwhere(blocked)
    rng.shuffle(walls)
    for r, c in walls:
        if rng.random() >= extra_opening_rate:
            continue
        horiz = c > 0 and c + 1 < width and not blocked[r, c - 1] and not blocked[r, c + 1]
        vert = r > 0 and r + 1 < height and not blocked[r - 1, c] and not blocked[r + 1, c]
        if horiz or vert:
            blocked[r, c] = False
    grid = Grid(blocked)
    assert grid.is_connected(), "maze generator must keep the free region connected"
    return grid


def _gap_positions(rng, candidates):
    if not candidates:
        return set()
    num_gaps = 1 if len(candidates) <= 2 else 2
    picks = rng.choice(len(candidates), size=num_gaps, replace=False)
    return {candidates[int(g)] for g in picks}
