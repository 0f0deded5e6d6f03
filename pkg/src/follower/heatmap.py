"""Visit-count heatmaps: a CSV table and a plain-text pixmap.

Free cells fade from white (never visited) to saturated red (the maximum
count); obstacles render black. The PNM output is the ASCII P3 variant so
files are byte-stable and diffable.
"""

import numpy as np

from .grid import Grid


def heatmap_csv(counts: np.ndarray, grid: Grid) -> str:
    lines = ["row,col,count"]
    for r in range(grid.height):
        for c in range(grid.width):
            lines.append(f"{r},{c},{int(counts[r, c])}")
    return "\n".join(lines) + "\n"


def heatmap_pnm(counts: np.ndarray, grid: Grid) -> str:
    max_count = int(counts.max())
    lines = ["P3", f"{grid.width} {grid.height}", "255"]
    for r in range(grid.height):
        row = []
        for c in range(grid.width):
            if grid.blocked[r, c]:
                row.append("0 0 0")
            else:
                level = 0 if max_count == 0 else int(round(255 * int(counts[r, c]) / max_count))
                row.append(f"255 {255 - level} {255 - level}")
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


def emit_heatmap(counts: np.ndarray, grid: Grid, csv_path, pnm_path):
    if counts.shape != (grid.height, grid.width):
        raise ValueError(
            f"counts shape {counts.shape} does not match grid "
            f"{grid.height}x{grid.width}")
    with open(csv_path, "w") as fh:
        fh.write(heatmap_csv(counts, grid))
    with open(pnm_path, "w") as fh:
        fh.write(heatmap_pnm(counts, grid))


def dispersion(counts: np.ndarray, grid: Grid) -> float:
    """Standard deviation of visit counts over free cells (lower = more even)."""
    return float(counts[~grid.blocked].std())
