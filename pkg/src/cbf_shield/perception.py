"""Occupancy-grid to bounding-box conversion.

Grid cells not already explained by vectorized boxes are clustered, hulled,
and wrapped in minimum-area rectangles, yielding supplementary obstacle boxes
that make rasterized perception consumable by the constraint layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import BoundingBox, convex_hull, min_area_rect


class GridFormatError(ValueError):
    """Malformed occupancy-grid text; message carries the offending line number."""


@dataclass(frozen=True)
class OccupancyGrid:
    """Row-major boolean occupancy raster.

    ``origin_x, origin_y`` locate the corner of cell (col 0, row 0); row 0 is
    the minimum-y row. Cell index = row * n_cols + col.
    """

    origin_x: float
    origin_y: float
    resolution: float
    n_cols: int
    n_rows: int
    cells: np.ndarray

    def __post_init__(self):
        if self.resolution <= 0.0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        if self.n_cols <= 0 or self.n_rows <= 0:
            raise ValueError("grid dimensions must be positive")
        cells = np.asarray(self.cells, dtype=bool).ravel()
        if cells.size != self.n_cols * self.n_rows:
            raise ValueError(
                f"cells length {cells.size} != n_cols*n_rows = {self.n_cols * self.n_rows}")
        cells = cells.copy()
        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)

    def occupied_indices(self) -> np.ndarray:
        return np.flatnonzero(self.cells)

    def cell_center(self, index: int) -> tuple[float, float]:
        row, col = divmod(index, self.n_cols)
        return (self.origin_x + (col + 0.5) * self.resolution,
                self.origin_y + (row + 0.5) * self.resolution)

    def cell_centers(self, indices: np.ndarray) -> np.ndarray:
        idx = np.asarray(indices, dtype=int)
        rows, cols = np.divmod(idx, self.n_cols)
        return np.stack([self.origin_x + (cols + 0.5) * self.resolution,
                         self.origin_y + (rows + 0.5) * self.resolution], axis=1)

    def cell_corners(self, indices: np.ndarray) -> np.ndarray:
        """All 4 corner points of the given cells, shape (4*len(indices), 2)."""
        idx = np.asarray(indices, dtype=int)
        rows, cols = np.divmod(idx, self.n_cols)
        x0 = self.origin_x + cols * self.resolution
        y0 = self.origin_y + rows * self.resolution
        r = self.resolution
        corners = np.empty((idx.size, 4, 2))
        corners[:, 0, 0] = x0
        corners[:, 0, 1] = y0
        corners[:, 1, 0] = x0 + r
        corners[:, 1, 1] = y0
        corners[:, 2, 0] = x0 + r
        corners[:, 2, 1] = y0 + r
        corners[:, 3, 0] = x0
        corners[:, 3, 1] = y0 + r
        return corners.reshape(-1, 2)

    def to_text(self) -> str:
        lines = [
            "ogm v1",
            f"origin {self.origin_x!r} {self.origin_y!r}",
            f"resolution {self.resolution!r}",
            f"size {self.n_cols} {self.n_rows}",
        ]
        grid = self.cells.reshape(self.n_rows, self.n_cols)
        for row in grid:
            lines.append("".join("#" if v else "." for v in row))
        return "\n".join(lines) + "\n"


def parse_grid(text: str) -> OccupancyGrid:
    """Parse the line-oriented ``ogm v1`` format.

    Header: ``ogm v1`` / ``origin <x> <y>`` / ``resolution <r>`` /
    ``size <n_cols> <n_rows>``; then n_rows data lines of n_cols characters
    ('#' occupied, '.' free), first data line = row 0 = minimum y.
    """
    lines = text.splitlines()

    def fail(lineno: int, reason: str):
        raise GridFormatError(f"line {lineno}: {reason}")

    def get(lineno: int) -> str:
        if lineno - 1 >= len(lines):
            fail(lineno, "unexpected end of file")
        return lines[lineno - 1]

    if get(1).strip() != "ogm v1":
        fail(1, "expected header 'ogm v1'")
    parts = get(2).split()
    if len(parts) != 3 or parts[0] != "origin":
        fail(2, "expected 'origin <x> <y>'")
    try:
        origin_x, origin_y = float(parts[1]), float(parts[2])
    except ValueError:
        fail(2, "origin coordinates must be numbers")
    parts = get(3).split()
    if len(parts) != 2 or parts[0] != "resolution":
        fail(3, "expected 'resolution <r>'")
    try:
        resolution = float(parts[1])
    except ValueError:
        fail(3, "resolution must be a number")
    if resolution <= 0:
        fail(3, "resolution must be positive")
    parts = get(4).split()
    if len(parts) != 3 or parts[0] != "size":
        fail(4, "expected 'size <n_cols> <n_rows>'")
    try:
        n_cols, n_rows = int(parts[1]), int(parts[2])
    except ValueError:
        fail(4, "size fields must be integers")
    if n_cols <= 0 or n_rows <= 0:
        fail(4, "size fields must be positive")

    cells = np.zeros(n_cols * n_rows, dtype=bool)
    for row in range(n_rows):
        lineno = 5 + row
        line = get(lineno)
        if len(line) != n_cols:
            fail(lineno, f"expected {n_cols} characters, got {len(line)}")
        for col, ch in enumerate(line):
            if ch == "#":
                cells[row * n_cols + col] = True
            elif ch != ".":
                fail(lineno, f"invalid cell character {ch!r} (expected '#' or '.')")
    return OccupancyGrid(origin_x, origin_y, resolution, n_cols, n_rows, cells)


def load_grid(path) -> OccupancyGrid:
    with open(path, "r", encoding="utf-8") as f:
        return parse_grid(f.read())


def rasterize_boxes(boxes: list[BoundingBox], origin: tuple[float, float],
                    resolution: float, n_cols: int, n_rows: int) -> OccupancyGrid:
    """Grid whose cells are occupied iff their center lies inside some box."""
    grid = OccupancyGrid(origin[0], origin[1], resolution, n_cols, n_rows,
                         np.zeros(n_cols * n_rows, dtype=bool))
    centers = grid.cell_centers(np.arange(n_cols * n_rows))
    occ = np.zeros(n_cols * n_rows, dtype=bool)
    for box in boxes:
        occ |= box.contains(centers)
    return OccupancyGrid(origin[0], origin[1], resolution, n_cols, n_rows, occ)


@dataclass(frozen=True)
class CellCluster:
    """A connected group of grid cells: member indices plus their corner points."""

    cell_indices: tuple[int, ...]
    corner_points: np.ndarray | None = None

    def __post_init__(self):
        if not self.cell_indices:
            raise ValueError("cluster must be non-empty")


@dataclass(frozen=True)
class ConversionConfig:
    """Knobs of the grid-to-box pipeline.

    coverage_fraction maps to the cell-center coverage test: a cell counts as
    covered when its center lies inside a box inflated by
    (0.5 - coverage_fraction) * resolution per side. The default 0.0 treats
    any touching box as covering the cell.
    """

    coverage_fraction: float = 0.0
    linkage_factor: float = 1.5

    def __post_init__(self):
        if not 0.0 <= self.coverage_fraction <= 1.0:
            raise ValueError("coverage_fraction must be in [0, 1]")
        if self.linkage_factor <= 0.0:
            raise ValueError("linkage_factor must be positive")


def subtract_covered_cells(grid: OccupancyGrid, boxes: list[BoundingBox],
                           coverage_fraction: float = 0.0) -> list[int]:
    """Indices of occupied cells not covered by any box.

    Coverage test: cell center inside a box inflated by
    (0.5 - coverage_fraction) * resolution per side.
    """
    occupied = grid.occupied_indices()
    if occupied.size == 0 or not boxes:
        return [int(i) for i in occupied]
    centers = grid.cell_centers(occupied)
    inflate = (0.5 - coverage_fraction) * grid.resolution
    covered = np.zeros(occupied.size, dtype=bool)
    for box in boxes:
        covered |= box.contains(centers, inflate=inflate)
    return [int(i) for i in occupied[~covered]]


def cluster_cells(cells: np.ndarray, linkage_threshold: float) -> list[CellCluster]:
    """Single-linkage clustering of cell centers.

    Two cells share a cluster iff connected by a chain of pairwise distances
    <= linkage_threshold. Clusters are ordered by smallest member index;
    members ascend. Indices refer to positions in the input list.
    """
    if linkage_threshold <= 0.0:
        raise ValueError("linkage_threshold must be positive")
    pts = np.asarray(cells, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n == 0:
        return []

    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=2)
    thresh2 = linkage_threshold * linkage_threshold
    ii, jj = np.nonzero(np.triu(d2 <= thresh2, k=1))
    for i, j in zip(ii.tolist(), jj.tolist()):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [CellCluster(tuple(groups[root])) for root in sorted(groups)]


def convert(grid: OccupancyGrid, boxes: list[BoundingBox],
            config: ConversionConfig | None = None) -> list[BoundingBox]:
    """Supplementary boxes for occupied cells the given boxes do not explain.

    Pipeline: subtract covered cells, single-linkage clustering, convex hull
    over the member cells' corner points, minimum-area rectangle per cluster.
    Hulls use cell corners (not centers) so boxes bound the full cell extent;
    degenerate clusters get their width clamped to one resolution.
    """
    cfg = config or ConversionConfig()
    kept = subtract_covered_cells(grid, boxes, cfg.coverage_fraction)
    if not kept:
        return []
    kept_arr = np.asarray(kept, dtype=int)
    centers = grid.cell_centers(kept_arr)
    out: list[BoundingBox] = []
    for cluster in cluster_cells(centers, cfg.linkage_factor * grid.resolution):
        member_cells = kept_arr[list(cluster.cell_indices)]
        corners = grid.cell_corners(member_cells)
        hull = convex_hull(corners)
        out.append(min_area_rect(hull, min_width=grid.resolution))
    return out
