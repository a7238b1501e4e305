"""3-D occupancy grid with the geometric queries used by risk, tether and planner.

Axis convention: ``y`` is vertical.  Cell ``(i, j, k)`` covers
``[i*s, (i+1)*s] x [j*s, (j+1)*s] x [k*s, (k+1)*s]``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import ndimage

from . import kernels
from .errors import CollisionError, ConfigError

DEFAULT_ISOVIST_RAYS = 64

NEIGHBOR_OFFSETS = tuple(
    d for d in itertools.product((-1, 0, 1), repeat=3) if d != (0, 0, 0)
)


def fibonacci_sphere(k):
    """``k`` unit vectors spread evenly over the sphere (y is the polar axis)."""
    i = np.arange(k, dtype=np.float64)
    y = 1.0 - (2.0 * i + 1.0) / k
    r = np.sqrt(1.0 - y * y)
    golden = np.pi * (3.0 - np.sqrt(5.0))
    phi = golden * i
    return np.column_stack([r * np.cos(phi), y, r * np.sin(phi)])


@dataclass(eq=False)
class GridWorld:
    occupied: np.ndarray
    cell_size: float
    void_labels: np.ndarray | None = None
    access: dict = field(default_factory=dict)
    anchor: tuple | None = None
    start: tuple | None = None
    affordances: dict = field(default_factory=dict)
    name: str = "world"

    def __post_init__(self):
        self.occupied = np.ascontiguousarray(self.occupied, dtype=np.bool_)
        if self.occupied.ndim != 3:
            raise ConfigError("occupancy grid must be 3-D")
        if not self.cell_size > 0:
            raise ConfigError("cell_size must be positive")
        self.cell_size = float(self.cell_size)
        self.void_labels = self.segment_voids(self.void_labels)
        self.access = {(int(a), int(b)): float(v) for (a, b), v in self.access.items()}
        self.occupied.flags.writeable = False
        self._neighbors = {}
        self._isovist_cache = {}

    @classmethod
    def empty(cls, dims, cell_size=1.0, **kw):
        return cls(np.zeros(dims, dtype=bool), cell_size, **kw)

    @property
    def dims(self):
        return self.occupied.shape

    @property
    def extent(self):
        return np.array(self.dims, dtype=np.float64) * self.cell_size

    @cached_property
    def diagonal(self):
        return float(np.linalg.norm(self.extent))

    # -- cells -------------------------------------------------------------

    def in_bounds(self, cell):
        nx, ny, nz = self.occupied.shape
        return 0 <= cell[0] < nx and 0 <= cell[1] < ny and 0 <= cell[2] < nz

    def is_free(self, cell):
        """Out-of-bounds cells are reported as not free."""
        cell = tuple(int(c) for c in cell)
        return self.in_bounds(cell) and not self.occupied[cell]

    def cell_center(self, cell):
        return (np.asarray(cell, dtype=np.float64) + 0.5) * self.cell_size

    def cell_of(self, p):
        return tuple(int(c) for c in np.floor(np.asarray(p, dtype=np.float64) / self.cell_size))

    def point_free(self, p):
        s = self.cell_size
        nx, ny, nz = self.occupied.shape
        x, y, z = float(p[0]), float(p[1]), float(p[2])
        if not (0.0 < x < nx * s and 0.0 < y < ny * s and 0.0 < z < nz * s):
            return False
        return not self.occupied[math.floor(x / s), math.floor(y / s), math.floor(z / s)]

    @cached_property
    def free_cells(self):
        return [tuple(int(v) for v in c) for c in np.argwhere(~self.occupied)]

    @cached_property
    def _occupied_idx(self):
        return np.argwhere(self.occupied)

    # -- geometric queries -------------------------------------------------

    def line_of_sight(self, a, b):
        """True iff segment a-b touches no occupied cell (grazing counts as blocked)."""
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        # fixed endpoint order keeps grazing decisions symmetric
        if tuple(b) < tuple(a):
            a, b = b, a
        return not kernels.segment_blocked(self.occupied, self.cell_size, a, b)

    def sweep_free(self, a, b, c):
        """True iff the closed triangle a-b-c touches no occupied cell."""
        tri = np.array(sorted(tuple(float(v) for v in p) for p in (a, b, c)), dtype=np.float64)
        return not kernels.triangle_blocked(self.occupied, self.cell_size, tri)

    def _require_free(self, p):
        if not self.point_free(p):
            raise CollisionError(f"in-collision query at {tuple(np.round(p, 6))}")

    @cached_property
    def distance_field(self):
        """Exact obstacle distance at every free cell center (NaN on occupied cells)."""
        field_ = kernels.distance_field(self.occupied, self.cell_size)
        field_.flags.writeable = False
        return field_

    def _center_cell(self, p):
        """The cell whose center is exactly ``p``, else None."""
        s = self.cell_size
        x, y, z = float(p[0]), float(p[1]), float(p[2])
        cell = (math.floor(x / s), math.floor(y / s), math.floor(z / s))
        if not self.in_bounds(cell):
            return None
        if (cell[0] + 0.5) * s == x and (cell[1] + 0.5) * s == y and (cell[2] + 0.5) * s == z:
            return cell
        return None

    def distance_to_obstacle(self, p):
        """Distance from ``p`` to the nearest occupied-cell surface or the workspace boundary."""
        p = np.asarray(p, dtype=np.float64)
        self._require_free(p)
        cell = self._center_cell(p)
        if cell is not None:
            return float(self.distance_field[cell])
        return float(kernels.obstacle_distance(self.occupied, self.cell_size, p))

    def ray_lengths(self, p, dirs, r_max):
        p = np.asarray(p, dtype=np.float64)
        dirs = np.ascontiguousarray(dirs, dtype=np.float64)
        return kernels.ray_lengths(self.occupied, self.cell_size, p, dirs, float(r_max))

    def isovist_score(self, p, k=DEFAULT_ISOVIST_RAYS, r_max=None):
        """Mean free ray length over ``k`` Fibonacci-sphere rays, divided by ``r_max``."""
        if k < 6:
            raise ValueError("isovist needs at least 6 rays")
        p = np.asarray(p, dtype=np.float64)
        self._require_free(p)
        r_max = self.diagonal if r_max is None else float(r_max)
        cell = self._center_cell(p)
        if cell is not None:
            return float(self.isovist_field(k, r_max)[cell])
        lengths = self.ray_lengths(p, fibonacci_sphere(k), r_max)
        return float(np.mean(lengths) / r_max)

    def isovist_field(self, k=DEFAULT_ISOVIST_RAYS, r_max=None):
        """Isovist score at every free cell center (NaN on occupied cells)."""
        r_max = self.diagonal if r_max is None else float(r_max)
        key = ("field", k, r_max)
        hit = self._isovist_cache.get(key)
        if hit is None:
            dirs = fibonacci_sphere(k)
            hit = np.full(self.dims, np.nan)
            for c in self.free_cells:
                hit[c] = np.mean(self.ray_lengths(self.cell_center(c), dirs, r_max)) / r_max
            hit.flags.writeable = False
            self._isovist_cache[key] = hit
        return hit

    @cached_property
    def clearance_field(self):
        """Vertical clearance at every free cell center (NaN on occupied cells)."""
        out = np.full(self.dims, np.nan)
        up_down = np.array([[0.0, 1.0, 0.0], [0.0, -1.0, 0.0]])
        for c in self.free_cells:
            out[c] = self.ray_lengths(self.cell_center(c), up_down, 2.0 * self.diagonal).min()
        out.flags.writeable = False
        return out

    def vertical_clearance(self, p):
        """Smallest vertical gap from ``p`` to a surface above or below."""
        p = np.asarray(p, dtype=np.float64)
        self._require_free(p)
        cell = self._center_cell(p)
        if cell is not None:
            return float(self.clearance_field[cell])
        up_down = np.array([[0.0, 1.0, 0.0], [0.0, -1.0, 0.0]])
        return float(self.ray_lengths(p, up_down, 2.0 * self.diagonal).min())

    # -- connectivity ------------------------------------------------------

    def neighbors(self, cell):
        """Free 26-neighbors reachable by a straight, non-grazing move between centers."""
        cell = tuple(cell)
        hit = self._neighbors.get(cell)
        if hit is not None:
            return hit
        c = self.cell_center(cell)
        out = []
        for d in NEIGHBOR_OFFSETS:
            n = (cell[0] + d[0], cell[1] + d[1], cell[2] + d[2])
            if self.is_free(n) and self.line_of_sight(c, self.cell_center(n)):
                out.append(n)
        out = tuple(out)
        self._neighbors[cell] = out
        return out

    def segment_voids(self, labels=None):
        """Void labeling of free space.

        Supplied labels are checked (partition of free cells, each void
        26-connected); otherwise 26-connected components are computed.
        Occupied cells carry -1.
        """
        free = ~self.occupied
        structure = np.ones((3, 3, 3), dtype=bool)
        if labels is None:
            comp, _ = ndimage.label(free, structure=structure)
            return (comp - 1).astype(np.int64)
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != self.occupied.shape:
            raise ConfigError("void label grid does not match dims")
        if np.any(labels[free] < 0):
            raise ConfigError("void labels must cover every free cell")
        if np.any(labels[self.occupied] >= 0):
            raise ConfigError("occupied cells must not carry a void label")
        for vid in np.unique(labels[free]):
            _, n = ndimage.label(labels == vid, structure=structure)
            if n != 1:
                raise ConfigError(f"void {int(vid)} is not connected")
        return labels

    def void_of(self, cell):
        return int(self.void_labels[tuple(cell)])

    def access_difficulty(self, void_from, void_to):
        if void_from == void_to:
            return 0.0
        return self.access.get((void_from, void_to), 0.0)
