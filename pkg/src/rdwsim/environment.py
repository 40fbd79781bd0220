"""Scene construction: the four benchmark physical rooms, randomized virtual
spaces with thin wall obstacles, and collection-target spawning.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .geometry import GEOM_EPS, Polygon, Vec2

GRID_CELL = 0.25
CONNECTED_FRACTION = 0.95

VIRTUAL_HALF_EXTENT = 10.0
WALL_LENGTH = 4.0
WALL_THICKNESS = 0.1
WALL_MIN_SEPARATION = 0.6
WALL_COUNT_RANGE = (10, 15)
GENERATION_ATTEMPTS = 10_000

TARGET_MIN_DIST = 0.2
TARGET_MAX_DIST = 8.0
TARGET_MIN_CLEARANCE = 0.3
TARGET_COLLECTION_RADIUS = 0.2
TARGET_SPAWN_ATTEMPTS = 10_000

DEFAULT_BODY_RADIUS = 0.5

PHYSICAL_EXPERIMENTS = ("e1", "e2", "e3", "e4")


class SpaceGenerationError(RuntimeError):
    """Rejection sampling exhausted while generating a virtual space."""


class TargetSpawnError(RuntimeError):
    """No valid target position found around the agent."""


class SpaceMap:
    """Polygonal boundary plus polygonal obstacles, with precomputed arrays
    for the numeric kernels and occupancy grids for planning queries.

    nav_radius is the disc radius used to inflate obstacles in the navigation
    grid (agent body radius).
    """

    def __init__(self, boundary: Polygon, obstacles=(), kind: str = "physical",
                 nav_radius: float = DEFAULT_BODY_RADIUS):
        if kind not in ("physical", "virtual"):
            raise ValueError(f"unknown space kind {kind!r}")
        self.boundary = boundary
        self.obstacles = tuple(obstacles)
        self.kind = kind
        self.nav_radius = float(nav_radius)

        self._bvx, self._bvy = boundary.vertex_arrays
        if self.obstacles:
            self._ovx = np.concatenate([o.vertex_arrays[0] for o in self.obstacles])
            self._ovy = np.concatenate([o.vertex_arrays[1] for o in self.obstacles])
            offs = np.zeros(len(self.obstacles) + 1, dtype=np.int64)
            for i, o in enumerate(self.obstacles):
                offs[i + 1] = offs[i] + len(o.vertices)
            self._ooff = offs
            self.edges = np.concatenate(
                [boundary.edge_array] + [o.edge_array for o in self.obstacles]
            )
        else:
            self._ovx = np.empty(0, dtype=np.float64)
            self._ovy = np.empty(0, dtype=np.float64)
            self._ooff = np.zeros(1, dtype=np.int64)
            self.edges = boundary.edge_array.copy()

        self._validate_layout()
        self._build_grids()
        self._build_apf_samples()
        self._nav_labels = None

    # -- construction checks ------------------------------------------------

    def _validate_layout(self):
        bx, by = self._bvx, self._bvy
        bedges = self.boundary.edge_array
        for obs in self.obstacles:
            for v in obs.vertices:
                if not kernels.point_in_poly(v.x, v.y, bx, by):
                    raise ValueError("obstacle vertex outside boundary")
                if kernels.min_dist_to_edges(v.x, v.y, bedges) <= GEOM_EPS:
                    raise ValueError("obstacle touches the boundary")
            for e in obs.edge_array:
                for be in bedges:
                    if kernels.segments_properly_intersect(
                        e[0], e[1], e[2], e[3], be[0], be[1], be[2], be[3]
                    ):
                        raise ValueError("obstacle crosses the boundary")
        for i in range(len(self.obstacles)):
            for j in range(i + 1, len(self.obstacles)):
                if self._polygons_overlap(self.obstacles[i], self.obstacles[j]):
                    raise ValueError("obstacles overlap")

    @staticmethod
    def _polygons_overlap(a: Polygon, b: Polygon) -> bool:
        for e in a.edge_array:
            for f in b.edge_array:
                if kernels.segments_properly_intersect(
                    e[0], e[1], e[2], e[3], f[0], f[1], f[2], f[3]
                ):
                    return True
        if any(b.contains(v) for v in a.vertices):
            return True
        if any(a.contains(v) for v in b.vertices):
            return True
        return False

    def _build_grids(self):
        x0, y0, x1, y1 = self.boundary.bbox
        self.grid_x0 = x0
        self.grid_y0 = y0
        self.grid_cell = GRID_CELL
        nx = max(1, int(math.ceil((x1 - x0) / GRID_CELL)))
        ny = max(1, int(math.ceil((y1 - y0) / GRID_CELL)))
        nav_margin = self.nav_radius + 0.5 * GRID_CELL * math.sqrt(2.0)
        self.free_mask, self.nav_mask, self.clearance_grid = kernels.scene_grids(
            x0, y0, nx, ny, GRID_CELL, self.edges,
            self._bvx, self._bvy, self._ovx, self._ovy, self._ooff, nav_margin,
        )
        total_free = int(self.free_mask.sum())
        if total_free == 0:
            raise ValueError("space has no free cells at grid resolution")
        seed = np.unravel_index(int(np.argmax(self.clearance_grid)), self.clearance_grid.shape)
        reached = kernels.flood_fill_count(self.free_mask, seed[0], seed[1])
        self.connected_fraction = reached / total_free
        if self.connected_fraction < CONNECTED_FRACTION:
            raise ValueError(
                f"free space is disconnected ({self.connected_fraction:.2%} reachable)"
            )

    def _build_apf_samples(self):
        # edge midpoint samples at <= GRID_CELL spacing; weights = spacing
        sx, sy, w = [], [], []
        for e in self.edges:
            ax, ay, bx, by = e
            length = math.hypot(bx - ax, by - ay)
            n = max(1, int(math.ceil(length / GRID_CELL)))
            spacing = length / n
            for i in range(n):
                t = (i + 0.5) / n
                sx.append(ax + t * (bx - ax))
                sy.append(ay + t * (by - ay))
                w.append(spacing)
        self.apf_sx = np.array(sx, dtype=np.float64)
        self.apf_sy = np.array(sy, dtype=np.float64)
        self.apf_w = np.array(w, dtype=np.float64)

    # -- queries --------------------------------------------------------------

    @property
    def kernel_args(self) -> tuple:
        """(edges, bvx, bvy, ovx, ovy, ooff) for the numeric kernels."""
        return (self.edges, self._bvx, self._bvy, self._ovx, self._ovy, self._ooff)

    def in_free_space(self, p: Vec2) -> bool:
        if not kernels.point_in_poly(p.x, p.y, self._bvx, self._bvy):
            return False
        return not kernels.point_in_any_poly(p.x, p.y, self._ovx, self._ovy, self._ooff)

    def clearance(self, p: Vec2) -> float:
        return kernels.free_clearance(
            p.x, p.y, self.edges, self._bvx, self._bvy, self._ovx, self._ovy, self._ooff
        )

    def clearance_xy(self, x: float, y: float) -> float:
        return kernels.free_clearance(
            x, y, self.edges, self._bvx, self._bvy, self._ovx, self._ovy, self._ooff
        )

    def raycast_xy(self, x: float, y: float, angle: float, max_range: float) -> float:
        """Geometric raycast without the free-space precondition."""
        return kernels.raycast_edges(x, y, math.cos(angle), math.sin(angle), self.edges, max_range)

    def cell_of(self, p: Vec2) -> tuple[int, int]:
        i = int((p.x - self.grid_x0) / self.grid_cell)
        j = int((p.y - self.grid_y0) / self.grid_cell)
        i = min(max(i, 0), self.free_mask.shape[0] - 1)
        j = min(max(j, 0), self.free_mask.shape[1] - 1)
        return i, j

    def cell_center(self, i: int, j: int) -> Vec2:
        return Vec2(
            self.grid_x0 + (i + 0.5) * self.grid_cell,
            self.grid_y0 + (j + 0.5) * self.grid_cell,
        )

    @property
    def nav_labels(self) -> np.ndarray:
        if self._nav_labels is None:
            self._nav_labels = kernels.label_components(self.nav_mask)
        return self._nav_labels

    def nearest_nav_cell(self, p: Vec2, max_ring: int = 4) -> tuple[int, int] | None:
        """Navigable cell containing p, else the nearest one within max_ring
        cells (an agent hugging a wall sits in a non-navigable cell)."""
        i0, j0 = self.cell_of(p)
        if self.nav_mask[i0, j0]:
            return i0, j0
        nx, ny = self.nav_mask.shape
        for ring in range(1, max_ring + 1):
            best = None
            best_d2 = math.inf
            for i in range(i0 - ring, i0 + ring + 1):
                if i < 0 or i >= nx:
                    continue
                for j in range(j0 - ring, j0 + ring + 1):
                    if j < 0 or j >= ny:
                        continue
                    if max(abs(i - i0), abs(j - j0)) != ring or self.nav_mask[i, j] == 0:
                        continue
                    c = self.cell_center(i, j)
                    d2 = (c.x - p.x) ** 2 + (c.y - p.y) ** 2
                    if d2 < best_d2:
                        best_d2 = d2
                        best = (i, j)
            if best is not None:
                return best
        return None

    def reachable(self, a: Vec2, b: Vec2) -> bool:
        """True when a navigable grid path exists from near a to b's cell."""
        ca = self.nearest_nav_cell(a)
        if ca is None:
            return False
        ib, jb = self.cell_of(b)
        if self.nav_mask[ib, jb] == 0:
            return False
        labels = self.nav_labels
        return labels[ca[0], ca[1]] == labels[ib, jb]

    def center(self) -> Vec2:
        return self.boundary.centroid

    # -- serialization ----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "boundary": [[v.x, v.y] for v in self.boundary.vertices],
            "obstacles": [[[v.x, v.y] for v in o.vertices] for o in self.obstacles],
        }

    @classmethod
    def from_dict(cls, data: dict, nav_radius: float = DEFAULT_BODY_RADIUS) -> "SpaceMap":
        boundary = Polygon([Vec2(x, y) for x, y in data["boundary"]])
        obstacles = [Polygon([Vec2(x, y) for x, y in poly]) for poly in data.get("obstacles", [])]
        return cls(boundary, obstacles, kind=data.get("kind", "physical"), nav_radius=nav_radius)


def save_scene(space: SpaceMap, path) -> None:
    Path(path).write_text(json.dumps(space.to_dict(), indent=2) + "\n")


def load_scene(path, nav_radius: float = DEFAULT_BODY_RADIUS) -> SpaceMap:
    return SpaceMap.from_dict(json.loads(Path(path).read_text()), nav_radius=nav_radius)


@dataclass(frozen=True)
class Target:
    position: Vec2
    radius: float = TARGET_COLLECTION_RADIUS


def _square(cx: float, cy: float, half: float) -> Polygon:
    return Polygon(
        [
            Vec2(cx - half, cy - half),
            Vec2(cx + half, cy - half),
            Vec2(cx + half, cy + half),
            Vec2(cx - half, cy + half),
        ]
    )


def _wall_rect(cx: float, cy: float, angle: float) -> Polygon:
    ux, uy = math.cos(angle), math.sin(angle)
    hx, hy = -uy, ux
    hl = 0.5 * WALL_LENGTH
    ht = 0.5 * WALL_THICKNESS
    return Polygon(
        [
            Vec2(cx - hl * ux - ht * hx, cy - hl * uy - ht * hy),
            Vec2(cx + hl * ux - ht * hx, cy + hl * uy - ht * hy),
            Vec2(cx + hl * ux + ht * hx, cy + hl * uy + ht * hy),
            Vec2(cx - hl * ux + ht * hx, cy - hl * uy + ht * hy),
        ]
    )


def build_physical_space(experiment: str, nav_radius: float = DEFAULT_BODY_RADIUS) -> SpaceMap:
    """Deterministic benchmark rooms, all centered at the origin.

    e1: empty 4x4, e2: empty 10x10, e3: 10x10 with a central 4x4 obstacle,
    e4: 10x10 with four 2x2 obstacles at the quadrant centers.
    """
    exp = experiment.lower()
    if exp == "e1":
        return SpaceMap(_square(0, 0, 2.0), (), "physical", nav_radius)
    if exp == "e2":
        return SpaceMap(_square(0, 0, 5.0), (), "physical", nav_radius)
    if exp == "e3":
        return SpaceMap(_square(0, 0, 5.0), (_square(0, 0, 2.0),), "physical", nav_radius)
    if exp == "e4":
        obstacles = tuple(
            _square(sx * 2.5, sy * 2.5, 1.0) for sx in (-1, 1) for sy in (-1, 1)
        )
        return SpaceMap(_square(0, 0, 5.0), obstacles, "physical", nav_radius)
    raise ValueError(f"unknown experiment {experiment!r} (expected one of {PHYSICAL_EXPERIMENTS})")


def _min_dist_between_polys(a: Polygon, b: Polygon) -> float:
    best = math.inf
    for e in a.edge_array:
        d = kernels.segment_min_dist_to_edges(e[0], e[1], e[2], e[3], b.edge_array)
        if d < best:
            best = d
    return best


def generate_virtual_space(rng: np.random.Generator,
                           nav_radius: float = DEFAULT_BODY_RADIUS) -> SpaceMap:
    """Random 20x20 virtual space with 10-15 thin 4 m walls.

    Walls keep WALL_MIN_SEPARATION from each other and from the boundary and
    the free space must stay connected on the 0.25 m grid; placements are
    rejection-sampled, failing after GENERATION_ATTEMPTS tries.
    """
    boundary = _square(0, 0, VIRTUAL_HALF_EXTENT)
    bedges = boundary.edge_array
    n_walls = int(rng.integers(WALL_COUNT_RANGE[0], WALL_COUNT_RANGE[1] + 1))
    attempts = 0
    while True:
        walls: list[Polygon] = []
        while len(walls) < n_walls:
            attempts += 1
            if attempts > GENERATION_ATTEMPTS:
                raise SpaceGenerationError(
                    f"exceeded {GENERATION_ATTEMPTS} wall placement attempts"
                )
            cx = float(rng.uniform(-VIRTUAL_HALF_EXTENT, VIRTUAL_HALF_EXTENT))
            cy = float(rng.uniform(-VIRTUAL_HALF_EXTENT, VIRTUAL_HALF_EXTENT))
            angle = float(rng.uniform(0.0, math.pi))
            wall = _wall_rect(cx, cy, angle)
            if not all(boundary.contains(v) for v in wall.vertices):
                continue
            sep = math.inf
            for e in wall.edge_array:
                sep = min(sep, kernels.segment_min_dist_to_edges(e[0], e[1], e[2], e[3], bedges))
            if sep < WALL_MIN_SEPARATION:
                continue
            if any(_min_dist_between_polys(wall, w) < WALL_MIN_SEPARATION for w in walls):
                continue
            walls.append(wall)
        try:
            return SpaceMap(boundary, walls, "virtual", nav_radius)
        except ValueError:
            continue  # disconnected at grid level; retry a fresh layout


def sample_free_position(rng: np.random.Generator, space: SpaceMap,
                         min_clear: float, navigable: bool = False,
                         max_attempts: int = 10_000) -> Vec2:
    """Uniform rejection sample of a free-space position with given clearance."""
    x0, y0, x1, y1 = space.boundary.bbox
    for _ in range(max_attempts):
        x = float(rng.uniform(x0, x1))
        y = float(rng.uniform(y0, y1))
        if space.clearance_xy(x, y) <= min_clear:
            continue
        p = Vec2(x, y)
        if navigable:
            i, j = space.cell_of(p)
            if space.nav_mask[i, j] == 0:
                continue
        return p
    raise SpaceGenerationError("could not sample a free position")


def spawn_target(rng: np.random.Generator, agent_pos: Vec2, space: SpaceMap) -> Target:
    """Sample a reachable collection target 0.2-8.0 m from the agent.

    The target keeps TARGET_MIN_CLEARANCE from every wall and must be
    connected to the agent on the navigation grid; the effective clearance is
    therefore at least the navigation inflation radius.
    """
    for _ in range(TARGET_SPAWN_ATTEMPTS):
        r = float(rng.uniform(TARGET_MIN_DIST, TARGET_MAX_DIST))
        a = float(rng.uniform(-math.pi, math.pi))
        x = agent_pos.x + r * math.cos(a)
        y = agent_pos.y + r * math.sin(a)
        if space.clearance_xy(x, y) < TARGET_MIN_CLEARANCE:
            continue
        p = Vec2(x, y)
        if not space.reachable(agent_pos, p):
            continue
        return Target(p, TARGET_COLLECTION_RADIUS)
    raise TargetSpawnError(
        f"no valid target around {agent_pos} in {TARGET_SPAWN_ATTEMPTS} draws"
    )


def project_into_boundary(space: SpaceMap, p: Vec2, inset: float) -> Vec2:
    """Project p into the boundary polygon shrunk inward by inset.

    Exact (componentwise clamp) for axis-aligned rectangular boundaries, which
    all shipped scenes use; other shapes fall back to a bisection pull toward
    the centroid.
    """
    x0, y0, x1, y1 = space.boundary.bbox
    if _is_axis_rect(space.boundary):
        x = min(max(p.x, x0 + inset), x1 - inset)
        y = min(max(p.y, y0 + inset), y1 - inset)
        return Vec2(x, y)
    if space.boundary.contains(p) and kernels.min_dist_to_edges(
        p.x, p.y, space.boundary.edge_array
    ) >= inset:
        return p
    c = space.boundary.centroid
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        q = Vec2(p.x + (c.x - p.x) * mid, p.y + (c.y - p.y) * mid)
        if space.boundary.contains(q) and kernels.min_dist_to_edges(
            q.x, q.y, space.boundary.edge_array
        ) >= inset:
            hi = mid
        else:
            lo = mid
    return Vec2(p.x + (c.x - p.x) * hi, p.y + (c.y - p.y) * hi)


def _is_axis_rect(poly: Polygon) -> bool:
    if len(poly.vertices) != 4:
        return False
    for e in poly.edge_array:
        if abs(e[0] - e[2]) > GEOM_EPS and abs(e[1] - e[3]) > GEOM_EPS:
            return False
    return True
