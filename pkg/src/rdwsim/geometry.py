"""Exact 2D primitives: vectors, segments, polygons, raycasting, clearance.

All geometry is double precision; intersection predicates use a fixed 1e-9
tolerance (scene scale is at most 20 m, leaving ample margin).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Iterator

import numpy as np

from . import kernels
from .kernels import GEOM_EPS, wrap_angle

if TYPE_CHECKING:
    from .environment import SpaceMap

__all__ = [
    "Vec2",
    "Segment",
    "Polygon",
    "OutsideFreeSpaceError",
    "distance_point_segment",
    "point_in_polygon",
    "raycast",
    "min_clearance",
    "wrap_angle",
]


class OutsideFreeSpaceError(ValueError):
    """Raycast queried from a point outside the free space."""


@dataclass(frozen=True)
class Vec2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite Vec2 components ({self.x}, {self.y})")

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, s: float) -> "Vec2":
        return Vec2(self.x * s, self.y * s)

    __rmul__ = __mul__

    def __neg__(self) -> "Vec2":
        return Vec2(-self.x, -self.y)

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: "Vec2") -> float:
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def distance_to(self, other: "Vec2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def normalized(self) -> "Vec2":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero vector")
        return Vec2(self.x / n, self.y / n)

    def angle(self) -> float:
        return math.atan2(self.y, self.x)

    def rotated(self, angle: float) -> "Vec2":
        c = math.cos(angle)
        s = math.sin(angle)
        return Vec2(c * self.x - s * self.y, s * self.x + c * self.y)

    @staticmethod
    def unit(angle: float) -> "Vec2":
        return Vec2(math.cos(angle), math.sin(angle))

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Segment:
    a: Vec2
    b: Vec2

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("degenerate segment: endpoints coincide")

    def length(self) -> float:
        return self.a.distance_to(self.b)


@dataclass(frozen=True)
class Polygon:
    """Simple polygon; winding is normalized to counter-clockwise."""

    vertices: tuple[Vec2, ...]

    def __init__(self, vertices):
        verts = tuple(vertices)
        if len(verts) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        area2 = 0.0
        n = len(verts)
        for i in range(n):
            a = verts[i]
            b = verts[(i + 1) % n]
            area2 += a.x * b.y - b.x * a.y
        if abs(area2) <= GEOM_EPS:
            raise ValueError("degenerate polygon: zero area")
        if area2 < 0.0:
            verts = verts[::-1]
        object.__setattr__(self, "vertices", verts)
        self._check_simple()

    def _check_simple(self):
        n = len(self.vertices)
        for i in range(n):
            a1 = self.vertices[i]
            a2 = self.vertices[(i + 1) % n]
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue
                b1 = self.vertices[j]
                b2 = self.vertices[(j + 1) % n]
                if kernels.segments_properly_intersect(
                    a1.x, a1.y, a2.x, a2.y, b1.x, b1.y, b2.x, b2.y
                ):
                    raise ValueError("polygon is self-intersecting")

    def edges(self) -> Iterator[Segment]:
        n = len(self.vertices)
        for i in range(n):
            yield Segment(self.vertices[i], self.vertices[(i + 1) % n])

    @cached_property
    def vertex_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        vx = np.array([v.x for v in self.vertices], dtype=np.float64)
        vy = np.array([v.y for v in self.vertices], dtype=np.float64)
        return vx, vy

    @cached_property
    def edge_array(self) -> np.ndarray:
        n = len(self.vertices)
        out = np.empty((n, 4), dtype=np.float64)
        for i in range(n):
            a = self.vertices[i]
            b = self.vertices[(i + 1) % n]
            out[i] = (a.x, a.y, b.x, b.y)
        return out

    @cached_property
    def area(self) -> float:
        area2 = 0.0
        n = len(self.vertices)
        for i in range(n):
            a = self.vertices[i]
            b = self.vertices[(i + 1) % n]
            area2 += a.x * b.y - b.x * a.y
        return 0.5 * area2

    @cached_property
    def centroid(self) -> Vec2:
        cx = 0.0
        cy = 0.0
        area2 = 0.0
        n = len(self.vertices)
        for i in range(n):
            a = self.vertices[i]
            b = self.vertices[(i + 1) % n]
            w = a.x * b.y - b.x * a.y
            area2 += w
            cx += (a.x + b.x) * w
            cy += (a.y + b.y) * w
        return Vec2(cx / (3.0 * area2), cy / (3.0 * area2))

    @cached_property
    def bbox(self) -> tuple[float, float, float, float]:
        xs = [v.x for v in self.vertices]
        ys = [v.y for v in self.vertices]
        return (min(xs), min(ys), max(xs), max(ys))

    def contains(self, p: Vec2) -> bool:
        vx, vy = self.vertex_arrays
        return bool(kernels.point_in_poly(p.x, p.y, vx, vy))


def distance_point_segment(p: Vec2, s: Segment) -> float:
    """Euclidean distance from p to the closest point of s."""
    return kernels.point_segment_dist(p.x, p.y, s.a.x, s.a.y, s.b.x, s.b.y)


def point_in_polygon(p: Vec2, poly: Polygon) -> bool:
    """True when p is inside poly; points on the boundary count as inside."""
    return poly.contains(p)


def raycast(origin: Vec2, direction: Vec2, space: "SpaceMap", max_range: float) -> float:
    """Distance to the first boundary/obstacle edge hit, capped at max_range.

    The origin must lie in the free space of the queried scene.
    """
    n = direction.norm()
    if abs(n - 1.0) > 1e-6:
        raise ValueError("raycast direction must be a unit vector")
    if not space.in_free_space(origin):
        raise OutsideFreeSpaceError(f"raycast origin {origin} outside free space")
    return kernels.raycast_edges(origin.x, origin.y, direction.x, direction.y, space.edges, max_range)


def min_clearance(p: Vec2, space: "SpaceMap") -> float:
    """Distance from p to the nearest edge; 0.0 when p is outside free space."""
    return space.clearance(p)
