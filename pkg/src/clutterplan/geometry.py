"""Planar poses, convex polygons and the queries built on them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np
from shapely.geometry import Polygon as _ShapelyPolygon
from shapely.geometry.polygon import orient
from shapely.ops import unary_union

from . import kernels

POS_TOL = 1e-9


def wrap_angle(theta: float) -> float:
    """Map an angle into (-pi, pi]."""
    theta = math.remainder(theta, 2.0 * math.pi)
    if theta == -math.pi:
        theta = math.pi
    return theta


@dataclass(frozen=True)
class Pose2:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))

    def compose(self, other: "Pose2") -> "Pose2":
        """``self ∘ other``: apply ``other`` first, then ``self``."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2(
            c * other.x - s * other.y + self.x,
            s * other.x + c * other.y + self.y,
            self.theta + other.theta,
        )

    def inverse(self) -> "Pose2":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2(-(c * self.x + s * self.y), s * self.x - c * self.y, -self.theta)

    def apply(self, point: Sequence[float]) -> tuple[float, float]:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return (c * point[0] - s * point[1] + self.x, s * point[0] + c * point[1] + self.y)

    def distance(self, other: "Pose2", angle_weight: float = 0.0) -> float:
        dth = wrap_angle(self.theta - other.theta)
        return math.sqrt((self.x - other.x) ** 2 + (self.y - other.y) ** 2
                         + (angle_weight * dth) ** 2)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.theta)


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Sequence[Sequence[float]]) -> list[tuple[float, float]]:
    """Monotone-chain hull, counter-clockwise, collinear points dropped."""
    pts = sorted({(float(p[0]), float(p[1])) for p in points})
    if len(pts) <= 2:
        return pts
    lower: list[tuple[float, float]] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[float, float]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class ConvexPolygon:
    """Convex polygon with counter-clockwise vertices (meters)."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        verts = [(float(x), float(y)) for x, y in self.vertices]
        dedup: list[tuple[float, float]] = []
        for v in verts:
            if not dedup or math.dist(v, dedup[-1]) > 1e-12:
                dedup.append(v)
        if len(dedup) > 1 and math.dist(dedup[0], dedup[-1]) <= 1e-12:
            dedup.pop()
        if len(dedup) < 3:
            raise GeometryError("polygon needs at least 3 distinct vertices")
        n = len(dedup)
        for i in range(n):
            if _cross(dedup[i], dedup[(i + 1) % n], dedup[(i + 2) % n]) <= 0.0:
                raise GeometryError("vertices must be strictly convex and counter-clockwise")
        object.__setattr__(self, "vertices", tuple(dedup))

    @classmethod
    def from_points(cls, points) -> "ConvexPolygon":
        return cls(tuple(convex_hull(points)))

    @classmethod
    def rectangle(cls, width: float, height: float, center=(0.0, 0.0)) -> "ConvexPolygon":
        hx, hy = width / 2.0, height / 2.0
        cx, cy = center
        return cls(((cx - hx, cy - hy), (cx + hx, cy - hy), (cx + hx, cy + hy), (cx - hx, cy + hy)))

    @classmethod
    def regular(cls, n: int, radius: float, center=(0.0, 0.0), phase: float = 0.0) -> "ConvexPolygon":
        cx, cy = center
        return cls(tuple((cx + radius * math.cos(phase + 2 * math.pi * i / n),
                          cy + radius * math.sin(phase + 2 * math.pi * i / n)) for i in range(n)))

    @cached_property
    def xs(self) -> np.ndarray:
        return np.array([v[0] for v in self.vertices], dtype=np.float64)

    @cached_property
    def ys(self) -> np.ndarray:
        return np.array([v[1] for v in self.vertices], dtype=np.float64)

    @cached_property
    def area(self) -> float:
        a = 0.0
        n = len(self.vertices)
        for i in range(n):
            x0, y0 = self.vertices[i]
            x1, y1 = self.vertices[(i + 1) % n]
            a += x0 * y1 - x1 * y0
        return a / 2.0

    @cached_property
    def centroid(self) -> tuple[float, float]:
        cx = cy = 0.0
        n = len(self.vertices)
        for i in range(n):
            x0, y0 = self.vertices[i]
            x1, y1 = self.vertices[(i + 1) % n]
            w = x0 * y1 - x1 * y0
            cx += (x0 + x1) * w
            cy += (y0 + y1) * w
        return (cx / (6.0 * self.area), cy / (6.0 * self.area))

    def second_moments(self) -> tuple[float, float, float]:
        """Area integrals of x², y², xy about the origin."""
        ixx = iyy = ixy = 0.0
        n = len(self.vertices)
        for i in range(n):
            x0, y0 = self.vertices[i]
            x1, y1 = self.vertices[(i + 1) % n]
            w = x0 * y1 - x1 * y0
            ixx += (x0 * x0 + x0 * x1 + x1 * x1) * w
            iyy += (y0 * y0 + y0 * y1 + y1 * y1) * w
            ixy += (x0 * y1 + 2 * x0 * y0 + 2 * x1 * y1 + x1 * y0) * w
        return ixx / 12.0, iyy / 12.0, ixy / 24.0

    def bounds(self) -> tuple[float, float, float, float]:
        return (min(self.xs), min(self.ys), max(self.xs), max(self.ys))


def transform(poly: ConvexPolygon, pose: Pose2) -> ConvexPolygon:
    return ConvexPolygon(tuple(pose.apply(v) for v in poly.vertices))


class Penetration(NamedTuple):
    depth: float
    direction: tuple[float, float]


def overlap(a: ConvexPolygon, b: ConvexPolygon) -> Penetration | None:
    """Minimum translation that separates ``a`` from ``b``; ``None`` when disjoint.

    Touching polygons count as disjoint.
    """
    sep, nx, ny = kernels.sat_mtv(a.xs, a.ys, b.xs, b.ys)
    if sep >= 0.0:
        return None
    return Penetration(-sep, (nx, ny))


def separation(a: ConvexPolygon, b: ConvexPolygon) -> float:
    """Signed SAT separation: the largest gap over edge normals (negative = depth)."""
    return kernels.sat_mtv(a.xs, a.ys, b.xs, b.ys)[0]


@dataclass(frozen=True)
class Workspace:
    """Axis-aligned rectangle; the boundary counts as inside."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    @classmethod
    def from_size(cls, width: float, height: float) -> "Workspace":
        return cls(0.0, 0.0, float(width), float(height))

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def center(self) -> tuple[float, float]:
        return ((self.xmin + self.xmax) / 2.0, (self.ymin + self.ymax) / 2.0)

    def contains_point(self, p) -> bool:
        return self.xmin <= p[0] <= self.xmax and self.ymin <= p[1] <= self.ymax


@dataclass(frozen=True, eq=False)
class Shape:
    """Union of convex parts in the body frame.

    Compared by identity: two shapes with equal parts are still different
    objects as far as caches are concerned.
    """

    parts: tuple[ConvexPolygon, ...]
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.parts:
            raise GeometryError("shape needs at least one part")
        object.__setattr__(self, "parts", tuple(self.parts))

    @cached_property
    def area(self) -> float:
        return sum(p.area for p in self.parts)

    @cached_property
    def centroid(self) -> tuple[float, float]:
        a = self.area
        return (sum(p.area * p.centroid[0] for p in self.parts) / a,
                sum(p.area * p.centroid[1] for p in self.parts) / a)

    @cached_property
    def central_moments(self) -> tuple[float, float, float]:
        """Second moments (xx, yy, xy) about the centroid."""
        ixx = iyy = ixy = 0.0
        for p in self.parts:
            a, b, c = p.second_moments()
            ixx += a
            iyy += b
            ixy += c
        cx, cy = self.centroid
        area = self.area
        return ixx - area * cx * cx, iyy - area * cy * cy, ixy - area * cx * cy

    @cached_property
    def gyration_sq(self) -> float:
        cxx, cyy, _ = self.central_moments
        return (cxx + cyy) / self.area

    @cached_property
    def max_radius(self) -> float:
        cx, cy = self.centroid
        return max(math.hypot(x - cx, y - cy) for p in self.parts for x, y in p.vertices)

    @cached_property
    def feature_angle(self) -> float:
        """Orientation of the principal (major) axis in the body frame."""
        cxx, cyy, cxy = self.central_moments
        return 0.5 * math.atan2(2.0 * cxy, cxx - cyy)

    @cached_property
    def outline(self) -> tuple[tuple[float, float], ...]:
        """Counter-clockwise outer boundary of the union of parts."""
        if len(self.parts) == 1:
            return self.parts[0].vertices
        merged = unary_union([_ShapelyPolygon(p.vertices) for p in self.parts])
        if merged.geom_type != "Polygon":
            merged = merged.convex_hull
        ring = orient(_ShapelyPolygon(merged.exterior.coords), sign=1.0).exterior.coords
        pts = [(float(x), float(y)) for x, y in list(ring)[:-1]]
        out: list[tuple[float, float]] = []
        n = len(pts)
        for i in range(n):
            if abs(_cross(pts[i - 1], pts[i], pts[(i + 1) % n])) > 1e-15:
                out.append(pts[i])
        return tuple(out)

    @cached_property
    def min_area_box(self) -> tuple[float, float, float, tuple[float, float]]:
        """Minimum-area enclosing rectangle: (angle, width, height, body-frame center)."""
        hull = convex_hull([v for p in self.parts for v in p.vertices])
        best = None
        n = len(hull)
        for i in range(n):
            x0, y0 = hull[i]
            x1, y1 = hull[(i + 1) % n]
            ang = math.atan2(y1 - y0, x1 - x0)
            c, s = math.cos(ang), math.sin(ang)
            us = [c * x + s * y for x, y in hull]
            vs = [-s * x + c * y for x, y in hull]
            w, h = max(us) - min(us), max(vs) - min(vs)
            if best is None or w * h < best[1] * best[2] - 1e-15:
                uc, vc = (max(us) + min(us)) / 2.0, (max(vs) + min(vs)) / 2.0
                best = (ang, w, h, (c * uc - s * vc, s * uc + c * vc))
        return best

    def world_parts(self, pose: Pose2) -> list[ConvexPolygon]:
        return [transform(p, pose) for p in self.parts]

    @cached_property
    def packed(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Body-frame vertices of all parts concatenated, with part start offsets."""
        lx = np.concatenate([p.xs for p in self.parts])
        ly = np.concatenate([p.ys for p in self.parts])
        start = np.zeros(len(self.parts) + 1, dtype=np.intc)
        start[1:] = np.cumsum([len(p.vertices) for p in self.parts])
        return lx, ly, start

    def world_arrays(self, pose: Pose2) -> tuple[np.ndarray, np.ndarray]:
        """World vertices as arrays; same arithmetic as ``Pose2.apply`` so values match ``world_parts``."""
        lx, ly, _ = self.packed
        c, s = math.cos(pose.theta), math.sin(pose.theta)
        return c * lx - s * ly + pose.x, s * lx + c * ly + pose.y

    def world_centroid(self, pose: Pose2) -> tuple[float, float]:
        return pose.apply(self.centroid)

    def diameter(self) -> float:
        return 2.0 * self.max_radius

    @classmethod
    def box(cls, width: float, height: float, name: str = "") -> "Shape":
        return cls((ConvexPolygon.rectangle(width, height),), name=name)


def contains(workspace: Workspace, shape: Shape, pose: Pose2) -> bool:
    for part in shape.parts:
        for v in part.vertices:
            if not workspace.contains_point(pose.apply(v)):
                return False
    return True


def contour_points(shape: Shape, pose: Pose2, n: int) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    """``n`` points evenly spaced by arc length along the outline, with inward normals.

    The walk starts at the midpoint of the edge that leaves the lowest (then
    leftmost) outline vertex and proceeds counter-clockwise; each point is
    paired with the unit direction from the point toward the centroid.
    """
    if n < 1:
        raise GeometryError("n must be >= 1")
    ring = [pose.apply(v) for v in shape.outline]
    m = len(ring)
    lengths = [math.dist(ring[i], ring[(i + 1) % m]) for i in range(m)]
    perimeter = sum(lengths)
    if perimeter <= POS_TOL:
        raise GeometryError("degenerate shape: zero perimeter")
    start = 0
    for i in range(1, m):
        dy = ring[i][1] - ring[start][1]
        if dy < -1e-12 or (abs(dy) <= 1e-12 and ring[i][0] < ring[start][0]):
            start = i
    ring = ring[start:] + ring[:start]
    lengths = lengths[start:] + lengths[:start]
    cx, cy = pose.apply(shape.centroid)
    offset = lengths[0] / 2.0
    out = []
    edge = 0
    walked = 0.0
    for k in range(n):
        s = (offset + k * perimeter / n) % perimeter
        while edge < m - 1 and walked + lengths[edge] < s:
            walked += lengths[edge]
            edge += 1
        if s < walked:
            edge, walked = 0, 0.0
            while edge < m - 1 and walked + lengths[edge] < s:
                walked += lengths[edge]
                edge += 1
        t = (s - walked) / lengths[edge] if lengths[edge] > 0 else 0.0
        a, b = ring[edge], ring[(edge + 1) % m]
        px, py = a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])
        dx, dy = cx - px, cy - py
        d = math.hypot(dx, dy)
        if d <= POS_TOL:
            # point at the centroid (thin shape): fall back to the edge's inward normal
            ex, ey = b[0] - a[0], b[1] - a[1]
            d = math.hypot(ex, ey)
            dx, dy = -ey, ex
        out.append(((px, py), (dx / d, dy / d)))
    return out


def polygons_intersection_area(a: Sequence[ConvexPolygon], disc_center, radius: float) -> float:
    """Area of the union of ``a`` inside a disc (used by the clearance prior)."""
    if not a:
        return 0.0
    from shapely.geometry import Point

    disc = Point(disc_center).buffer(radius, 32)
    merged = unary_union([_ShapelyPolygon(p.vertices) for p in a])
    return float(merged.intersection(disc).area)
