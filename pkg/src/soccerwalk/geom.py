"""Planar poses, footprints, convex polygons and cubic segments shared by all planners."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


class DegenerateGeometryError(ValueError):
    """Raised when an input is geometrically degenerate (zero area, collinear hull, ...)."""


class InvalidDurationError(ValueError):
    """Raised when a trajectory segment is requested with a non-positive duration."""


def wrap_angle(a: float) -> float:
    """Wrap an angle to the canonical interval (-pi, pi].

    Values already inside the interval are returned untouched, so canonical
    angles are exact fixed points (round-trips stay bit-identical)."""
    a = float(a)
    if -np.pi < a <= np.pi:
        return a
    return float(np.pi - (np.pi - a) % TWO_PI)


@dataclass(frozen=True)
class Pose2:
    """Rigid planar pose (x, y, theta); theta is always wrapped to (-pi, pi]."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def compose(self, child: "Pose2") -> "Pose2":
        """SE(2) composition self * child (child expressed in this pose's frame)."""
        c, s = np.cos(self.theta), np.sin(self.theta)
        return Pose2(
            self.x + c * child.x - s * child.y,
            self.y + s * child.x + c * child.y,
            self.theta + child.theta,
        )

    def inverse(self) -> "Pose2":
        c, s = np.cos(self.theta), np.sin(self.theta)
        return Pose2(-(c * self.x + s * self.y), -(-s * self.x + c * self.y), -self.theta)

    def transform(self, point) -> np.ndarray:
        """Map a 2D point from this pose's frame to the parent frame."""
        c, s = np.cos(self.theta), np.sin(self.theta)
        p = np.asarray(point, dtype=float)
        return np.array([self.x + c * p[0] - s * p[1], self.y + s * p[0] + c * p[1]])

    @property
    def translation(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def almost_equal(self, other: "Pose2", tol: float = 1e-9) -> bool:
        return (
            abs(self.x - other.x) <= tol
            and abs(self.y - other.y) <= tol
            and abs(wrap_angle(self.theta - other.theta)) <= tol
        )


def compose(parent: Pose2, child: Pose2) -> Pose2:
    return parent.compose(child)


@dataclass(frozen=True)
class Footprint:
    """Rectangular foot contact patch centered on its pose."""

    length: float
    width: float
    pose: Pose2 = field(default_factory=Pose2)

    def __post_init__(self):
        if self.length <= 0.0 or self.width <= 0.0:
            raise DegenerateGeometryError("footprint dimensions must be positive")

    def corners(self) -> np.ndarray:
        """The four corners in world coordinates, counter-clockwise."""
        hl, hw = 0.5 * self.length, 0.5 * self.width
        local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
        return np.stack([self.pose.transform(p) for p in local])

    @property
    def half_diagonal(self) -> float:
        return 0.5 * float(np.hypot(self.length, self.width))


class ConvexPolygon:
    """Convex polygon with counter-clockwise vertices and strictly positive area."""

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
            raise DegenerateGeometryError("polygon needs at least 3 two-dimensional vertices")
        area2 = _signed_area2(v)
        if area2 < 0.0:
            v = v[::-1].copy()
            area2 = -area2
        if area2 <= 1e-14:
            raise DegenerateGeometryError("polygon area must be positive")
        n = v.shape[0]
        for i in range(n):
            e0 = v[(i + 1) % n] - v[i]
            e1 = v[(i + 2) % n] - v[(i + 1) % n]
            if e0[0] * e1[1] - e0[1] * e1[0] <= 0.0:
                raise DegenerateGeometryError("vertices are not strictly convex CCW")
        self.vertices = v

    def __len__(self) -> int:
        return self.vertices.shape[0]

    def area(self) -> float:
        return 0.5 * _signed_area2(self.vertices)

    def centroid(self) -> np.ndarray:
        v = self.vertices
        nxt = np.roll(v, -1, axis=0)
        cross = v[:, 0] * nxt[:, 1] - nxt[:, 0] * v[:, 1]
        a = cross.sum() / 2.0
        cx = ((v[:, 0] + nxt[:, 0]) * cross).sum() / (6.0 * a)
        cy = ((v[:, 1] + nxt[:, 1]) * cross).sum() / (6.0 * a)
        return np.array([cx, cy])

    def contains(self, point, tol: float = 1e-12) -> bool:
        """Direct edge-by-edge point-in-polygon test (used as the half-plane oracle)."""
        p = np.asarray(point, dtype=float)
        v = self.vertices
        n = v.shape[0]
        for i in range(n):
            e = v[(i + 1) % n] - v[i]
            d = p - v[i]
            if e[0] * d[1] - e[1] * d[0] < -tol:
                return False
        return True

    def shrink(self, margin: float) -> "ConvexPolygon":
        """Move every edge inward by `margin` (meters); polygon must stay non-degenerate."""
        if margin == 0.0:
            return self
        normals, offsets = self.halfplanes()
        # Intersect consecutive shrunk edge lines to rebuild the vertex ring.
        n = len(self)
        verts = []
        for i in range(n):
            j = (i + 1) % n
            a = np.array([normals[i], normals[j]])
            b = np.array([offsets[i] - margin, offsets[j] - margin])
            det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
            if abs(det) < 1e-14:
                raise DegenerateGeometryError("parallel edges while shrinking polygon")
            verts.append(np.linalg.solve(a, b))
        return ConvexPolygon(np.array(verts))

    def halfplanes(self):
        """Rows (unit normal, offset) with: p inside  <=>  normal . p <= offset for all rows."""
        v = self.vertices
        n = v.shape[0]
        normals = np.empty((n, 2))
        offsets = np.empty(n)
        for i in range(n):
            e = v[(i + 1) % n] - v[i]
            nrm = np.array([e[1], -e[0]])  # outward for CCW order
            nrm /= np.linalg.norm(nrm)
            normals[i] = nrm
            offsets[i] = nrm @ v[i]
        return normals, offsets


def _signed_area2(v: np.ndarray) -> float:
    nxt = np.roll(v, -1, axis=0)
    return float((v[:, 0] * nxt[:, 1] - nxt[:, 0] * v[:, 1]).sum())


def convex_hull(points) -> ConvexPolygon:
    """Minimal convex polygon containing all input points (monotone chain, CCW output).

    Collinear points are dropped; an all-collinear input raises
    DegenerateGeometryError since downstream half-plane conversion needs area.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DegenerateGeometryError("points must be an (n, 2) array")
    uniq = sorted({(float(p[0]), float(p[1])) for p in pts})
    if len(uniq) < 3:
        raise DegenerateGeometryError("need at least 3 distinct points")

    def half(seq):
        chain = []
        for p in seq:
            while len(chain) >= 2:
                ax, ay = chain[-2]
                bx, by = chain[-1]
                if (bx - ax) * (p[1] - ay) - (by - ay) * (p[0] - ax) <= 0.0:
                    chain.pop()
                else:
                    break
            chain.append(p)
        return chain

    lower = half(uniq)
    upper = half(list(reversed(uniq)))
    ring = lower[:-1] + upper[:-1]
    if len(ring) < 3:
        raise DegenerateGeometryError("input points are collinear")
    return ConvexPolygon(np.array(ring))


def halfplanes(poly: ConvexPolygon):
    return poly.halfplanes()


@dataclass(frozen=True)
class CubicSegment:
    """Single-axis cubic a0 + a1 t + a2 t^2 + a3 t^3 over [0, T]."""

    a0: float
    a1: float
    a2: float
    a3: float
    duration: float

    def value(self, t: float) -> float:
        return self.a0 + t * (self.a1 + t * (self.a2 + t * self.a3))

    def velocity(self, t: float) -> float:
        return self.a1 + t * (2.0 * self.a2 + 3.0 * self.a3 * t)

    def acceleration(self, t: float) -> float:
        return 2.0 * self.a2 + 6.0 * self.a3 * t


def cubic_between(p0: float, v0: float, p1: float, v1: float, duration: float) -> CubicSegment:
    """The unique cubic matching positions/velocities at both ends of [0, duration]."""
    if duration <= 0.0:
        raise InvalidDurationError(f"duration must be positive, got {duration}")
    T = duration
    a2 = (3.0 * (p1 - p0) - (2.0 * v0 + v1) * T) / (T * T)
    a3 = (2.0 * (p0 - p1) + (v0 + v1) * T) / (T * T * T)
    return CubicSegment(p0, v0, a2, a3, T)
