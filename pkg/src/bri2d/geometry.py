"""Plane primitives: points, lifted polar coordinates, disks, disk unions and
time-stamped polylines.

Angles are kept *lifted* (real-valued winding, not reduced mod 2*pi)
everywhere; reduction happens only when rendering.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np


class GeometryError(ValueError):
    """Raised on invalid geometric input (degenerate disks, empty paths...)."""


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite coordinates ({self.x}, {self.y})")

    @property
    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def __add__(self, other: "Point2") -> "Point2":
        return Point2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Point2") -> "Point2":
        return Point2(self.x - other.x, self.y - other.y)

    def scale(self, c: float) -> "Point2":
        return Point2(c * self.x, c * self.y)

    def dist(self, other: "Point2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    @classmethod
    def of(cls, p) -> "Point2":
        """Coerce a Point2, a pair or a complex number."""
        if isinstance(p, Point2):
            return p
        if isinstance(p, complex):
            return cls(p.real, p.imag)
        x, y = p
        return cls(float(x), float(y))


ORIGIN = Point2(0.0, 0.0)


@dataclass(frozen=True)
class PolarPoint:
    r: float
    theta: float

    def __post_init__(self):
        if self.r < 0:
            raise GeometryError(f"negative radius {self.r}")

    def to_cartesian(self) -> Point2:
        return Point2(self.r * math.cos(self.theta), self.r * math.sin(self.theta))


def to_polar(p: Point2, prev_theta: Optional[float] = None) -> PolarPoint:
    """Polar form of ``p``; with ``prev_theta`` the angle is the continuous
    lift in ``(prev_theta - pi, prev_theta + pi]``."""
    r = p.norm
    if r == 0.0:
        if prev_theta is None:
            raise GeometryError("angle undefined at the origin")
        return PolarPoint(0.0, prev_theta)
    theta = math.atan2(p.y, p.x)
    if prev_theta is not None:
        theta = lift_angle(theta, prev_theta)
    return PolarPoint(r, theta)


def lift_angle(theta: float, prev_theta: float) -> float:
    """Shift ``theta`` by a multiple of 2*pi into (prev - pi, prev + pi]."""
    k = math.ceil((prev_theta - theta - math.pi) / (2 * math.pi))
    lifted = theta + 2 * math.pi * k
    # guard the half-open boundary against rounding
    if lifted <= prev_theta - math.pi:
        lifted += 2 * math.pi
    elif lifted > prev_theta + math.pi:
        lifted -= 2 * math.pi
    return lifted


def lifted_angles(xy: np.ndarray, theta0: Optional[float] = None) -> np.ndarray:
    """Continuous lift of the angles along a sampled path.

    ``theta0`` fixes the branch of the first angle (it must agree with the
    first point mod 2*pi up to rounding).
    """
    raw = np.arctan2(xy[:, 1], xy[:, 0])
    out = np.unwrap(raw)
    if theta0 is not None and len(out):
        out += 2 * np.pi * np.round((theta0 - out[0]) / (2 * np.pi))
    return out


@dataclass(frozen=True)
class Disk:
    center: Point2
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError(f"disk radius must be positive, got {self.radius}")

    def contains(self, p: Point2) -> bool:
        return self.center.dist(p) <= self.radius

    @property
    def outer_radius(self) -> float:
        """Radius of the smallest centered disk containing this one."""
        return self.center.norm + self.radius


@dataclass(frozen=True)
class DiskUnion:
    disks: tuple

    def __init__(self, disks: Iterable[Disk]):
        disks = tuple(disks)
        if not disks:
            raise GeometryError("a disk union needs at least one disk")
        object.__setattr__(self, "disks", disks)

    @classmethod
    def single(cls, center, radius: float) -> "DiskUnion":
        return cls([Disk(Point2.of(center), radius)])

    @property
    def centers(self) -> np.ndarray:
        return np.array([[d.center.x, d.center.y] for d in self.disks])

    @property
    def radii(self) -> np.ndarray:
        return np.array([d.radius for d in self.disks])

    @property
    def outer_radius(self) -> float:
        return max(d.outer_radius for d in self.disks)

    def contains(self, p: Point2) -> bool:
        return any(d.contains(p) for d in self.disks)

    def distance(self, p: Point2) -> float:
        """Euclidean distance from ``p`` to the union (0 inside)."""
        return max(0.0, min(d.center.dist(p) - d.radius for d in self.disks))

    def inflate(self, s: float) -> "DiskUnion":
        """The closed s-neighbourhood, again a disk union."""
        return DiskUnion(Disk(d.center, d.radius + s) for d in self.disks)

    def translate(self, v: Point2) -> "DiskUnion":
        return DiskUnion(Disk(d.center + v, d.radius) for d in self.disks)

    def scale(self, c: float) -> "DiskUnion":
        return DiskUnion(Disk(d.center.scale(c), d.radius * c) for d in self.disks)

    def distances(self, xy: np.ndarray) -> np.ndarray:
        """Vectorised signed distance to the union boundary for points
        ``xy`` of shape (n, 2); negative inside."""
        c = self.centers
        r = self.radii
        d = np.hypot(xy[:, None, 0] - c[None, :, 0], xy[:, None, 1] - c[None, :, 1])
        return np.min(d - r[None, :], axis=1)


def contains(A: DiskUnion, p: Point2) -> bool:
    return A.contains(p)


@dataclass(frozen=True)
class Polyline:
    """Time-stamped sampled trajectory: ``t`` strictly increasing, ``xy`` of
    shape (n, 2)."""

    t: np.ndarray
    xy: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        xy = np.asarray(self.xy, dtype=float).reshape(-1, 2)
        if len(t) != len(xy):
            raise GeometryError("time and point arrays differ in length")
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise GeometryError("polyline times must be strictly increasing")
        t.flags.writeable = False
        xy.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "xy", xy)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def norms(self) -> np.ndarray:
        return np.hypot(self.xy[:, 0], self.xy[:, 1])

    def points(self) -> list:
        return [Point2(float(x), float(y)) for x, y in self.xy]

    def scaled(self, c: float) -> "Polyline":
        """Brownian scaling: space by c, time by c**2."""
        return Polyline(self.t * c * c, self.xy * c)


def _segment_distances(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    ap = p[None, :] - a
    denom = np.einsum("ij,ij->i", ab, ab)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(denom > 0, np.einsum("ij,ij->i", ap, ab) / denom, 0.0)
    s = np.clip(s, 0.0, 1.0)
    foot = a + s[:, None] * ab
    return np.hypot(p[0] - foot[:, 0], p[1] - foot[:, 1])


def dist_point_polyline(p: Point2, path: Polyline) -> float:
    """Minimum distance from ``p`` to the segments of ``path``."""
    if len(path) == 0:
        raise GeometryError("empty path")
    q = p.as_array()
    xy = path.xy
    if len(xy) == 1:
        return float(np.hypot(*(xy[0] - q)))
    return float(_segment_distances(q, xy[:-1], xy[1:]).min())


def polyline_min_distance_to_union(path: Polyline, A: DiskUnion) -> float:
    """Minimum over segments of the distance to the disk union (0 if the
    path enters it)."""
    if len(path) == 0:
        raise GeometryError("empty path")
    xy = path.xy
    best = math.inf
    for d in A.disks:
        c = d.center.as_array()
        if len(xy) == 1:
            dc = float(np.hypot(*(xy[0] - c)))
        else:
            dc = float(_segment_distances(c, xy[:-1], xy[1:]).min())
        best = min(best, dc - d.radius)
    return max(best, 0.0)


def as_xy(points: Sequence) -> np.ndarray:
    return np.array([[Point2.of(p).x, Point2.of(p).y] for p in points], dtype=float)
