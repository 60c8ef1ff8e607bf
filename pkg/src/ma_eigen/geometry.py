"""Bounded convex domains in one and two dimensions.

Three kinds are supported: an open interval ``(a, b)``, an open disk and
an open strictly convex polygon.  All objects are immutable; queries accept
plain sequences or numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

__all__ = [
    "Ball",
    "Domain",
    "boundary_crossing",
    "contains",
    "distance_to_boundary",
    "domain_from_dict",
    "enclosing_ball",
]

KINDS = ("interval", "disk", "convex_polygon")


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class Domain:
    """Open bounded convex region.

    Use the :meth:`interval`, :meth:`disk` and :meth:`convex_polygon`
    constructors rather than the raw initializer.
    """

    kind: str
    a: float = 0.0
    b: float = 0.0
    center: tuple[float, ...] = ()
    radius: float = 0.0
    vertices: tuple[tuple[float, float], ...] = ()
    # unit outward normals and offsets: the polygon is {y : normal . y < offset}
    _normals: np.ndarray = field(default=None, repr=False, compare=False)
    _offsets: np.ndarray = field(default=None, repr=False, compare=False)

    # -- constructors -----------------------------------------------------

    @classmethod
    def interval(cls, a: float, b: float) -> "Domain":
        a, b = float(a), float(b)
        if not (math.isfinite(a) and math.isfinite(b) and a < b):
            raise ValueError(f"interval needs finite a < b, got ({a}, {b})")
        return cls(kind="interval", a=a, b=b)

    @classmethod
    def disk(cls, center: Sequence[float], radius: float) -> "Domain":
        c = tuple(float(v) for v in center)
        if len(c) != 2:
            raise ValueError("disk center must have two coordinates")
        if not (radius > 0 and math.isfinite(radius)):
            raise ValueError(f"disk radius must be positive, got {radius}")
        return cls(kind="disk", center=c, radius=float(radius))

    @classmethod
    def convex_polygon(cls, vertices: Sequence[Sequence[float]]) -> "Domain":
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
            raise ValueError("polygon needs at least 3 two-dimensional vertices")
        edges = np.roll(verts, -1, axis=0) - verts
        nxt = np.roll(edges, -1, axis=0)
        cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
        if np.all(cross < 0):
            verts = verts[::-1].copy()
            edges = np.roll(verts, -1, axis=0) - verts
        elif not np.all(cross > 0):
            raise ValueError("polygon vertices are not in strictly convex order")
        lengths = np.hypot(edges[:, 0], edges[:, 1])
        normals = np.column_stack([edges[:, 1], -edges[:, 0]]) / lengths[:, None]
        offsets = np.einsum("ij,ij->i", normals, verts)
        normals.setflags(write=False)
        offsets.setflags(write=False)
        return cls(
            kind="convex_polygon",
            vertices=tuple((float(x), float(y)) for x, y in verts),
            _normals=normals,
            _offsets=offsets,
        )

    @classmethod
    def unit_square(cls) -> "Domain":
        return cls.convex_polygon([(0, 0), (1, 0), (1, 1), (0, 1)])

    # -- scalar properties ------------------------------------------------

    @property
    def dim(self) -> int:
        return 1 if self.kind == "interval" else 2

    @property
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "interval":
            return np.array([self.a]), np.array([self.b])
        if self.kind == "disk":
            c = np.array(self.center)
            return c - self.radius, c + self.radius
        v = np.array(self.vertices)
        return v.min(axis=0), v.max(axis=0)

    @property
    def diameter(self) -> float:
        if self.kind == "interval":
            return self.b - self.a
        if self.kind == "disk":
            return 2.0 * self.radius
        v = np.array(self.vertices)
        d = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((d**2).sum(axis=-1)).max())

    @property
    def volume(self) -> float:
        """Lebesgue measure of the domain."""
        if self.kind == "interval":
            return self.b - self.a
        if self.kind == "disk":
            return math.pi * self.radius**2
        v = np.array(self.vertices)
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def perimeter(self) -> float:
        """Boundary measure (the point count 2 for an interval)."""
        if self.kind == "interval":
            return 2.0
        if self.kind == "disk":
            return 2.0 * math.pi * self.radius
        v = np.array(self.vertices)
        e = np.roll(v, -1, axis=0) - v
        return float(np.hypot(e[:, 0], e[:, 1]).sum())

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "interval":
            return {"kind": "interval", "a": self.a, "b": self.b}
        if self.kind == "disk":
            return {"kind": "disk", "center": list(self.center), "radius": self.radius}
        return {"kind": "convex_polygon", "vertices": [list(v) for v in self.vertices]}

    # -- vectorized helpers -----------------------------------------------

    def _slack(self, pts: np.ndarray) -> np.ndarray:
        """Signed distance to the boundary, positive inside. ``pts`` has shape (m, dim)."""
        if self.kind == "interval":
            x = pts[:, 0]
            return np.minimum(x - self.a, self.b - x)
        if self.kind == "disk":
            d = pts - np.array(self.center)
            return self.radius - np.hypot(d[:, 0], d[:, 1])
        return (self._offsets[None, :] - pts @ self._normals.T).min(axis=1)


def _as_points(domain: Domain, x) -> tuple[np.ndarray, bool]:
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 0 or (pts.ndim == 1 and domain.dim > 1)
    if domain.dim == 1:
        pts = pts.reshape(-1, 1)
    else:
        pts = np.atleast_2d(pts)
    return pts, single


def contains(domain: Domain, x) -> bool | np.ndarray:
    """True where ``x`` lies in the open region; accepts one point or an array of points."""
    pts, single = _as_points(domain, x)
    if domain.kind == "disk":
        d = pts - np.array(domain.center)
        inside = (d**2).sum(axis=1) < domain.radius**2
    elif domain.kind == "interval":
        inside = (pts[:, 0] > domain.a) & (pts[:, 0] < domain.b)
    else:
        inside = np.all(pts @ domain._normals.T < domain._offsets[None, :], axis=1)
    return bool(inside[0]) if single else inside


def distance_to_boundary(domain: Domain, x) -> float | np.ndarray:
    """Euclidean distance from interior point(s) to the boundary."""
    pts, single = _as_points(domain, x)
    d = np.maximum(domain._slack(pts), 0.0)
    return float(d[0]) if single else d


def boundary_crossing(domain: Domain, x, e, t_max: float) -> float | None:
    """Smallest ``t`` in ``(0, t_max]`` with ``x + t*e`` on the boundary, else ``None``.

    ``e`` must be a unit vector.  Raises ``ValueError`` when ``x`` lies
    outside the closed domain.
    """
    pts, _ = _as_points(domain, x)
    p = pts[0]
    d = np.atleast_1d(np.asarray(e, dtype=float))
    scale = domain.diameter
    if domain._slack(pts)[0] < -1e-14 * scale:
        raise ValueError(f"point {p.tolist()} lies outside the closed domain")

    if domain.kind == "interval":
        t = (domain.b - p[0]) / d[0] if d[0] > 0 else (domain.a - p[0]) / d[0]
    elif domain.kind == "disk":
        q = p - np.array(domain.center)
        b = float(q @ d)
        gap = domain.radius**2 - float(q @ q)
        root = math.sqrt(max(b * b + gap, 0.0))
        # cancellation-free form of -b + sqrt(b^2 + gap)
        t = gap / (b + root) if b > 0 else root - b
    else:
        rate = domain._normals @ d
        slack = domain._offsets - domain._normals @ p
        ahead = rate > 0
        t = float(np.min(np.maximum(slack[ahead], 0.0) / rate[ahead]))
    if t <= 0 or t > t_max:
        return None
    return float(t)


def enclosing_ball(domain: Domain, margin: float = 0.05) -> Ball:
    """Ball about the natural center containing the closed domain, inflated by ``1 + margin``."""
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    if domain.kind == "interval":
        center = (0.5 * (domain.a + domain.b),)
        r = 0.5 * (domain.b - domain.a)
    elif domain.kind == "disk":
        center, r = domain.center, domain.radius
    else:
        v = np.array(domain.vertices)
        c = v.mean(axis=0)
        center = (float(c[0]), float(c[1]))
        r = float(np.sqrt(((v - c) ** 2).sum(axis=1)).max())
    return Ball(center=tuple(float(v) for v in center), radius=(1.0 + margin) * r)


def domain_from_dict(data: dict[str, Any]) -> Domain:
    """Build a domain from its JSON form, e.g. ``{"kind": "disk", "center": [0, 0], "radius": 1}``."""
    if not isinstance(data, dict):
        raise ValueError("domain must be a JSON object")
    kind = data.get("kind")
    allowed = {
        "interval": {"kind", "a", "b"},
        "disk": {"kind", "center", "radius"},
        "convex_polygon": {"kind", "vertices"},
    }
    if kind not in allowed:
        raise ValueError(f"domain.kind must be one of {KINDS}, got {kind!r}")
    extra = set(data) - allowed[kind]
    if extra:
        raise ValueError(f"unknown domain key(s) for {kind}: {sorted(extra)}")
    missing = allowed[kind] - set(data)
    if missing:
        raise ValueError(f"missing domain key(s) for {kind}: {sorted(missing)}")
    if kind == "interval":
        return Domain.interval(data["a"], data["b"])
    if kind == "disk":
        return Domain.disk(data["center"], data["radius"])
    return Domain.convex_polygon(data["vertices"])
