"""Model domains (interval, rectangle, disk) and their boundary geometry.

All queries are vectorized: points are arrays of shape ``(n, dim)`` (a single
point of shape ``(dim,)`` is also accepted and returns scalars).  Boundary
components carry stable integer ids:

* ``Interval``: 0 -> left endpoint ``a``, 1 -> right endpoint ``b``.
* ``Rectangle``: 0 -> ``x = x0``, 1 -> ``x = x1``, 2 -> ``y = y0``, 3 -> ``y = y1``.
* ``Disk``: 0 -> the circle.

Ties between equally near components (rectangle diagonals, corners, the
disk centre) are broken in favour of the lowest component id.  The disk
centre projects onto ``center + (radius, 0)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np


@dataclass(frozen=True)
class BoundaryPoint:
    position: np.ndarray
    component_id: int
    inward_normal: np.ndarray


class _BoundaryQueries:
    def project(self, p) -> BoundaryPoint:
        pos, comp, normal = self.project_many(p)
        return BoundaryPoint(pos[0], int(comp[0]), normal[0])


def _as_points(p, dim):
    arr = np.asarray(p, dtype=float)
    if dim == 1:
        single = arr.ndim == 0 or arr.shape == (1,)
    else:
        single = arr.ndim <= 1
    arr = arr.reshape(-1, dim)
    return arr, single


@dataclass(frozen=True)
class Interval(_BoundaryQueries):
    a: float = 0.0
    b: float = 1.0

    dim = 1
    n_components = 2

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"interval needs a < b, got [{self.a}, {self.b}]")

    @property
    def diameter(self) -> float:
        return self.b - self.a

    def component_distances(self, p):
        """Distance of each point to the supporting hyperplane of each component, shape (n, 2)."""
        x = np.asarray(p, dtype=float).reshape(-1, 1)[:, 0]
        return np.stack([x - self.a, self.b - x], axis=1)

    def signed_distance(self, p):
        pts, single = _as_points(p, 1)
        x = pts[:, 0]
        d = np.minimum(x - self.a, self.b - x)
        return float(d[0]) if single else d

    def project_many(self, p):
        pts, _ = _as_points(p, 1)
        x = pts[:, 0]
        comp = np.where(x - self.a <= self.b - x, 0, 1)
        pos = np.where(comp == 0, self.a, self.b)[:, None]
        normal = np.where(comp == 0, 1.0, -1.0)[:, None]
        return pos, comp, normal

    def boundary_parameter(self, pos, comp):
        return np.zeros(len(np.atleast_1d(comp)))

    def component_length(self, component_id: int) -> float:
        return 1.0

    def sample_uniform(self, rng, n):
        return self.a + (self.b - self.a) * rng.random((n, 1))

    def contains(self, p, tol=0.0):
        pts, _ = _as_points(p, 1)
        return self.signed_distance(pts) >= -tol


@dataclass(frozen=True)
class Rectangle(_BoundaryQueries):
    x0: float = 0.0
    x1: float = 1.0
    y0: float = 0.0
    y1: float = 1.0

    dim = 2
    n_components = 4

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError("rectangle needs x0 < x1 and y0 < y1")

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.x1 - self.x0, self.y1 - self.y0))

    def component_distances(self, p):
        pts = np.asarray(p, dtype=float).reshape(-1, 2)
        x, y = pts[:, 0], pts[:, 1]
        return np.stack([x - self.x0, self.x1 - x, y - self.y0, self.y1 - y], axis=1)

    def signed_distance(self, p):
        pts, single = _as_points(p, 2)
        x, y = pts[:, 0], pts[:, 1]
        # column-wise minimum; np.min(axis=1) over 4 columns is far slower
        ix = np.minimum(x - self.x0, self.x1 - x)
        iy = np.minimum(y - self.y0, self.y1 - y)
        d = np.minimum(ix, iy)
        outside = d < 0
        if np.any(outside):
            ox = np.maximum(-ix[outside], 0.0)
            oy = np.maximum(-iy[outside], 0.0)
            d[outside] = -np.hypot(ox, oy)
        return float(d[0]) if single else d

    def project_many(self, p):
        pts, _ = _as_points(p, 2)
        cd = self.component_distances(pts)
        inside = np.all(cd >= 0, axis=1)
        # np.argmin returns the first minimum, i.e. the lowest id on ties
        comp_in = np.argmin(cd, axis=1)
        clipped = np.column_stack([
            np.clip(pts[:, 0], self.x0, self.x1),
            np.clip(pts[:, 1], self.y0, self.y1),
        ])
        # outside: the clipped point lies on every edge whose coordinate got clamped
        on_edge = np.stack([
            pts[:, 0] <= self.x0, pts[:, 0] >= self.x1,
            pts[:, 1] <= self.y0, pts[:, 1] >= self.y1,
        ], axis=1)
        comp_out = np.argmax(on_edge, axis=1)
        comp = np.where(inside, comp_in, comp_out)
        pos = clipped.copy()
        if np.any(inside):
            ci = comp[inside]
            pin = pos[inside]
            pin[ci == 0, 0] = self.x0
            pin[ci == 1, 0] = self.x1
            pin[ci == 2, 1] = self.y0
            pin[ci == 3, 1] = self.y1
            pos[inside] = pin
        normals = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        return pos, comp, normals[comp]

    def boundary_parameter(self, pos, comp):
        pos = np.asarray(pos, dtype=float).reshape(-1, 2)
        comp = np.asarray(comp)
        return np.where(comp <= 1, pos[:, 1] - self.y0, pos[:, 0] - self.x0)

    def component_length(self, component_id: int) -> float:
        return (self.y1 - self.y0) if component_id in (0, 1) else (self.x1 - self.x0)

    def sample_uniform(self, rng, n):
        u = rng.random((n, 2))
        return np.column_stack([
            self.x0 + (self.x1 - self.x0) * u[:, 0],
            self.y0 + (self.y1 - self.y0) * u[:, 1],
        ])

    def contains(self, p, tol=0.0):
        return self.signed_distance(np.asarray(p, dtype=float).reshape(-1, 2)) >= -tol


@dataclass(frozen=True)
class Disk(_BoundaryQueries):
    center: tuple = (0.0, 0.0)
    radius: float = 1.0

    dim = 2
    n_components = 1

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("disk radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def _radial(self, pts):
        rel = pts - np.asarray(self.center)
        return rel, np.hypot(rel[:, 0], rel[:, 1])

    def component_distances(self, p):
        pts = np.asarray(p, dtype=float).reshape(-1, 2)
        _, r = self._radial(pts)
        return (self.radius - r)[:, None]

    def signed_distance(self, p):
        pts, single = _as_points(p, 2)
        _, r = self._radial(pts)
        d = self.radius - r
        return float(d[0]) if single else d

    def project_many(self, p):
        pts, _ = _as_points(p, 2)
        rel, r = self._radial(pts)
        at_center = r == 0.0
        safe = np.where(at_center, 1.0, r)
        u = rel / safe[:, None]
        u[at_center] = (1.0, 0.0)
        pos = np.asarray(self.center) + self.radius * u
        # points already on the circle (to rounding) stay put, so projection is exactly idempotent
        on = np.abs(r - self.radius) <= 1e-14 * self.radius
        pos[on] = pts[on]
        return pos, np.zeros(len(pts), dtype=int), 0.0 - u

    def boundary_parameter(self, pos, comp):
        pos = np.asarray(pos, dtype=float).reshape(-1, 2)
        rel = pos - np.asarray(self.center)
        theta = np.mod(np.arctan2(rel[:, 1], rel[:, 0]), 2 * np.pi)
        return self.radius * theta

    def component_length(self, component_id: int) -> float:
        return 2 * np.pi * self.radius

    def sample_uniform(self, rng, n):
        u = rng.random((n, 2))
        r = self.radius * np.sqrt(u[:, 0])
        th = 2 * np.pi * u[:, 1]
        return np.asarray(self.center) + np.column_stack([r * np.cos(th), r * np.sin(th)])

    def contains(self, p, tol=0.0):
        return self.signed_distance(np.asarray(p, dtype=float).reshape(-1, 2)) >= -tol


Domain = Union[Interval, Rectangle, Disk]


def signed_distance(domain: Domain, p):
    """Positive inside, zero on the boundary, negative outside."""
    return domain.signed_distance(p)


def project(domain: Domain, p) -> BoundaryPoint:
    """Nearest boundary point with its component id and inward unit normal."""
    return domain.project(p)


def surface_measure_total(domain: Domain, component_id: int) -> float:
    """Mass of the surface measure on one component.

    Counting measure on endpoints in 1D, arc length in 2D.
    """
    if not 0 <= component_id < domain.n_components:
        raise ValueError(f"unknown component id {component_id} for {type(domain).__name__}")
    return float(domain.component_length(component_id))


def domain_from_config(cfg: dict) -> Domain:
    kind = cfg["type"]
    if kind == "interval":
        return Interval(float(cfg.get("a", 0.0)), float(cfg.get("b", 1.0)))
    if kind == "rectangle":
        return Rectangle(*(float(cfg.get(k, d)) for k, d in
                           (("x0", 0.0), ("x1", 1.0), ("y0", 0.0), ("y1", 1.0))))
    if kind == "disk":
        return Disk(tuple(cfg.get("center", (0.0, 0.0))), float(cfg.get("radius", 1.0)))
    raise ValueError(f"unknown domain type {kind!r}")


def domain_to_config(domain: Domain) -> dict:
    if isinstance(domain, Interval):
        return {"type": "interval", "a": domain.a, "b": domain.b}
    if isinstance(domain, Rectangle):
        return {"type": "rectangle", "x0": domain.x0, "x1": domain.x1,
                "y0": domain.y0, "y1": domain.y1}
    return {"type": "disk", "center": list(domain.center), "radius": domain.radius}
