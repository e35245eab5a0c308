"""Drum polygons, structured triangle meshes, and inscribed circles.

The two drum domains are unions of seven congruent right isosceles
triangles glued edge to edge.  Their vertex coordinates are shipped as
JSON data files (``data/drum1.json``, ``data/drum2.json``) and validated
by the area and isospectrality checks in the test suite.  Meshes are
produced by recursive 4-way refinement of the base triangulation, which
preserves the geometry exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

DRUM_IDS = ("drum1", "drum2")

# Boundary coincidence tolerance for point classification.
BOUNDARY_TOL = 1e-12


class GeometryError(ValueError):
    """Invalid polygon or mesh input."""


@dataclass(frozen=True)
class Polygon:
    """Simple polygon with counter-clockwise boundary.

    ``base_vertices``/``base_triangles`` optionally carry a coarse
    triangulation used as the refinement substrate; ``base_vertices``
    contains the boundary ring first and may append interior points.
    """

    vertices: np.ndarray
    id: str = "polygon"
    base_vertices: np.ndarray | None = None
    base_triangles: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise GeometryError("polygon needs at least 3 planar vertices")
        object.__setattr__(self, "vertices", v)
        if self.base_vertices is not None:
            object.__setattr__(self, "base_vertices", np.asarray(self.base_vertices, dtype=float))
        if self.base_triangles is not None:
            object.__setattr__(self, "base_triangles", np.asarray(self.base_triangles, dtype=np.int64))
        if self.area <= 0:
            raise GeometryError("polygon must be counter-clockwise with positive area")

    @property
    def area(self) -> float:
        """Shoelace area (positive for CCW orientation)."""
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def segments(self) -> np.ndarray:
        """Boundary segments as an ``(n, 2, 2)`` array."""
        return np.stack([self.vertices, np.roll(self.vertices, -1, axis=0)], axis=1)

    def contains(self, points, tol: float = BOUNDARY_TOL) -> np.ndarray:
        """Classify points: +1 interior, 0 boundary, -1 exterior."""
        return classify_points(self.vertices, np.atleast_2d(np.asarray(points, dtype=float)), tol)

    def distance_to_boundary(self, points) -> np.ndarray:
        """Unsigned distance from each point to the boundary polyline."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return segments_distance(self.segments, pts)

    def scaled(self, s: float) -> "Polygon":
        if s <= 0:
            raise GeometryError("scale factor must be positive")
        return Polygon(
            self.vertices * s,
            id=self.id,
            base_vertices=None if self.base_vertices is None else self.base_vertices * s,
            base_triangles=self.base_triangles,
        )


@dataclass
class TriangleMesh:
    """Conforming triangle mesh with boundary flags.

    Invariants: positively oriented triangles, no hanging nodes, and
    total area equal to the source polygon area to machine precision.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_vertex_flags: np.ndarray
    depth: int
    polygon_id: str = "polygon"

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def triangle_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return 0.5 * np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    def area(self) -> float:
        return float(self.triangle_areas().sum())

    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    def edge_audit(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (interior_edges, boundary_edges); interior edges must be
        shared by exactly two triangles."""
        tri = self.triangles
        edges = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        edges = np.sort(edges, axis=1)
        uniq, counts = np.unique(edges, axis=0, return_counts=True)
        if counts.max(initial=1) > 2:
            raise GeometryError("non-manifold edge shared by more than two triangles")
        return uniq[counts == 2], uniq[counts == 1]

    def to_json(self) -> str:
        return json.dumps(
            {
                "vertices": self.vertices.tolist(),
                "triangles": self.triangles.tolist(),
                "boundary_flags": self.boundary_vertex_flags.astype(int).tolist(),
                "depth": self.depth,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "TriangleMesh":
        d = json.loads(text)
        return cls(
            vertices=np.asarray(d["vertices"], dtype=float),
            triangles=np.asarray(d["triangles"], dtype=np.int64),
            boundary_vertex_flags=np.asarray(d["boundary_flags"], dtype=bool),
            depth=int(d["depth"]),
        )


@dataclass(frozen=True)
class InscribedCircle:
    center: np.ndarray
    radius: float


def load_drum(drum_id: str, leg: float = 1.0) -> Polygon:
    """Load one of the two isospectral drum polygons, scaled to leg length ``leg``.

    Each drum is a simply connected union of 7 congruent right isosceles
    triangles with legs ``leg``; its area is ``3.5 * leg**2``.
    """
    if drum_id not in DRUM_IDS:
        raise GeometryError(f"unknown drum id {drum_id!r}; expected one of {DRUM_IDS}")
    if leg <= 0:
        raise GeometryError("leg length must be positive")
    text = resources.files("graphonlab").joinpath(f"data/{drum_id}.json").read_text()
    return polygon_from_drum_json(text).scaled(leg)


def polygon_from_drum_json(text: str) -> Polygon:
    d = json.loads(text)
    verts = np.asarray(d["vertices"], dtype=float)
    nb = int(d.get("boundary_count", len(verts)))
    return Polygon(
        verts[:nb] * float(d.get("leg", 1.0)),
        id=d["id"],
        base_vertices=verts * float(d.get("leg", 1.0)),
        base_triangles=np.asarray(d["base_triangles"], dtype=np.int64),
    )


def unit_square(n: int = 1) -> Polygon:
    """Unit square with a 2-triangle base triangulation (`n` kept for id only)."""
    v = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    return Polygon(v, id="unit_square", base_vertices=v, base_triangles=np.array([[0, 1, 2], [0, 2, 3]]))


def triangulate(polygon: Polygon, depth: int) -> TriangleMesh:
    """Refine the polygon's base triangulation ``depth`` times, 4-way.

    Every base triangle is split recursively at edge midpoints, so the
    union of mesh triangles tiles the polygon exactly at every depth.
    """
    if depth < 0:
        raise GeometryError("depth must be >= 0")
    if polygon.base_triangles is None:
        raise GeometryError("polygon has no base triangulation")
    verts = np.array(polygon.base_vertices if polygon.base_vertices is not None else polygon.vertices, dtype=float)
    tris = np.array(polygon.base_triangles, dtype=np.int64)
    _check_orientation(verts, tris)
    for _ in range(depth):
        verts, tris = _refine_once(verts, tris)
    flags = _boundary_flags(verts, tris)
    return TriangleMesh(verts, tris, flags, depth, polygon_id=polygon.id)


def _check_orientation(verts: np.ndarray, tris: np.ndarray) -> None:
    p = verts[tris]
    areas = 0.5 * np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    if np.any(areas <= 0):
        raise GeometryError("base triangulation contains a non-positively-oriented triangle")


def _refine_once(verts: np.ndarray, tris: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Midpoint of every unique edge becomes a new vertex; each triangle
    # splits into 4 with orientation preserved.
    edges = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    uniq, inverse = np.unique(edges, axis=0, return_inverse=True)
    mid = 0.5 * (verts[uniq[:, 0]] + verts[uniq[:, 1]])
    new_verts = np.vstack([verts, mid])
    m01, m12, m20 = (inverse.reshape(3, -1) + len(verts))
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    new_tris = np.concatenate(
        [
            np.stack([a, m01, m20], axis=1),
            np.stack([m01, b, m12], axis=1),
            np.stack([m20, m12, c], axis=1),
            np.stack([m01, m12, m20], axis=1),
        ]
    )
    return new_verts, new_tris


def _boundary_flags(verts: np.ndarray, tris: np.ndarray) -> np.ndarray:
    edges = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    flags = np.zeros(len(verts), dtype=bool)
    boundary = uniq[counts == 1]
    flags[boundary.ravel()] = True
    return flags


def classify_points(ring: np.ndarray, points: np.ndarray, tol: float = BOUNDARY_TOL) -> np.ndarray:
    """Winding-number point classification against a closed CCW ring.

    Returns +1 (interior), 0 (on the boundary within ``tol``), -1 (exterior).
    Points within ``tol`` of a boundary segment are classified as boundary,
    never interior.
    """
    a = ring
    b = np.roll(ring, -1, axis=0)
    px = points[:, 0][:, None]
    py = points[:, 1][:, None]
    ax, ay = a[:, 0][None, :], a[:, 1][None, :]
    bx, by = b[:, 0][None, :], b[:, 1][None, :]
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    upward = (ay <= py) & (by > py) & (cross > 0)
    downward = (ay > py) & (by <= py) & (cross < 0)
    winding = upward.sum(axis=1) - downward.sum(axis=1)
    result = np.where(winding != 0, 1, -1).astype(np.int8)
    on_boundary = segments_distance(np.stack([a, b], axis=1), points) <= tol
    result[on_boundary] = 0
    return result


def segments_distance(segments: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Minimum distance from each point to a set of segments ``(m, 2, 2)``."""
    a = segments[:, 0][None, :, :]
    d = (segments[:, 1] - segments[:, 0])[None, :, :]
    ap = points[:, None, :] - a
    denom = np.einsum("ijk,ijk->ij", d, d)
    t = np.clip(np.einsum("ijk,ijk->ij", ap, d) / np.where(denom == 0, 1.0, denom), 0.0, 1.0)
    closest = a + t[:, :, None] * d
    dist = np.linalg.norm(points[:, None, :] - closest, axis=2)
    return dist.min(axis=1)


def inscribed_circle(polygon: Polygon, grid_step: float | None = None) -> InscribedCircle:
    """Largest inscribed circle by dense grid scan plus pattern search.

    The polygon may be non-convex. The returned radius is within about
    1e-4 of the true maximum relative to the polygon scale.
    """
    if polygon.area < 1e-12:
        raise GeometryError("degenerate polygon")
    ring = polygon.vertices
    lo = ring.min(axis=0)
    hi = ring.max(axis=0)
    scale = float(max(hi - lo))
    step = grid_step if grid_step is not None else 1e-3 * scale

    # Coarse pass narrows the field, dense pass only near the leaders.
    coarse = max(step, scale / 160.0)
    best_pt, best_d = _grid_scan(polygon, lo, hi, coarse)
    if coarse > step:
        span = 2.0 * coarse
        best_pt, best_d = _grid_scan(
            polygon,
            np.maximum(best_pt - span, lo),
            np.minimum(best_pt + span, hi),
            step,
            seed=(best_pt, best_d),
        )
    center, radius = _pattern_search(polygon, best_pt, best_d, step)
    return InscribedCircle(center=center, radius=radius)


def _grid_scan(polygon, lo, hi, step, seed=None, block=262144):
    xs = np.arange(lo[0] + step / 2, hi[0], step)
    ys = np.arange(lo[1] + step / 2, hi[1], step)
    best_pt = None if seed is None else np.array(seed[0], dtype=float)
    best_d = -np.inf if seed is None else float(seed[1])
    segs = polygon.segments
    for y0 in range(0, len(ys), max(1, block // max(len(xs), 1))):
        yy = ys[y0 : y0 + max(1, block // max(len(xs), 1))]
        gx, gy = np.meshgrid(xs, yy)
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        inside = classify_points(polygon.vertices, pts) > 0
        if not inside.any():
            continue
        pts = pts[inside]
        d = segments_distance(segs, pts)
        i = int(np.argmax(d))
        if d[i] > best_d:
            best_d = float(d[i])
            best_pt = pts[i]
    if best_pt is None:
        raise GeometryError("no interior grid point found; polygon too thin for the scan step")
    return best_pt, best_d


def _pattern_search(polygon, start, start_d, step):
    # Compass pattern search on distance-to-boundary, halting near 1e-6 scale.
    center = np.array(start, dtype=float)
    best = float(start_d)
    h = step
    segs = polygon.segments
    dirs = np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [1, -1], [-1, 1], [-1, -1]], dtype=float)
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    floor = max(step * 1e-4, 1e-12)
    while h > floor:
        cand = center[None, :] + h * dirs
        ok = classify_points(polygon.vertices, cand) > 0
        if ok.any():
            d = np.where(ok, segments_distance(segs, cand), -np.inf)
            i = int(np.argmax(d))
            if d[i] > best:
                best = float(d[i])
                center = cand[i]
                continue
        h *= 0.5
    return center, best
