"""2D computational geometry: concave hulls, boundary normal sampling, ray casting.

All coordinates are meters in the table frame (origin at table center,
z=0 on the table plane); angles are radians. Everything here is pure and
operates on immutable values, so results are safe to share across tasks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import DegenerateInput

# Shared geometric tolerances (meters unless noted).
COORD_EPS = 1e-9          # distinct-vertex separation / on-boundary tolerance
RAY_MIN_ADVANCE = 1e-6    # ray intersections closer than this are "at the origin"
AREA_EPS = 1e-12          # m^2, below this a polygon counts as degenerate


@dataclass(frozen=True)
class Point2:
    """A planar position in the table frame."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DegenerateInput(f"non-finite coordinates ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y


PointsLike = Union[np.ndarray, Sequence, Iterable[Point2]]


def as_point_array(points: PointsLike) -> np.ndarray:
    """Normalize any point collection to a float64 (N, 2) array."""
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=float)
    else:
        arr = np.array([(p.x, p.y) if isinstance(p, Point2) else tuple(p) for p in points], dtype=float)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DegenerateInput(f"expected (N, 2) points, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise DegenerateInput("non-finite coordinates in point set")
    return arr


@dataclass(frozen=True)
class Polygon:
    """A simple polygon with counter-clockwise winding.

    The constructor enforces the cheap invariants (vertex count, distinct
    consecutive vertices, CCW winding); full self-intersection checking is
    available via :func:`is_simple` and is run by the test-suite validator
    on everything the hull builder emits.
    """

    vertices: tuple[Point2, ...]

    def __post_init__(self):
        if len(self.vertices) < 3:
            raise DegenerateInput(f"polygon needs >= 3 vertices, got {len(self.vertices)}")
        arr = np.array([(p.x, p.y) for p in self.vertices], dtype=float)
        gaps = np.linalg.norm(np.roll(arr, -1, axis=0) - arr, axis=1)
        if (gaps <= COORD_EPS).any():
            raise DegenerateInput("consecutive vertices coincide")
        if _signed_area(arr) <= 0.0:
            raise DegenerateInput("polygon winding must be counter-clockwise")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Polygon":
        return cls(tuple(Point2(float(x), float(y)) for x, y in arr))

    @cached_property
    def array(self) -> np.ndarray:
        a = np.array([(p.x, p.y) for p in self.vertices], dtype=float)
        a.flags.writeable = False
        return a

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        arr = self.array
        e = np.linalg.norm(np.roll(arr, -1, axis=0) - arr, axis=1)
        e.flags.writeable = False
        return e

    @property
    def perimeter(self) -> float:
        return float(self.edge_lengths.sum())

    @property
    def area(self) -> float:
        return _signed_area(self.array)


@dataclass(frozen=True)
class HullSample:
    """A boundary point with the inward edge normal at that point."""

    point: Point2
    normal: tuple[float, float]
    arc_position: float


def _signed_area(arr: np.ndarray) -> float:
    x, y = arr[:, 0], arr[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return float(0.5 * np.sum(x * yn - xn * y))


def _canonicalize(points: PointsLike) -> np.ndarray:
    """Lexicographic sort + de-duplication so hulls are ordering-independent."""
    arr = as_point_array(points)
    if len(arr) == 0:
        return arr
    order = np.lexsort((arr[:, 1], arr[:, 0]))
    arr = arr[order]
    keep = np.ones(len(arr), dtype=bool)
    keep[1:] = np.linalg.norm(np.diff(arr, axis=0), axis=1) > COORD_EPS
    return arr[keep]


def convex_hull(points: PointsLike) -> np.ndarray:
    """Strict convex hull (monotone chain), CCW, collinear points dropped."""
    pts = _canonicalize(points)
    if len(pts) < 3:
        raise DegenerateInput("convex hull needs >= 3 distinct points")

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[np.ndarray] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[np.ndarray] = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = np.array(lower[:-1] + upper[:-1], dtype=float)
    if len(hull) < 3:
        raise DegenerateInput("points are collinear")
    return hull


def _point_segment_distances(pts: np.ndarray, a: np.ndarray, b: np.ndarray):
    """Distances from many points to segment a-b plus the projection parameter."""
    ab = b - a
    denom = float(ab @ ab)
    t = ((pts - a) @ ab) / denom
    tc = np.clip(t, 0.0, 1.0)
    proj = a + tc[:, None] * ab
    d = np.linalg.norm(pts - proj, axis=1)
    return d, t


def _segments_cross(p: np.ndarray, q: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized proper/touching intersection of segment p-q against edges a[i]-b[i].

    Collinear overlap counts as crossing; a mere shared endpoint does not
    (callers exclude adjacent edges explicitly).
    """
    d = q - p
    e = b - a
    ap = a - p
    bp = b - p
    denom = d[0] * e[:, 1] - d[1] * e[:, 0]
    c1 = d[0] * ap[:, 1] - d[1] * ap[:, 0]
    c2 = d[0] * bp[:, 1] - d[1] * bp[:, 0]
    pa = p - a
    qa = np.asarray([p[0] + d[0], p[1] + d[1]]) - a
    c3 = e[:, 0] * pa[:, 1] - e[:, 1] * pa[:, 0]
    c4 = e[:, 0] * qa[:, 1] - e[:, 1] * qa[:, 0]

    eps = 1e-15
    general = (np.abs(denom) > eps) & (c1 * c2 < -eps) & (c3 * c4 < -eps)

    # Collinear case: all four cross products near zero and 1D spans overlap.
    collinear = (np.abs(c1) <= eps) & (np.abs(c2) <= eps) & (np.abs(c3) <= eps) & (np.abs(c4) <= eps)
    if collinear.any():
        axis = 0 if abs(d[0]) >= abs(d[1]) else 1
        lo_pq, hi_pq = sorted((p[axis], q[axis]))
        lo_e = np.minimum(a[:, axis], b[:, axis])
        hi_e = np.maximum(a[:, axis], b[:, axis])
        overlap = (np.minimum(hi_pq, hi_e) - np.maximum(lo_pq, lo_e)) > COORD_EPS
        general = general | (collinear & overlap)
    return general


def is_simple(poly: Polygon) -> bool:
    """Full O(n^2) self-intersection check used by test validators."""
    arr = poly.array
    n = len(arr)
    a = arr
    b = np.roll(arr, -1, axis=0)
    for i in range(n):
        others = np.array([j for j in range(n) if j not in (i, (i - 1) % n, (i + 1) % n)])
        if len(others) == 0:
            continue
        if _segments_cross(a[i], b[i], a[others], b[others]).any():
            return False
    return True


def point_in_polygon(poly: Polygon, point: Point2, boundary_tol: float = COORD_EPS) -> bool:
    """Even-odd containment test; points within boundary_tol of an edge count as inside."""
    arr = poly.array
    px, py = point.x, point.y
    a = arr
    b = np.roll(arr, -1, axis=0)
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.clip(np.einsum("ij,ij->i", np.array([px, py]) - a, ab) / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    if (np.linalg.norm(proj - np.array([px, py]), axis=1) <= boundary_tol).any():
        return True
    cond = (a[:, 1] > py) != (b[:, 1] > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xs = a[:, 0] + (py - a[:, 1]) * ab[:, 0] / ab[:, 1]
    crossings = np.count_nonzero(cond & (xs > px))
    return bool(crossings % 2 == 1)


def concave_hull(points: PointsLike, alpha: float) -> Polygon:
    """Concave hull by convex-hull edge refinement.

    Starts from the convex hull and repeatedly digs boundary edges longer
    than `alpha` toward the nearest interior point, provided the insertion
    keeps the boundary simple. Digging toward the closest point never
    expels other points (the carved triangle is empty), so the result
    contains the whole input. With alpha larger than every edge the result
    is exactly the convex hull.
    """
    if alpha <= 0:
        raise DegenerateInput(f"alpha must be > 0, got {alpha}")
    pts = _canonicalize(points)
    if len(pts) < 3:
        raise DegenerateInput(f"need >= 3 distinct points, got {len(pts)}")
    hull = convex_hull(pts)

    # Pool of candidate points: everything that is not a hull vertex.
    hull_keys = {(float(x), float(y)) for x, y in hull}
    pool_mask = np.array([(float(x), float(y)) not in hull_keys for x, y in pts])
    pool = pts[pool_mask]

    # Boundary as a linked list over a growing vertex table.
    verts: list[np.ndarray] = [hull[i] for i in range(len(hull))]
    nxt: dict[int, int] = {i: (i + 1) % len(hull) for i in range(len(hull))}
    available = np.ones(len(pool), dtype=bool)
    frozen: set[tuple[int, int]] = set()
    queue: list[tuple[int, int]] = list(nxt.items())

    while queue:
        ia, ib = queue.pop()
        if nxt.get(ia) != ib or (ia, ib) in frozen:
            continue
        a, b = verts[ia], verts[ib]
        if np.linalg.norm(b - a) <= alpha:
            continue
        if not available.any():
            frozen.add((ia, ib))
            continue
        idx_avail = np.nonzero(available)[0]
        d, t = _point_segment_distances(pool[idx_avail], a, b)
        interior = (t > 1e-3) & (t < 1.0 - 1e-3)
        if not interior.any():
            frozen.add((ia, ib))
            continue
        d = np.where(interior, d, np.inf)
        cand_local = int(np.argmin(d))
        cand = idx_avail[cand_local]
        c = pool[cand]

        if not _insertion_keeps_simple(verts, nxt, ia, ib, c):
            frozen.add((ia, ib))
            continue

        ic = len(verts)
        verts.append(c)
        nxt[ia] = ic
        nxt[ic] = ib
        available[cand] = False
        queue.append((ia, ic))
        queue.append((ic, ib))

    ordered = []
    start = 0
    i = start
    while True:
        ordered.append(verts[i])
        i = nxt[i]
        if i == start:
            break
    out = np.array(ordered, dtype=float)
    out = _drop_duplicate_ring_vertices(out)
    if len(out) < 3 or _signed_area(out) <= AREA_EPS:
        raise DegenerateInput("hull collapsed to a degenerate polygon")
    return Polygon.from_array(out)


def _insertion_keeps_simple(verts, nxt, ia: int, ib: int, c: np.ndarray) -> bool:
    """Would replacing edge ia->ib by ia->c->ib keep the boundary simple?"""
    chain = []
    i = ia
    while True:
        j = nxt[i]
        chain.append((i, j))
        i = j
        if i == ia:
            break
    a_pts, b_pts, keys = [], [], []
    for (i, j) in chain:
        a_pts.append(verts[i])
        b_pts.append(verts[j])
        keys.append((i, j))
    a_arr = np.array(a_pts)
    b_arr = np.array(b_pts)
    for new_seg, shared in (((verts[ia], c), ia), ((c, verts[ib]), ib)):
        mask = np.array([k != (ia, ib) and shared not in k for k in keys])
        if not mask.any():
            continue
        if _segments_cross(np.asarray(new_seg[0]), np.asarray(new_seg[1]), a_arr[mask], b_arr[mask]).any():
            return False
    return True


def _drop_duplicate_ring_vertices(arr: np.ndarray) -> np.ndarray:
    keep = np.ones(len(arr), dtype=bool)
    for i in range(len(arr)):
        if np.linalg.norm(arr[i] - arr[(i - 1) % len(arr)]) <= COORD_EPS:
            keep[i] = False
    return arr[keep]


def default_alpha(points: PointsLike, factor: float = 3.0) -> float:
    """Scale-free hull parameter: `factor` x median nearest-neighbor spacing."""
    from scipy.spatial import cKDTree

    pts = _canonicalize(points)
    if len(pts) < 2:
        raise DegenerateInput("need >= 2 points to estimate spacing")
    d, _ = cKDTree(pts).query(pts, k=2)
    return float(factor * np.median(d[:, 1]))


def sample_hull_normals(hull: Polygon, spacing: float) -> list[HullSample]:
    """Sample the boundary at arc intervals <= spacing with inward edge normals.

    Every edge receives ceil(len/spacing) samples placed at sub-segment
    midpoints, so even edges shorter than the spacing are covered.
    """
    if spacing <= 0:
        raise DegenerateInput(f"spacing must be > 0, got {spacing}")
    arr = hull.array
    nxt = np.roll(arr, -1, axis=0)
    out: list[HullSample] = []
    arc_base = 0.0
    for a, b in zip(arr, nxt):
        ab = b - a
        length = float(np.linalg.norm(ab))
        k = max(1, math.ceil(length / spacing))
        direction = ab / length
        inward = (-direction[1], direction[0])
        for i in range(k):
            frac = (i + 0.5) / k
            p = a + frac * ab
            out.append(
                HullSample(
                    point=Point2(float(p[0]), float(p[1])),
                    normal=(float(inward[0]), float(inward[1])),
                    arc_position=arc_base + frac * length,
                )
            )
        arc_base += length
    return out


def ray_cast(hull: Polygon, origin: Point2, direction: tuple[float, float]) -> Optional[Point2]:
    """First boundary crossing strictly beyond the origin, or None.

    The origin is expected on the boundary; intersections with parametric
    distance <= RAY_MIN_ADVANCE are treated as the origin itself. Edges
    parallel to the ray are skipped.
    """
    arr = hull.array
    a = arr
    b = np.roll(arr, -1, axis=0)
    o = np.array([origin.x, origin.y], dtype=float)
    d = np.asarray(direction, dtype=float)
    e = b - a
    denom = d[0] * e[:, 1] - d[1] * e[:, 0]
    ao = a - o
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (ao[:, 0] * e[:, 1] - ao[:, 1] * e[:, 0]) / denom
        s = (ao[:, 0] * d[1] - ao[:, 1] * d[0]) / denom
    ok = (np.abs(denom) > 1e-15) & (t > RAY_MIN_ADVANCE) & (s >= -1e-9) & (s <= 1.0 + 1e-9)
    if not ok.any():
        return None
    tmin = float(t[ok].min())
    hit = o + tmin * d
    return Point2(float(hit[0]), float(hit[1]))


def polygon_centroid(hull: Polygon) -> Point2:
    """Area centroid (shoelace), computed about the vertex mean for stability."""
    arr = hull.array
    ref = arr.mean(axis=0)
    local = arr - ref
    x, y = local[:, 0], local[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * float(cross.sum())
    if abs(area) < AREA_EPS:
        raise DegenerateInput(f"polygon area {area} below {AREA_EPS}")
    cx = float(np.sum((x + xn) * cross) / (6.0 * area))
    cy = float(np.sum((y + yn) * cross) / (6.0 * area))
    return Point2(cx + float(ref[0]), cy + float(ref[1]))
