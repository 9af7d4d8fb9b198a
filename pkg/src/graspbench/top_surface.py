"""Top-surface grasp planner: antipodal pair search over the concave hull.

The planner builds the concave hull of the object's top surface, samples
boundary points with inward normals, and scores every feasible pair of
samples by a force/moment balance: how anti-parallel the contact normals
are, and how close the grasp line passes to the hull centroid. The search
is exhaustive over sample pairs, which dense sampling keeps tractable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NoFeasibleGrasp, OutOfBounds
from .geometry import (
    Point2,
    Polygon,
    concave_hull,
    default_alpha,
    polygon_centroid,
    sample_hull_normals,
)
from .gripper import GraspPose, GripperModel, canonical_theta
from .perception import HeightMap

DEFAULT_SAMPLE_SPACING = 0.002  # m along the hull boundary
DEFAULT_FORCE_WEIGHT = 0.5
DEFAULT_MOMENT_WEIGHT = 0.5
# arc window for averaging boundary normals: sensor noise makes raw hull
# edges zigzag at the point-spacing scale, which would hand perfect
# antipodal scores to junk contact pairs
DEFAULT_NORMAL_SMOOTHING = 0.012
# antipodal feasibility: each contact normal must lie within this angle of
# the contact line, else centrally-symmetric shapes admit arbitrarily
# skewed pairs whose normals are anti-parallel but whose closing direction
# cuts across the faces
DEFAULT_AXIS_ALIGNMENT_LIMIT = math.radians(12.0)
# quality differences below this resolution count as ties and fall through
# to the smaller-width preference; sensor noise perturbs symmetric
# candidates by less than this, structural score differences are larger
QUALITY_TIE_RESOLUTION = 2e-3


@dataclass(frozen=True)
class GraspCandidate:
    """A scored contact pair from the hull search."""

    grasp: GraspPose
    contact_a: Point2
    contact_b: Point2
    normal_a: tuple[float, float]
    normal_b: tuple[float, float]
    force_score: float
    moment_score: float


def grasp_quality(
    contact_a: Point2,
    normal_a,
    contact_b: Point2,
    normal_b,
    centroid: Point2,
    region_radius: float,
    force_weight: float = DEFAULT_FORCE_WEIGHT,
    moment_weight: float = DEFAULT_MOMENT_WEIGHT,
) -> float:
    """Force/moment balance score in [-1, 1].

    Force term: -(normal_a . normal_b), 1 for perfectly antipodal contacts.
    Moment term: perpendicular distance from the grasp line to the
    centroid, normalized by region_radius and clamped to [0, 1].
    """
    na = np.asarray(normal_a, dtype=float)
    nb = np.asarray(normal_b, dtype=float)
    force = -float(na @ nb)
    ax, ay = contact_a.x, contact_a.y
    dx, dy = contact_b.x - ax, contact_b.y - ay
    seg = math.hypot(dx, dy)
    moment = abs(dx * (centroid.y - ay) - dy * (centroid.x - ax)) / seg
    moment = min(max(moment / region_radius, 0.0), 1.0)
    return force_weight * force - moment_weight * moment


def grasp_region_offsets(
    width: float,
    theta: float,
    gripper: GripperModel,
    resolution: float,
    finger_shift: Optional[float] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Cell offsets (di, dj) of the gap and finger regions around a grasp cell.

    The gap spans `width` along the grasp axis by finger_width across it;
    the two finger footprints flank the gap along the axis at
    `finger_shift` from the center (default: half of width plus finger
    thickness, i.e. hugging the gap). Offsets come from nearest-cell
    sampling of the rotated rectangles, so the same rule serves the depth
    computation and the mask templates.
    """
    gap = _rect_offsets(width, gripper.finger_width, theta, resolution, 0.0)
    shift = finger_shift if finger_shift is not None else (width + gripper.finger_thickness) / 2.0
    f1 = _rect_offsets(gripper.finger_thickness, gripper.finger_width, theta, resolution, +shift)
    f2 = _rect_offsets(gripper.finger_thickness, gripper.finger_width, theta, resolution, -shift)
    fingers = np.unique(np.concatenate([f1, f2], axis=0), axis=0)
    # regions must be disjoint; boundary cells shared by rounding go to the gap
    gap_keys = {(int(a), int(b)) for a, b in gap}
    keep = np.array([(int(a), int(b)) not in gap_keys for a, b in fingers])
    fingers = fingers[keep] if keep.any() else fingers[:0]
    if len(fingers) == 0:
        fingers = np.array([f1[-1], f2[0]])  # degenerate overlap: keep the outermost cells
    return gap, fingers


def descent_finger_shift(gripper: GripperModel) -> float:
    """Fingers descend pre-opened to max_opening; their columns sit at this shift."""
    return (gripper.max_opening + gripper.finger_thickness) / 2.0


def descent_finger_offsets(theta: float, gripper: GripperModel, resolution: float) -> np.ndarray:
    """Cell offsets of the two pre-opened finger columns for a grasp axis theta."""
    shift = descent_finger_shift(gripper)
    f1 = _rect_offsets(gripper.finger_thickness, gripper.finger_width, theta, resolution, +shift)
    f2 = _rect_offsets(gripper.finger_thickness, gripper.finger_width, theta, resolution, -shift)
    return np.unique(np.concatenate([f1, f2], axis=0), axis=0)


def _axis_samples(extent: float, resolution: float) -> np.ndarray:
    if extent <= resolution:
        return np.array([0.0])
    k = int(math.ceil(extent / resolution)) + 1
    return np.linspace(-extent / 2.0, extent / 2.0, k)


def _rect_offsets(along, perp, theta, resolution, shift_along) -> np.ndarray:
    u = _axis_samples(along, resolution) + shift_along
    v = _axis_samples(perp, resolution)
    gu, gv = np.meshgrid(u, v)
    c, s = math.cos(theta), math.sin(theta)
    x = c * gu - s * gv
    y = s * gu + c * gv
    dj = np.round(x / resolution).astype(int).ravel()
    di = np.round(y / resolution).astype(int).ravel()
    return np.unique(np.column_stack([di, dj]), axis=0)


def compute_grasp_depth(
    heightmap: HeightMap,
    x: float,
    y: float,
    theta: float,
    width: float,
    gripper: GripperModel,
) -> float:
    """Fingertip height: engage below the gap's top unless finger clearance binds.

    z = max(gap_top - engagement_depth, finger_top + fingertip_clearance, 0),
    with the finger footprints taken at the pre-opened (max_opening)
    descent positions, matching how the jaws actually come down.
    """
    gap, fingers = grasp_region_offsets(
        width, theta, gripper, heightmap.resolution, finger_shift=descent_finger_shift(gripper)
    )
    ci, cj = heightmap.world_to_cell(x, y)
    h, w = heightmap.shape
    all_off = np.concatenate([gap, fingers], axis=0)
    ii = all_off[:, 0] + ci
    jj = all_off[:, 1] + cj
    if ii.min() < 0 or jj.min() < 0 or ii.max() >= h or jj.max() >= w:
        raise OutOfBounds(
            f"grasp footprint at ({x:.3f}, {y:.3f}) theta={theta:.3f} leaves the heightmap"
        )
    gap_top = float(heightmap.data[gap[:, 0] + ci, gap[:, 1] + cj].max())
    finger_top = float(heightmap.data[fingers[:, 0] + ci, fingers[:, 1] + cj].max())
    return max(gap_top - gripper.engagement_depth, finger_top + gripper.fingertip_clearance, 0.0)


def _smooth_normals(samples, perimeter: float, window: float) -> np.ndarray:
    """Circular arc-window average of sample normals, renormalized to unit length."""
    n = len(samples)
    nrm = np.array([s.normal for s in samples])
    if window <= 0 or n < 3:
        return nrm
    window = min(window, perimeter / 4)
    arcs = np.array([s.arc_position for s in samples])
    arcs2 = np.concatenate([arcs, arcs + perimeter])
    nrm2 = np.concatenate([nrm, nrm], axis=0)
    csum = np.concatenate([np.zeros((1, 2)), np.cumsum(nrm2, axis=0)])
    lo = np.searchsorted(arcs2, arcs + perimeter - window / 2, side="left")
    hi = np.searchsorted(arcs2, arcs + perimeter + window / 2, side="right")
    sums = csum[hi] - csum[lo]
    norms = np.linalg.norm(sums, axis=1)
    ok = norms > 1e-9
    out = nrm.copy()
    out[ok] = sums[ok] / norms[ok, None]
    return out


def synthesize_top_surface(
    top_surface,
    heights: HeightMap,
    gripper: GripperModel,
    spacing: float = DEFAULT_SAMPLE_SPACING,
    alpha: Optional[float] = None,
    force_weight: float = DEFAULT_FORCE_WEIGHT,
    moment_weight: float = DEFAULT_MOMENT_WEIGHT,
    normal_smoothing: float = DEFAULT_NORMAL_SMOOTHING,
    axis_alignment_limit: float = DEFAULT_AXIS_ALIGNMENT_LIMIT,
    max_candidates: Optional[int] = 50,
) -> list[GraspCandidate]:
    """Rank all feasible hull-sample contact pairs by grasp quality.

    A pair is feasible when its width fits the jaw opening range and both
    inward normals point along the contact line within
    axis_alignment_limit (the antipodal-grasp condition). Candidates are
    ordered by quality descending at QUALITY_TIE_RESOLUTION granularity
    with deterministic tie-breaking (smaller width, then lexicographic
    midpoint x, y, theta). Pairs whose depth footprint leaves the
    heightmap are dropped. At most `max_candidates` results are
    materialized (None for all).

    Raises NoFeasibleGrasp when no pair fits.
    """
    from .geometry import as_point_array

    pts = as_point_array(top_surface)
    hull = concave_hull(pts, alpha if alpha is not None else default_alpha(pts))
    samples = sample_hull_normals(hull, spacing)
    centroid = polygon_centroid(hull)
    arr = hull.array
    region_radius = float(np.linalg.norm(arr - np.array([centroid.x, centroid.y]), axis=1).max())

    p = np.array([[s.point.x, s.point.y] for s in samples])
    nrm = _smooth_normals(samples, hull.perimeter, normal_smoothing)
    n = len(samples)
    iu, ju = np.triu_indices(n, k=1)
    dvec = p[ju] - p[iu]
    widths = np.linalg.norm(dvec, axis=1)
    feasible = (widths >= gripper.min_opening) & (widths <= gripper.max_opening)
    if feasible.any():
        # antipodal condition: inward normals along the contact line
        cos_lim = math.cos(axis_alignment_limit)
        dhat = dvec[feasible] / widths[feasible, None]
        align_a = np.einsum("ij,ij->i", nrm[iu[feasible]], dhat)
        align_b = -np.einsum("ij,ij->i", nrm[ju[feasible]], dhat)
        sub = (align_a >= cos_lim) & (align_b >= cos_lim)
        keep = np.zeros(len(widths), dtype=bool)
        keep[np.nonzero(feasible)[0][sub]] = True
        feasible = keep
    if not feasible.any():
        raise NoFeasibleGrasp("no hull contact pair fits the jaw opening range")
    iu, ju, dvec, widths = iu[feasible], ju[feasible], dvec[feasible], widths[feasible]

    force = -np.einsum("ij,ij->i", nrm[iu], nrm[ju])
    rel = np.array([centroid.x, centroid.y]) - p[iu]
    moment = np.abs(dvec[:, 0] * rel[:, 1] - dvec[:, 1] * rel[:, 0]) / widths
    moment = np.clip(moment / region_radius, 0.0, 1.0)
    quality = force_weight * force - moment_weight * moment

    mid = (p[iu] + p[ju]) / 2.0
    theta = np.mod(np.arctan2(dvec[:, 1], dvec[:, 0]), math.pi)
    # rank on quality bucketed to QUALITY_TIE_RESOLUTION so near-ties between
    # symmetric candidates resolve by width instead of by noise
    qkey = np.round(quality / QUALITY_TIE_RESOLUTION)
    order = np.lexsort((theta, mid[:, 1], mid[:, 0], widths, -qkey))

    out: list[GraspCandidate] = []
    for k in order:
        th = canonical_theta(float(theta[k]))
        try:
            z = compute_grasp_depth(
                heights, float(mid[k, 0]), float(mid[k, 1]), th, float(widths[k]), gripper
            )
        except OutOfBounds:
            continue
        pose = GraspPose(
            x=float(mid[k, 0]),
            y=float(mid[k, 1]),
            z=z,
            theta=th,
            width=float(widths[k]),
            quality=float(quality[k]),
        )
        out.append(
            GraspCandidate(
                grasp=pose,
                contact_a=Point2(float(p[iu[k], 0]), float(p[iu[k], 1])),
                contact_b=Point2(float(p[ju[k], 0]), float(p[ju[k], 1])),
                normal_a=(float(nrm[iu[k], 0]), float(nrm[iu[k], 1])),
                normal_b=(float(nrm[ju[k], 0]), float(nrm[ju[k], 1])),
                force_score=float(force[k]),
                moment_score=float(moment[k]),
            )
        )
        if max_candidates is not None and len(out) >= max_candidates:
            break
    if not out:
        raise NoFeasibleGrasp("every feasible pair's footprint leaves the heightmap")
    return out
