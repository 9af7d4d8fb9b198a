"""Mask-based grasp planner: gripper-shaped templates swept densely over the heightmap.

Templates pair a gap region (where the object should stand proud) with two
finger regions (which must be clear enough for the fingers to descend).
Every template is evaluated at every cell; the per-cell score is
mean(gap) - mean(fingers) with a hard finger-descent constraint. Ranking
across cells adds a small centroid-centering term so symmetric objects
resolve to their center rather than to the lexicographic tie-break.

The sweep is exact: cheap necessary conditions (box counts and sliding
maxima) prune cells that cannot possibly be valid, and the survivors are
evaluated with the same arithmetic `mask_score` uses, so the dense search
equals brute-force enumeration bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import ndimage

from .errors import NoFeasibleGrasp
from .gripper import GraspPose, GripperModel, canonical_theta
from .perception import DEFAULT_MIN_HEIGHT, MIN_ELEVATION, HeightMap
from .top_surface import descent_finger_offsets, grasp_region_offsets

DEFAULT_ROTATION_STEP = math.pi / 18  # 10 degrees
DEFAULT_OPENING_COUNT = 5
# score meters per meter of centroid offset: breaks score ties toward the
# object's centroid and outweighs both per-cell sensor noise and the mild
# coverage advantage of off-center oblique template placements
DEFAULT_CENTERING_WEIGHT = 0.2
GAP_PERCENTILE = 95.0
# flush-contact rule: where the jaws would touch (the ends of the engaged
# region along the closing axis), the material must span at least this
# fraction of its mid-gap width, else the jaws meet a corner instead of a
# face (the signature of an oblique crossing)
FLUSH_FRACTION = 0.7
FLUSH_ZONE_CELLS = 1.5


@dataclass(frozen=True)
class MaskTemplate:
    """One sampled jaw configuration: opening plus in-plane rotation."""

    opening: float
    rotation: float  # grasp axis direction, [0, pi)
    gripper: GripperModel

    @property
    def gap_rect(self) -> tuple[float, float]:
        """(extent along grasp axis, extent across it)."""
        return (self.opening, self.gripper.finger_width)

    @property
    def finger_rects(self) -> tuple[tuple[float, float, float], ...]:
        """Two (along, across, shift-along-axis) rectangles flanking the gap."""
        shift = (self.opening + self.gripper.finger_thickness) / 2.0
        ft, fw = self.gripper.finger_thickness, self.gripper.finger_width
        return ((ft, fw, +shift), (ft, fw, -shift))


def generate_masks(
    gripper: GripperModel,
    rotation_step: float = DEFAULT_ROTATION_STEP,
    opening_count: int = DEFAULT_OPENING_COUNT,
) -> list[MaskTemplate]:
    """All rotation x opening combinations covering [0, pi) and the opening range."""
    if rotation_step <= 0:
        raise ValueError("rotation_step must be > 0")
    if opening_count < 1:
        raise ValueError("opening_count must be >= 1")
    rotations = np.arange(0.0, math.pi - 1e-12, rotation_step)
    if opening_count == 1:
        openings = np.array([gripper.max_opening])
    else:
        openings = np.linspace(gripper.min_opening, gripper.max_opening, opening_count)
    return [
        MaskTemplate(opening=float(o), rotation=float(r), gripper=gripper)
        for r in rotations
        for o in openings
    ]


@lru_cache(maxsize=4096)
def _template_raster(
    opening: float, rotation: float, gripper: GripperModel, resolution: float
):
    gap, fingers = grasp_region_offsets(opening, rotation, gripper, resolution)
    c, s = math.cos(rotation), math.sin(rotation)
    # per-cell coordinates along (u) and across (v) the closing axis, for
    # the engaged-extent and flush-contact rules
    gap_u = (gap[:, 1] * c + gap[:, 0] * s) * resolution
    gap_v = (-gap[:, 1] * s + gap[:, 0] * c) * resolution
    # the pre-opened finger columns also belong to the footprint: a valid
    # placement needs them on the map for the descent and depth rules
    descent = descent_finger_offsets(rotation, gripper, resolution)
    # one in-region probe cell per finger, nearest its analytic center:
    # a guaranteed lower bound on the finger maximum for cheap pruning
    shift = (opening + gripper.finger_thickness) / 2.0
    probes = []
    for sign in (+1.0, -1.0):
        target = np.array([sign * shift * s / resolution, sign * shift * c / resolution])
        k = int(np.argmin(((fingers - target) ** 2).sum(axis=1)))
        probes.append(fingers[k])
    return gap, fingers, np.array(probes), gap_u, gap_v, descent


def _gather_rows(data_flat: np.ndarray, width: int, ci, cj, offsets: np.ndarray) -> np.ndarray:
    idx = (ci[:, None] + offsets[None, :, 0]) * width + (cj[:, None] + offsets[None, :, 1])
    return data_flat[idx]


def _evaluate_rows(G, F, gap_u, gap_v, resolution: float, gripper: GripperModel):
    """Score + validity for gathered gap/finger rows; shared by all evaluation paths.

    Validity needs three things. The fingers must be able to descend:
    max(F) + clearance within the gap's 95th percentile minus the
    engagement depth. The engaged material (cells within the engagement
    depth of the gap top) must span at least min_opening along the closing
    axis, else the jaws bottom out before touching. And the contact must
    be flush: at both ends of the engaged region the material's width
    across the axis must be at least FLUSH_FRACTION of its mid-gap width,
    else the jaws would meet a corner of an obliquely crossed face.

    Staged for speed: rows whose gap maximum already sits below the finger
    maximum plus the descent margin cannot be valid (p95 <= max), so the
    percentile and the means run only where they can matter. Row results
    are bit-identical regardless of which other rows are present.
    """
    n = len(G)
    gmax = G.max(axis=1)
    fmax = F.max(axis=1)
    margin = gripper.fingertip_clearance + gripper.engagement_depth
    valid = np.zeros(n, dtype=bool)
    score = np.zeros(n)
    maybe = gmax + 1e-12 >= fmax + margin
    if maybe.any():
        rows = np.nonzero(maybe)[0]
        Gm = np.ascontiguousarray(G[rows])
        gp95 = np.percentile(Gm, GAP_PERCENTILE, axis=1)
        ok = fmax[rows] + gripper.fingertip_clearance <= gp95 - gripper.engagement_depth
        if ok.any():
            engaged = Gm[ok] >= (gmax[rows][ok, None] - gripper.engagement_depth)
            u = gap_u[None, :]
            v = gap_v[None, :]
            u_lo = np.where(engaged, u, np.inf).min(axis=1)
            u_hi = np.where(engaged, u, -np.inf).max(axis=1)
            closure = (u_hi - u_lo) + resolution >= gripper.min_opening

            zone = FLUSH_ZONE_CELLS * resolution
            span = []
            for sel in (
                engaged & (u >= u_hi[:, None] - zone),
                engaged & (u <= u_lo[:, None] + zone),
                engaged & (np.abs(u - ((u_hi + u_lo) / 2)[:, None]) <= zone),
            ):
                hi = np.where(sel, v, -np.inf).max(axis=1)
                lo = np.where(sel, v, np.inf).min(axis=1)
                span.append(hi - lo)
            flush = np.minimum(span[0], span[1]) + resolution >= FLUSH_FRACTION * (span[2] + resolution)
            ok[np.nonzero(ok)[0]] = closure & flush
        hits = rows[ok]
        valid[hits] = True
        if len(hits):
            score[hits] = (
                np.ascontiguousarray(G[hits]).mean(axis=1)
                - np.ascontiguousarray(F[hits]).mean(axis=1)
            )
    return score, valid, gmax, fmax


def mask_score(heightmap: HeightMap, template: MaskTemplate, center: tuple[int, int]) -> Optional[float]:
    """Similarity score of one template at one cell, or None when invalid.

    Invalid means the rotated footprint (including the pre-opened descent
    columns) leaves the map, or any of the validity rules fail: the
    finger-descent constraint (max(fingers) + fingertip_clearance within
    the gap's 95th percentile minus the engagement depth), the engaged
    closure extent (at least min_opening of material along the axis), or
    the flush-contact rule; see _evaluate_rows.
    """
    gap, fingers, _, gap_u, gap_v, descent = _template_raster(
        template.opening, template.rotation, template.gripper, heightmap.resolution
    )
    ci, cj = int(center[0]), int(center[1])
    h, w = heightmap.shape
    for off in (gap, fingers, descent):
        ii = off[:, 0] + ci
        jj = off[:, 1] + cj
        if ii.min() < 0 or jj.min() < 0 or ii.max() >= h or jj.max() >= w:
            return None
    flat = np.ascontiguousarray(heightmap.data).ravel()
    G = _gather_rows(flat, w, np.array([ci]), np.array([cj]), gap)
    F = _gather_rows(flat, w, np.array([ci]), np.array([cj]), fingers)
    score, valid, _, _ = _evaluate_rows(G, F, gap_u, gap_v, heightmap.resolution, template.gripper)
    return float(score[0]) if bool(valid[0]) else None


@dataclass
class MaskScoreField:
    """Per-cell best mask response over the sampled template set."""

    score: np.ndarray      # (H, W) float, -inf where no valid template
    rotation: np.ndarray   # (H, W) float, best template rotation
    opening: np.ndarray    # (H, W) float, best template opening
    valid: np.ndarray      # (H, W) bool

    def to_uint16(self) -> np.ndarray:
        """Normalize scores to [0, 65535] for the debug PNG export."""
        out = np.zeros(self.score.shape, dtype=np.uint16)
        if self.valid.any():
            vals = self.score[self.valid]
            lo, hi = float(vals.min()), float(vals.max())
            span = (hi - lo) or 1.0
            out[self.valid] = np.round((self.score[self.valid] - lo) / span * 65535).astype(np.uint16)
        return out


def heightmap_centroid(heightmap: HeightMap, min_height: float = DEFAULT_MIN_HEIGHT):
    """Elevation-weighted centroid of cells above min_height, or None."""
    ii, jj = np.nonzero(heightmap.data > min_height)
    if len(ii) == 0:
        return None
    wts = heightmap.data[ii, jj]
    x = heightmap.origin.x + jj * heightmap.resolution
    y = heightmap.origin.y + ii * heightmap.resolution
    total = wts.sum()
    return (float((x * wts).sum() / total), float((y * wts).sum() / total))


def synthesize_mask(
    heightmap: HeightMap,
    gripper: GripperModel,
    rotation_step: float = DEFAULT_ROTATION_STEP,
    opening_count: int = DEFAULT_OPENING_COUNT,
    stride: int = 1,
    min_height: float = DEFAULT_MIN_HEIGHT,
    centering_weight: float = DEFAULT_CENTERING_WEIGHT,
    return_field: bool = False,
):
    """Dense template sweep; returns valid cells as ranked GraspPose list.

    Every template is scored at every stride-th cell. Each cell keeps its
    best template (higher score, then smaller opening, then smaller
    rotation); cells are then ranked by score minus
    centering_weight * distance-to-object-centroid, ties broken by smaller
    width then lexicographic (x, y, theta). Reported quality is the ranking
    score normalized by the map's maximum elevation.

    Raises NoFeasibleGrasp when no (cell, template) pair is valid.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    data = np.ascontiguousarray(heightmap.data)
    h, w = data.shape
    flat = data.ravel()
    templates = generate_masks(gripper, rotation_step, opening_count)

    centroid = heightmap_centroid(heightmap, min_height)
    if centroid is None:
        raise NoFeasibleGrasp(f"no cells above {min_height} m")

    # Shared prefilter ingredients: threshold count integral image.
    t0 = MIN_ELEVATION + gripper.fingertip_clearance + gripper.engagement_depth - 1e-9
    above = (data >= t0).astype(np.int32)
    integral = np.zeros((h + 1, w + 1), dtype=np.int64)
    integral[1:, 1:] = above.cumsum(axis=0).cumsum(axis=1)

    best_score = np.full((h, w), -np.inf)
    best_rot = np.zeros((h, w))
    best_open = np.zeros((h, w))
    best_gmax = np.zeros((h, w))
    any_valid = np.zeros((h, w), dtype=bool)

    for tpl in templates:
        gap, fingers, probes, gap_u, gap_v, descent = _template_raster(tpl.opening, tpl.rotation, gripper, heightmap.resolution)
        all_off = np.concatenate([gap, fingers, descent], axis=0)
        i_lo, i_hi = int(-all_off[:, 0].min()), int(h - 1 - all_off[:, 0].max())
        j_lo, j_hi = int(-all_off[:, 1].min()), int(w - 1 - all_off[:, 1].max())
        if i_lo > i_hi or j_lo > j_hi:
            continue
        ci = np.arange(i_lo, i_hi + 1)
        cj = np.arange(j_lo, j_hi + 1)
        if stride > 1:
            ci = ci[(ci % stride) == 0]
            cj = cj[(cj % stride) == 0]
        if len(ci) == 0 or len(cj) == 0:
            continue

        keep = _prefilter(data, integral, gap, probes, ci, cj, gripper, t0)
        if not keep.any():
            continue
        cand_i, cand_j = np.nonzero(keep)
        cand_ci = ci[cand_i]
        cand_cj = cj[cand_j]

        chunk = max(1, 4_000_000 // (len(gap) + len(fingers)))
        for s in range(0, len(cand_ci), chunk):
            bi = cand_ci[s : s + chunk]
            bj = cand_cj[s : s + chunk]
            G = _gather_rows(flat, w, bi, bj, gap)
            F = _gather_rows(flat, w, bi, bj, fingers)
            score, valid, gmax, fmax = _evaluate_rows(G, F, gap_u, gap_v, heightmap.resolution, gripper)
            if not valid.any():
                continue
            vi, vj = bi[valid], bj[valid]
            vs = score[valid]
            cur = best_score[vi, vj]
            better = (vs > cur) | (
                (vs == cur)
                & (
                    (tpl.opening < best_open[vi, vj])
                    | ((tpl.opening == best_open[vi, vj]) & (tpl.rotation < best_rot[vi, vj]))
                )
            )
            ui, uj = vi[better], vj[better]
            best_score[ui, uj] = vs[better]
            best_rot[ui, uj] = tpl.rotation
            best_open[ui, uj] = tpl.opening
            best_gmax[ui, uj] = gmax[valid][better]
            any_valid[vi, vj] = True

    if not any_valid.any():
        raise NoFeasibleGrasp("no valid template placement on this heightmap")

    field = MaskScoreField(score=best_score, rotation=best_rot, opening=best_open, valid=any_valid)
    poses = _rank_cells(heightmap, field, best_gmax, gripper, centroid, centering_weight)
    if return_field:
        return poses, field
    return poses


def _prefilter(data, integral, gap, probes, ci, cj, gripper: GripperModel, t0: float):
    """Necessary-condition mask over the ci x cj center grid (True = keep)."""
    kG = len(gap)
    m_min = kG - math.ceil(GAP_PERCENTILE / 100.0 * (kG - 1)) if kG > 1 else 1

    a, b = int(gap[:, 0].min()), int(gap[:, 0].max())
    c, d = int(gap[:, 1].min()), int(gap[:, 1].max())
    # count of cells >= t0 inside the gap bounding box, via the integral image
    i0 = ci[:, None] + a
    i1 = ci[:, None] + b + 1
    j0 = cj[None, :] + c
    j1 = cj[None, :] + d + 1
    count = integral[i1, j1] - integral[i0, j1] - integral[i1, j0] + integral[i0, j0]
    keep = count >= m_min
    if not keep.any():
        return keep

    # gap bbox sliding max >= (per-finger probe lower bound) + descent margin
    sh, sw = b - a + 1, d - c + 1
    gmax_box = ndimage.maximum_filter(data, size=(sh, sw), mode="constant", cval=-np.inf)
    # window at index k covers [k - s//2, k + s-1 - s//2]; shift so it covers [ci+a, ci+b]
    gi = ci[:, None] + a + sh // 2
    gj = cj[None, :] + c + sw // 2
    bbox_gmax = gmax_box[gi, gj]
    flb = np.maximum(
        data[ci[:, None] + probes[0, 0], cj[None, :] + probes[0, 1]],
        data[ci[:, None] + probes[1, 0], cj[None, :] + probes[1, 1]],
    )
    keep &= bbox_gmax + 1e-12 >= flb + gripper.fingertip_clearance + gripper.engagement_depth
    return keep


def _descent_finger_max(heightmap, ii, jj, thetas, gripper):
    """Max elevation under the pre-opened finger columns, grouped by rotation.

    Cells whose descent footprint leaves the map get NaN and are dropped.
    """
    data = np.ascontiguousarray(heightmap.data)
    h, w = data.shape
    flat = data.ravel()
    out = np.full(len(ii), np.nan)
    for rot in np.unique(thetas):
        sel = np.nonzero(thetas == rot)[0]
        fingers = descent_finger_offsets(float(rot), gripper, heightmap.resolution)
        fi = ii[sel][:, None] + fingers[None, :, 0]
        fj = jj[sel][:, None] + fingers[None, :, 1]
        ok = (fi.min(axis=1) >= 0) & (fj.min(axis=1) >= 0) & (fi.max(axis=1) < h) & (fj.max(axis=1) < w)
        if ok.any():
            rows = flat[(fi[ok]) * w + fj[ok]]
            out[sel[ok]] = rows.max(axis=1)
    return out


def _rank_cells(heightmap, field, best_gmax, gripper, centroid, centering_weight):
    ii, jj = np.nonzero(field.valid)
    thetas = field.rotation[ii, jj]
    fopen = _descent_finger_max(heightmap, ii, jj, thetas, gripper)
    keep = ~np.isnan(fopen)
    if not keep.any():
        raise NoFeasibleGrasp("every valid cell's descent footprint leaves the heightmap")
    ii, jj, thetas, fopen = ii[keep], jj[keep], thetas[keep], fopen[keep]

    x = heightmap.origin.x + jj * heightmap.resolution
    y = heightmap.origin.y + ii * heightmap.resolution
    dist = np.hypot(x - centroid[0], y - centroid[1])
    rank_score = field.score[ii, jj] - centering_weight * dist
    widths = field.opening[ii, jj]
    order = np.lexsort((thetas, y, x, widths, -rank_score))
    max_elev = float(heightmap.data.max())
    norm = max_elev if max_elev > 0 else 1.0
    z = np.maximum.reduce(
        [
            best_gmax[ii, jj] - gripper.engagement_depth,
            fopen + gripper.fingertip_clearance,
            np.zeros(len(ii)),
        ]
    )
    poses = [
        GraspPose(
            x=float(x[k]),
            y=float(y[k]),
            z=float(z[k]),
            theta=canonical_theta(float(thetas[k])),
            width=float(widths[k]),
            quality=float(rank_score[k] / norm),
        )
        for k in order
    ]
    return poses
