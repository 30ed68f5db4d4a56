"""Reasoning agents' logic: spatial search areas, candidate features,
scoring against expectations, selection, and decision nodes.

Axis convention: +x patient left, +y posterior, +z superior; in 2-D
images "above" means smaller y.
"""
from __future__ import annotations

import numpy as np

from .blackboard.elements import (
    HARD,
    SOFT,
    Blackboard,
    Candidate,
    FeatureExpectation,
    SolutionElement,
    Status,
    vertical_axis,
)
from .imaging import ImageRegion, lexicographic_key, union

CLIP_KEYWORDS = ("Box", "PartOf")
# relations whose reference must exist for the object to be localised at all
ANCHOR_KEYWORDS = ("Box", "PartOf", "InsideOf")


def _resolved_region(bb: Blackboard, name: str) -> ImageRegion | None:
    return bb.elements[name].region


def _positions(geometry, axis: int) -> np.ndarray:
    """Physical coordinate (mm) along x/y/z, broadcastable to (nz, ny, nx)."""
    dims, spacing = geometry
    n = dims[axis]
    shape = [1, 1, 1]
    shape[2 - axis] = n
    return (np.arange(n) * spacing[axis]).reshape(shape)


def _signed_offset(kw: str, cand: tuple, ref: tuple, two_d: bool) -> float:
    """Offset of ``cand`` from ``ref`` in the direction named by ``kw`` (mm)."""
    if kw == "LeftOf":
        return cand[0] - ref[0]
    if kw == "RightOf":
        return ref[0] - cand[0]
    v = vertical_axis(two_d)
    above = ref[v] - cand[v] if two_d else cand[v] - ref[v]
    if kw == "Above":
        return above
    if kw == "Below":
        return -above
    raise ValueError(kw)


def _box_mask(attr_values, ref_c, geometry, two_d: bool) -> np.ndarray:
    dims, _ = geometry
    shape = (dims[2], dims[1], dims[0])
    mask = np.ones(shape, bool)
    axes = (0, 1) if two_d else (0, 1, 2)
    for a in axes:
        lo, hi = ref_c[a] + attr_values[2 * a], ref_c[a] + attr_values[2 * a + 1]
        p = _positions(geometry, a)
        mask &= np.broadcast_to((p >= lo) & (p <= hi), shape)
    return mask


def _slab_mask(kw: str, exp: FeatureExpectation, ref_c, geometry, two_d: bool) -> np.ndarray:
    """Voxels whose own offset lies inside the membership's non-zero support."""
    dims, _ = geometry
    shape = (dims[2], dims[1], dims[0])
    support_lo, support_hi = exp.membership.vertices[0][0], exp.membership.vertices[-1][0]
    if kw in ("LeftOf", "RightOf"):
        p = _positions(geometry, 0)
        off = p - ref_c[0] if kw == "LeftOf" else ref_c[0] - p
    else:
        v = vertical_axis(two_d)
        p = _positions(geometry, v)
        above = ref_c[v] - p if two_d else p - ref_c[v]
        off = above if kw == "Above" else -above
    return np.broadcast_to((off >= support_lo) & (off <= support_hi), shape)


def search_constraints(el: SolutionElement, bb: Blackboard, geometry) -> list[tuple[str, str, np.ndarray]]:
    """``(label, keyword, mask)`` for every spatial attribute with a found reference."""
    dims, _ = geometry
    two_d = dims[2] == 1
    out = []
    exps = {e.label: e for e in el.expectations}
    for a in el.node.attributes:
        kw = a.keyword
        if kw not in ("Box", "PartOf", *("RightOf", "LeftOf", "Above", "Below")):
            continue
        ref = _resolved_region(bb, a.related_nodes[0])
        if ref is None:
            continue
        label = f"{kw} {a.related_nodes[0]}"
        if kw == "PartOf":
            out.append((label, kw, ref.mask))
        elif kw == "Box":
            out.append((label, kw, _box_mask(a.values, ref.centroid_mm, geometry, two_d)))
        else:
            out.append((label, kw, _slab_mask(kw, exps[label], ref.centroid_mm, geometry, two_d)))
    return out


def derive_search_area(el: SolutionElement, bb: Blackboard, geometry) -> ImageRegion | None:
    """Intersection of all spatial constraints with resolved references.

    ``None`` means no spatial constraint applies and the whole image is
    searched.
    """
    cons = search_constraints(el, bb, geometry)
    if not cons:
        return None
    dims, spacing = geometry
    mask = np.ones((dims[2], dims[1], dims[0]), bool)
    for _, _, m in cons:
        mask &= m
    return ImageRegion(mask, spacing)


def compute_features(c: ImageRegion, el: SolutionElement, bb: Blackboard) -> dict[str, float]:
    """Generic shape/intensity features plus one value per relational
    expectation whose reference was found."""
    cx, cy, cz = c.centroid_mm
    feats = {
        "centroid_x_mm": cx,
        "centroid_y_mm": cy,
        "centroid_z_mm": cz,
        "area_cm2": c.area_cm2,
        "volume_cm3": c.volume_cm3,
    }
    if bb.image is not None:
        feats["mean_intensity"] = c.mean_intensity(bb.image)
    for e in el.expectations:
        if not e.feature or not e.prerequisites or e.feature in feats:
            continue
        ref = _resolved_region(bb, e.prerequisites[0])
        if ref is None:
            continue
        if e.keyword in ("PartOf", "NotPartOf", "InsideOf"):
            feats[e.feature] = c.overlap_fraction(ref)
        elif e.keyword == "SameLevelAs":
            v = vertical_axis(c.is_2d)
            feats[e.feature] = abs(c.centroid_mm[v] - ref.centroid_mm[v])
        else:
            feats[e.feature] = _signed_offset(e.keyword, c.centroid_mm, ref.centroid_mm, c.is_2d)
    return feats


def score_candidate(cand: Candidate, el: SolutionElement) -> Candidate:
    """Fill confidences, aggregate and elimination reasons from ``features``."""
    cand.scores, cand.eliminated_by = {}, []
    soft = []
    for e in el.expectations:
        if e.kind not in (SOFT, HARD) or e.feature not in cand.features:
            continue
        conf = e.confidence(cand.features[e.feature])
        cand.scores[e.label] = conf
        if e.kind == SOFT:
            soft.append(conf)
        if conf == 0.0 and (e.kind == HARD or e.eliminating):
            cand.eliminated_by.append(e.label)
    cand.aggregate = sum(soft) / len(soft) if soft else None
    return cand


def score_candidates(el: SolutionElement, bb: Blackboard) -> None:
    for cand in el.candidates:
        cand.features = compute_features(cand.region, el, bb)
        score_candidate(cand, el)


def _largest_key(c: Candidate):
    return (-c.region.count, lexicographic_key(c.region))


class _Desc:
    __slots__ = ("v",)

    def __init__(self, v):
        self.v = v

    def __lt__(self, other):
        return self.v > other.v

    def __eq__(self, other):
        return self.v == other.v


def select_candidate(el: SolutionElement) -> SolutionElement:
    """Drop eliminated candidates, then take the best aggregate.

    Ties (and the case of no scorable soft expectation, where the largest
    candidate wins) are broken by voxel-lexicographic order so the choice
    does not depend on the order candidates were generated in.
    """
    alive = [i for i, c in enumerate(el.candidates) if not c.eliminated]
    if not alive:
        el.selected = None
        el.status = Status.EMPTY
        if not el.candidates:
            el.reason = el.reason or "no candidate regions"
        else:
            names = sorted({n for c in el.candidates for n in c.eliminated_by})
            el.reason = f"all {len(el.candidates)} candidates eliminated ({', '.join(names)})"
        return el
    if any(el.candidates[i].aggregate is not None for i in alive):
        def key(i):
            c = el.candidates[i]
            return (_Desc(c.aggregate), lexicographic_key(c.region))
    else:
        def key(i):
            return _largest_key(el.candidates[i])
    el.selected = min(alive, key=key)
    el.status = Status.DONE
    el.reason = None
    return el


def evaluate_decision(el: SolutionElement, bb: Blackboard) -> SolutionElement:
    """Crisp presence logic over referenced elements."""
    attr = next(a for a in el.node.attributes if a.keyword in ("DecisionAnd", "DecisionNot"))
    refs = [bb.elements[n] for n in attr.related_nodes]
    if attr.keyword == "DecisionAnd":
        missing = [r for r in refs if r.status is not Status.DONE]
        value = not missing
        why = "; ".join(f"{r.name} not found ({r.reason or r.status.value})" for r in missing)
    else:
        value = refs[0].status is not Status.DONE
        why = f"{refs[0].name} was found"
    el.decision = value
    el.candidates = []
    el.selected = None
    if value:
        shape_src = bb.image if bb.image is not None else next(
            (r.region for r in refs if r.region is not None), None)
        if shape_src is not None:
            el.candidates = [Candidate(union([r.region for r in refs if r.region is not None], shape_src))]
            el.selected = 0
        el.status = Status.DONE
        el.reason = None
    else:
        el.status = Status.EMPTY
        el.reason = f"{attr.keyword} false: {why}"
    return el
