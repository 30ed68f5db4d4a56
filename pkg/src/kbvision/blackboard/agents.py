"""Built-in agents. Each reports a binary activation score and acts on the
element currently designated by the scheduler."""
from __future__ import annotations

import numpy as np

from .. import reasoners, segmenters
from ..errors import EmptySourceRegion
from ..knowledge import format_number
from .elements import Blackboard, Candidate, SolutionElement, Status, schedule_next

# fixed tie-break priority among built-ins; custom agents rank after these
PRIORITY_SCHEDULING, PRIORITY_SEGMENTATION, PRIORITY_REASONING, PRIORITY_OTHER = 0, 1, 2, 3

_MORPH = {"MorphOpen": "open", "MorphClose": "close", "FillHoles": "fill_holes"}


class Agent:
    name = "agent"
    priority = PRIORITY_OTHER

    def activation(self, bb: Blackboard) -> float:
        return 0.0

    def act(self, bb: Blackboard, iteration: int) -> str:
        raise NotImplementedError


def _current(bb: Blackboard) -> SolutionElement | None:
    return bb.elements[bb.current] if bb.current is not None else None


def has_segmentation(el: SolutionElement) -> bool:
    """Whether the segmentation agent has anything to do for ``el``."""
    src = el.node.source_kind
    if src == "decision":
        return False
    return src is not None or el.node.has("PartOf") or el.node.has("Box")


def finalize(bb: Blackboard, el: SolutionElement, iteration: int) -> None:
    el.stage = "final"
    el.finalized_at = iteration
    if bb.current == el.name:
        bb.current = None


class SchedulingAgent(Agent):
    name = "scheduling"
    priority = PRIORITY_SCHEDULING

    def activation(self, bb):
        return 1.0 if bb.current is None and bb.pending() else 0.0

    def act(self, bb, iteration):
        name = schedule_next(bb)
        el = bb.elements[name]
        el.stage = "scheduled"
        el.scheduled_at = iteration
        bb.current = name
        bb.schedule.append(name)
        return f"scheduled {name}"


def learning_rate(el: SolutionElement) -> float | None:
    a = el.node.first("NeuralNet_LearningRate")
    if a is None:
        return None
    mantissa, exponent = a.values
    return mantissa * 10.0 ** exponent


def external_key(tag: str, lr: float | None, manifest) -> str:
    """Prefer a learning-rate specific entry ``tag@lr=<value>`` when supplied."""
    if lr is not None:
        key = f"{tag}@lr={format_number(lr)}"
        if key in manifest:
            return key
    return tag


class SegmentationAgent(Agent):
    name = "segmentation"
    priority = PRIORITY_SEGMENTATION

    def activation(self, bb):
        el = _current(bb)
        return 1.0 if el is not None and el.stage == "scheduled" and has_segmentation(el) else 0.0

    def act(self, bb, iteration):
        el = _current(bb)
        img = bb.image
        geometry = img.geometry
        el.stage = "segmented"

        area = reasoners.derive_search_area(el, bb, geometry)
        cons = reasoners.search_constraints(el, bb, geometry)
        el.search_area = area
        el.search_constraints = [label for label, _, _ in cons]

        # a missing anchor means the object cannot be localised at all
        for a in el.node.attributes:
            if a.keyword in reasoners.ANCHOR_KEYWORDS:
                ref = bb.elements[a.related_nodes[0]]
                if ref.status is Status.EMPTY:
                    el.reason = f"cannot localise: {a.keyword} reference {ref.name} not found"
                    return el.reason

        clip = None
        for _, kw, m in cons:
            if kw in reasoners.CLIP_KEYWORDS:
                clip = m.copy() if clip is None else clip & m

        src = el.node.source_kind
        if src == "threshold":
            lo, hi = el.node.first("Threshold").values
            if lo > hi:
                raise ValueError(f"Threshold lower bound {lo:g} exceeds upper bound {hi:g}")
            mask = segmenters.threshold_mask(self._preprocessed(el, bb), lo, hi)
        elif src == "external":
            tag = el.node.first("ExternalCandidates").tag
            lr = learning_rate(el)
            if lr is not None:
                el.params["learning_rate"] = lr
            key = external_key(tag, lr, bb.external)
            el.params["external_key"] = key
            mask = segmenters.load_external_mask(key, bb.external, img)
        else:
            mask = np.ones(img.shape, bool) if clip is not None else np.zeros(img.shape, bool)
        if clip is not None:
            mask = mask & clip

        for a in el.node.attributes:
            if a.keyword in _MORPH:
                radius = a.values[0] if a.values else 0.0
                mask = segmenters.morph_mask(mask, _MORPH[a.keyword], radius, img.spacing)

        if el.soft_expectations:
            regions = segmenters.split_components(mask, img.spacing)
        else:
            # nothing to rank components by: keep the segmentation whole
            regions = [segmenters.ImageRegion(mask, img.spacing)] if mask.any() else []
        el.candidates = [Candidate(r) for r in regions]
        if not regions:
            el.reason = "segmentation produced no candidate regions"
        return f"{len(regions)} candidates"

    @staticmethod
    def _preprocessed(el: SolutionElement, bb: Blackboard):
        steps = []
        for a in el.node.attributes:
            if a.keyword == "Preprocess_MinMaxNorm":
                steps.append("min_max_norm")
            elif a.keyword == "Preprocess_ClipHistEq":
                steps.append(("clip_hist_eq", *a.values))
        if not steps:
            return bb.image
        source = None
        ns = el.node.first("NormalizationSource")
        if ns is not None:
            source = bb.elements[ns.related_nodes[0]].region
            if source is None:
                raise EmptySourceRegion(f"normalisation source {ns.related_nodes[0]} not found")
        return segmenters.preprocess(bb.image, steps, source)


class ReasoningAgent(Agent):
    name = "reasoning"
    priority = PRIORITY_REASONING

    def activation(self, bb):
        el = _current(bb)
        if el is None:
            return 0.0
        ready = el.stage == "segmented" or (el.stage == "scheduled" and not has_segmentation(el))
        return 1.0 if ready else 0.0

    def act(self, bb, iteration):
        el = _current(bb)
        if el.node.source_kind == "decision":
            reasoners.evaluate_decision(el, bb)
            note = f"decision {'true' if el.decision else 'false'}"
        else:
            if el.stage == "scheduled":
                el.reason = "no candidate source"
            reasoners.score_candidates(el, bb)
            reasoners.select_candidate(el)
            eliminated = sum(c.eliminated for c in el.candidates)
            note = f"{el.status.value}; {eliminated}/{len(el.candidates)} eliminated"
        finalize(bb, el, iteration)
        return note


def default_agents() -> list[Agent]:
    return [SchedulingAgent(), SegmentationAgent(), ReasoningAgent()]
