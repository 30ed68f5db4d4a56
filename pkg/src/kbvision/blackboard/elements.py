"""Working-memory data structures and the knowledge-to-feature mapping."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

from ..errors import KnowledgeError
from ..imaging import ImageRegion, ImageVolume
from ..knowledge import (
    FuzzyMembership,
    GenePath,
    SemanticNetwork,
    SNNode,
    falling,
    substitute,
    trapezoid,
)
from ..knowledge.vocabulary import DIRECTIONAL, FUZZY_FEATURES


class Status(str, Enum):
    PENDING = "pending"
    DONE = "done"
    EMPTY = "empty"


SOFT, HARD, CONTEXT = "soft", "hard", "context"

_OFFSET_FEATURE = {"LeftOf": "offset_left", "RightOf": "offset_right",
                   "Above": "offset_above", "Below": "offset_below"}


@dataclass(frozen=True)
class FeatureExpectation:
    """One prior expectation about a candidate feature.

    ``soft`` expectations are scored with ``membership`` and averaged; a
    positional soft expectation (``eliminating``) also removes candidates
    that fall outside its support. ``hard`` expectations accept the
    feature inside ``bounds`` and eliminate otherwise. ``context`` entries
    only carry prerequisites (search boxes, normalisation sources,
    decision inputs).
    """

    label: str
    keyword: str
    feature: str | None
    kind: str
    prerequisites: tuple[str, ...] = ()
    membership: FuzzyMembership | None = None
    bounds: tuple[float, float] | None = None
    eliminating: bool = False

    @property
    def hard(self) -> bool:
        return self.kind == HARD

    def confidence(self, value: float) -> float:
        if self.kind == SOFT:
            return self.membership(value)
        if self.kind == HARD:
            lo, hi = self.bounds
            return 1.0 if lo <= value <= hi else 0.0
        raise ValueError(f"context expectation {self.label} has no confidence")

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "keyword": self.keyword,
            "feature": self.feature,
            "kind": self.kind,
            "prerequisites": list(self.prerequisites),
            "membership": [list(v) for v in self.membership.vertices] if self.membership else None,
            "bounds": list(self.bounds) if self.bounds else None,
            "eliminating": self.eliminating,
        }


@dataclass
class Candidate:
    region: ImageRegion
    features: dict[str, float] = field(default_factory=dict)
    scores: dict[str, float] = field(default_factory=dict)
    aggregate: float | None = None
    eliminated_by: list[str] = field(default_factory=list)

    @property
    def eliminated(self) -> bool:
        return bool(self.eliminated_by)


@dataclass
class SolutionElement:
    node: SNNode
    expectations: list[FeatureExpectation]
    order: int
    search_area: ImageRegion | None = None
    search_constraints: list[str] = field(default_factory=list)
    candidates: list[Candidate] = field(default_factory=list)
    selected: int | None = None
    status: Status = Status.PENDING
    stage: str = "idle"
    reason: str | None = None
    decision: bool | None = None
    params: dict = field(default_factory=dict)
    scheduled_at: int | None = None
    finalized_at: int | None = None

    @property
    def name(self) -> str:
        return self.node.name

    @property
    def region(self) -> ImageRegion | None:
        """The recognised object, or ``None`` when not (yet) found."""
        if self.status is Status.DONE and self.selected is not None:
            return self.candidates[self.selected].region
        return None

    @property
    def finalized(self) -> bool:
        return self.status is not Status.PENDING

    @property
    def prerequisites(self) -> list[str]:
        out = []
        for e in self.expectations:
            for p in e.prerequisites:
                if p not in out:
                    out.append(p)
        return out

    @property
    def soft_expectations(self) -> list[FeatureExpectation]:
        return [e for e in self.expectations if e.kind == SOFT]


@dataclass
class LogEntry:
    iteration: int
    agent: str
    score: float
    element: str | None
    note: str = ""

    def to_dict(self) -> dict:
        return {"iteration": self.iteration, "agent": self.agent, "score": self.score,
                "element": self.element, "note": self.note}


@dataclass
class Blackboard:
    network: SemanticNetwork
    elements: dict[str, SolutionElement]
    edges: list[tuple[str, str, str]]
    rng_seed: int = 0
    activation_log: list[LogEntry] = field(default_factory=list)
    current: str | None = None
    schedule: list[str] = field(default_factory=list)
    # run inputs; not part of the dump
    image: ImageVolume | None = field(default=None, repr=False)
    external: Mapping = field(default_factory=dict, repr=False)

    def element(self, name: str) -> SolutionElement:
        return self.elements[name]

    def region_of(self, name: str) -> ImageRegion | None:
        return self.elements[name].region

    def pending(self) -> list[SolutionElement]:
        return [e for e in self.elements.values() if e.status is Status.PENDING]


def vertical_axis(two_d: bool) -> int:
    """Index into an (x, y, z) centroid of the cranio-caudal axis."""
    return 1 if two_d else 2


def expectations_for(node: SNNode) -> list[FeatureExpectation]:
    """Transform a node's attributes into feature expectations."""
    out = []
    for a in node.attributes:
        kw, vals, rel = a.keyword, a.values, a.related_nodes
        try:
            if kw == "IntensityRange":
                out.append(FeatureExpectation(f"IntensityRange {vals[0]:g}..{vals[1]:g}", kw,
                                              "mean_intensity", SOFT,
                                              membership=trapezoid(vals[0], vals[1])))
            elif kw in FUZZY_FEATURES:
                out.append(FeatureExpectation(kw, kw, FUZZY_FEATURES[kw], SOFT,
                                              membership=FuzzyMembership.from_flat(vals)))
            elif kw == "PartOf":
                out.append(FeatureExpectation(f"PartOf {rel[0]}", kw, f"overlap:{rel[0]}", HARD,
                                              rel, bounds=(0.5, 1.0)))
            elif kw == "NotPartOf":
                limit = vals[0] if vals else 0.0
                out.append(FeatureExpectation(f"NotPartOf {rel[0]}", kw, f"overlap:{rel[0]}", HARD,
                                              rel, bounds=(0.0, limit)))
            elif kw == "InsideOf":
                limit = vals[0] if vals else 0.5
                out.append(FeatureExpectation(f"InsideOf {rel[0]}", kw, f"overlap:{rel[0]}", HARD,
                                              rel, bounds=(limit, 1.0)))
            elif kw in DIRECTIONAL:
                out.append(FeatureExpectation(f"{kw} {rel[0]}", kw, f"{_OFFSET_FEATURE[kw]}:{rel[0]}",
                                              SOFT, rel, membership=trapezoid(vals[0], vals[1]),
                                              eliminating=True))
            elif kw == "SameLevelAs":
                out.append(FeatureExpectation(f"SameLevelAs {rel[0]}", kw, f"level_diff:{rel[0]}",
                                              SOFT, rel, membership=falling(vals[0]),
                                              eliminating=True))
            elif rel:
                # Box, NormalizationSource, DecisionAnd/Not
                out.append(FeatureExpectation(f"{kw} {' '.join(rel)}", kw, None, CONTEXT, rel))
        except ValueError as e:
            raise KnowledgeError(f"node {node.name!r}, attribute {a.format()!r}: {e}") from None
    return out


def init_blackboard(sn: SemanticNetwork, ps: Mapping[GenePath, float] | None = None,
                    rng_seed: int = 0) -> Blackboard:
    """Knowledge-agent step: one pending Solution Element per node.

    ``ps=None`` keeps the knowledge base defaults; otherwise the parameter
    set must cover exactly the network's genes.
    """
    if ps is not None:
        sn = substitute(sn, ps)
    elements = {}
    for i, node in enumerate(sn):
        elements[node.name] = SolutionElement(node, expectations_for(node), order=i)
    return Blackboard(sn, elements, sn.edges(), rng_seed=rng_seed)


def schedule_next(bb: Blackboard) -> str | None:
    """Pending element with the highest share of computable expectations.

    An expectation is computable once all its prerequisites are finalized
    (done or empty). Elements without expectations count as fully
    computable; ties go to Node List order.
    """
    best, best_ratio = None, -1.0
    for el in bb.elements.values():
        if el.status is not Status.PENDING or el.name == bb.current:
            continue
        total = len(el.expectations)
        if total == 0:
            ratio = 1.0
        else:
            ok = sum(all(bb.elements[p].finalized for p in e.prerequisites) for e in el.expectations)
            ratio = ok / total
        if ratio > best_ratio:
            best, best_ratio = el.name, ratio
    return best
