"""Deterministic JSON rendering of a blackboard, for explanation and reports."""
from __future__ import annotations

import json

from ..errors import FormatError
from .elements import Blackboard, SolutionElement

FORMAT = "kbvision-blackboard/1"


def _num(x):
    return None if x is None else float(x)


def _element_dict(el: SolutionElement) -> dict:
    cands = []
    for i, c in enumerate(el.candidates):
        d = c.region.summary()
        d.update({
            "index": i,
            "volume_cm3": float(c.region.volume_cm3),
            "features": {k: float(v) for k, v in c.features.items()},
            "confidences": {k: float(v) for k, v in c.scores.items()},
            "aggregate": _num(c.aggregate),
            "eliminated_by": list(c.eliminated_by),
        })
        cands.append(d)
    return {
        "order": el.order,
        "status": el.status.value,
        "reason": el.reason,
        "decision": el.decision,
        "expectations": [e.to_dict() for e in el.expectations],
        "search_area": el.search_area.summary() if el.search_area is not None else None,
        "search_constraints": list(el.search_constraints),
        "candidates": cands,
        "selected": el.selected,
        "params": {k: (float(v) if isinstance(v, (int, float)) else v) for k, v in el.params.items()},
        "scheduled_at": el.scheduled_at,
        "finalized_at": el.finalized_at,
    }


def to_dict(bb: Blackboard) -> dict:
    return {
        "format": FORMAT,
        "rng_seed": bb.rng_seed,
        "geometry": ({"dims": list(bb.image.dims), "spacing": list(bb.image.spacing)}
                     if bb.image is not None else None),
        "schedule": list(bb.schedule),
        "edges": [list(e) for e in bb.edges],
        "elements": {name: _element_dict(el) for name, el in bb.elements.items()},
        "activation_log": [e.to_dict() for e in bb.activation_log],
    }


def dump(bb: Blackboard | dict) -> str:
    """JSON text with sorted keys; also accepts an already parsed dump."""
    data = bb if isinstance(bb, dict) else to_dict(bb)
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def parse_dump(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"blackboard dump is not JSON ({e})") from None
    if not isinstance(data, dict) or data.get("format") != FORMAT:
        found = data.get("format") if isinstance(data, dict) else None
        raise FormatError(f"not a blackboard dump (format {found!r})")
    return data
