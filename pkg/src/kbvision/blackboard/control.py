"""The opportunistic control loop."""
from __future__ import annotations

from typing import Iterable, Mapping

from ..errors import AgentFailure, GeometryMismatch
from ..imaging import ImageVolume
from .agents import (
    Agent,
    ReasoningAgent,
    SchedulingAgent,
    SegmentationAgent,
    default_agents,
    finalize,
)
from .elements import Blackboard, LogEntry, Status

_REQUIRED = (SchedulingAgent, SegmentationAgent, ReasoningAgent)


def _pick(agents: list[Agent], bb: Blackboard) -> tuple[Agent | None, float]:
    best, best_key, best_score = None, None, 0.0
    for order, agent in enumerate(agents):
        score = float(agent.activation(bb))
        if score <= 0.0:
            continue
        key = (-score, agent.priority, order)
        if best_key is None or key < best_key:
            best, best_key, best_score = agent, key, score
    return best, best_score


def run(bb: Blackboard, img: ImageVolume, agents: Iterable[Agent] | None = None,
        external: Mapping | None = None, max_iterations: int | None = None) -> Blackboard:
    """Activate the highest-scoring agent until every score is zero.

    ``external`` maps external-candidate tags to mask files. A failing
    agent is logged and its element marked empty; geometry mismatches are
    input errors and propagate.
    """
    agents = list(default_agents() if agents is None else agents)
    for cls in _REQUIRED:
        if not any(isinstance(a, cls) for a in agents):
            raise ValueError(f"agent list lacks a {cls.__name__}")
    bb.image = img
    bb.external = dict(external or {})
    limit = max_iterations if max_iterations is not None else 10 * (len(bb.elements) + 1) + 100
    iteration = len(bb.activation_log)
    steps = 0
    while True:
        agent, score = _pick(agents, bb)
        if agent is None:
            break
        steps += 1
        if steps > limit:
            raise RuntimeError(f"control loop exceeded {limit} activations")
        iteration += 1
        target = bb.current
        try:
            note = agent.act(bb, iteration)
        except GeometryMismatch:
            raise
        except Exception as exc:  # noqa: BLE001 - recorded, not swallowed
            failure = AgentFailure(agent.name, target, exc)
            note = f"failure: {failure}"
            el = bb.elements.get(target) if target is not None else None
            if el is not None and el.status is Status.PENDING:
                el.status = Status.EMPTY
                el.selected = None
                el.reason = str(failure)
                finalize(bb, el, iteration)
        element = bb.current if target is None else target
        bb.activation_log.append(LogEntry(iteration, agent.name, score, element, note))
    return bb
