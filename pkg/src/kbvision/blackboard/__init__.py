"""Blackboard working memory, agents and control loop."""
from .elements import (  # noqa: I001 - must load before agents (reasoners imports it)
    CONTEXT,
    HARD,
    SOFT,
    Blackboard,
    Candidate,
    FeatureExpectation,
    LogEntry,
    SolutionElement,
    Status,
    expectations_for,
    init_blackboard,
    schedule_next,
)
from .agents import (
    Agent,
    ReasoningAgent,
    SchedulingAgent,
    SegmentationAgent,
    default_agents,
)
from .control import run
from .dump import dump, parse_dump, to_dict

__all__ = [
    "CONTEXT", "HARD", "SOFT", "Blackboard", "Candidate", "FeatureExpectation", "LogEntry",
    "SolutionElement", "Status", "expectations_for", "init_blackboard", "schedule_next",
    "Agent", "ReasoningAgent", "SchedulingAgent", "SegmentationAgent", "default_agents",
    "run", "dump", "parse_dump", "to_dict",
]
