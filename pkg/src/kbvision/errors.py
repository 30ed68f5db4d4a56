"""Exception hierarchy shared by every module.

The CLI maps the three top-level families to exit codes: knowledge/config
errors -> 2, I/O and format errors -> 3, geometry errors -> 4.
"""
from __future__ import annotations


class KBVisionError(Exception):
    """Base class for all package errors."""


# -- knowledge base ---------------------------------------------------------

class KnowledgeError(KBVisionError):
    """Invalid or inconsistent knowledge base."""


class KBSyntaxError(KnowledgeError):
    def __init__(self, path, line: int, column: int, message: str):
        self.path = str(path)
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f"{self.path}:{line}:{column}: {message}")


class UnknownKeyword(KnowledgeError):
    def __init__(self, node: str, keyword: str):
        self.node = node
        self.keyword = keyword
        super().__init__(f"node {node!r}: unknown attribute keyword {keyword!r}")


class DanglingReference(KnowledgeError):
    def __init__(self, node: str, referenced: str):
        self.node = node
        self.referenced = referenced
        super().__init__(f"node {node!r} references unknown node {referenced!r}")


class CyclicDependency(KnowledgeError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("cyclic dependency: " + " -> ".join(self.cycle))


class OverlappingBits(KnowledgeError):
    def __init__(self, first: str, second: str):
        self.first = first
        self.second = second
        super().__init__(f"chromosome bit ranges overlap: {first} and {second}")


class MissingGene(KnowledgeError):
    def __init__(self, path):
        self.path = path
        super().__init__(f"parameter set has no value for gene {path}")


class ExtraGene(KnowledgeError):
    def __init__(self, path):
        self.path = path
        super().__init__(f"parameter set value {path} does not match any gene")


class ConfigError(KnowledgeError):
    """Malformed GA config, tuning manifest or fitness spec."""


# -- imaging / IO -----------------------------------------------------------

class FormatError(KBVisionError):
    """A file could not be decoded as the expected format."""


class UnknownPhantom(KBVisionError):
    pass


class MissingExternalInput(KBVisionError):
    def __init__(self, tag: str):
        self.tag = tag
        super().__init__(f"no external candidate mask supplied for tag {tag!r}")


class GeometryMismatch(KBVisionError):
    def __init__(self, expected, got):
        self.expected = expected
        self.got = got
        super().__init__(f"geometry mismatch: expected {expected}, got {got}")


class EmptySourceRegion(KBVisionError):
    pass


# -- optimisation -----------------------------------------------------------

class LengthMismatch(KBVisionError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"length mismatch: expected {expected}, got {got}")


class AllMetricsAbsent(KBVisionError):
    pass


class AgentFailure(KBVisionError):
    def __init__(self, agent: str, element: str | None, cause: BaseException):
        self.agent = agent
        self.element = element
        self.cause = cause
        super().__init__(f"agent {agent} failed on {element}: {cause!r}")
