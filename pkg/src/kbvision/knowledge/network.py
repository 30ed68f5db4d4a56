"""Semantic-network data model plus the node-file parser and serializer.

Node file grammar (line oriented, ``#`` starts a comment)::

    name: kidney_left_init
    PartOf kidney_cnn
    LeftOf spine 50 100 {3, 6, 60, 130}

A numeric parameter may be followed by a value-encoding block
``{bit_start, bit_end, lower, upper}`` which exposes it to the optimizer.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from pathlib import Path
from typing import Iterator

from ..errors import (
    CyclicDependency,
    DanglingReference,
    KBSyntaxError,
    KnowledgeError,
    OverlappingBits,
    UnknownKeyword,
)
from .vocabulary import VOCABULARY

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_TOKEN = re.compile(r"\{[^}]*\}?|[^\s{]+")
_NAME_LINE = re.compile(r"\s*name\s*:\s*(\S*)\s*\Z")


@dataclass(frozen=True)
class TunableSpec:
    bit_start: int
    bit_end: int
    lower: float
    upper: float

    def __post_init__(self):
        if self.bit_start < 0 or self.bit_end < self.bit_start:
            raise ValueError(f"invalid bit range {self.bit_start}..{self.bit_end}")
        if not self.lower < self.upper:
            raise ValueError(f"lower bound {self.lower} must be below upper {self.upper}")

    @property
    def n_bits(self) -> int:
        return self.bit_end - self.bit_start + 1

    def format(self) -> str:
        return "{%d, %d, %s, %s}" % (self.bit_start, self.bit_end,
                                     format_number(self.lower), format_number(self.upper))


@dataclass(frozen=True)
class Param:
    default: float
    tunable: TunableSpec | None = None
    text: str | None = field(default=None, compare=False)

    def format(self) -> str:
        s = self.text if self.text is not None else format_number(self.default)
        if self.tunable is not None:
            s += " " + self.tunable.format()
        return s


@dataclass(frozen=True)
class Attribute:
    keyword: str
    params: tuple[Param, ...] = ()
    related_nodes: tuple[str, ...] = ()
    tag: str | None = None

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(p.default for p in self.params)

    def format(self) -> str:
        parts = [self.keyword, *self.related_nodes]
        if self.tag is not None:
            parts.append(self.tag)
        parts.extend(p.format() for p in self.params)
        return " ".join(parts)


@dataclass(frozen=True)
class SNNode:
    name: str
    attributes: tuple[Attribute, ...] = ()
    path: str | None = field(default=None, compare=False)

    def find(self, keyword: str) -> list[Attribute]:
        return [a for a in self.attributes if a.keyword == keyword]

    def first(self, keyword: str) -> Attribute | None:
        return next((a for a in self.attributes if a.keyword == keyword), None)

    def has(self, keyword: str) -> bool:
        return any(a.keyword == keyword for a in self.attributes)

    @property
    def source_kind(self) -> str | None:
        """``threshold``, ``external``, ``decision`` or ``None``."""
        src = self.source
        return VOCABULARY[src.keyword].source if src is not None else None

    @property
    def source(self) -> Attribute | None:
        """The segmentation-source attribute, if any."""
        for a in self.attributes:
            if VOCABULARY[a.keyword].source is not None:
                return a
        return None

    def references(self) -> list[str]:
        seen = []
        for a in self.attributes:
            for r in a.related_nodes:
                if r not in seen:
                    seen.append(r)
        return seen


@dataclass(frozen=True, eq=False)
class SemanticNetwork:
    nodes: dict[str, SNNode]
    source_paths: tuple[str, ...] = ()

    def __eq__(self, other):
        if not isinstance(other, SemanticNetwork):
            return NotImplemented
        return list(self.nodes.items()) == list(other.nodes.items())

    def __len__(self):
        return len(self.nodes)

    def __iter__(self) -> Iterator[SNNode]:
        return iter(self.nodes.values())

    @property
    def names(self) -> list[str]:
        return list(self.nodes)

    def edges(self) -> list[tuple[str, str, str]]:
        """(referenced, referencing, keyword) per relational attribute reference."""
        out = []
        for node in self.nodes.values():
            for a in node.attributes:
                for r in a.related_nodes:
                    out.append((r, node.name, a.keyword))
        return out

    def tunables(self) -> list[tuple[str, int, int, TunableSpec, Param]]:
        out = []
        for node in self.nodes.values():
            for ai, a in enumerate(node.attributes):
                for pi, p in enumerate(a.params):
                    if p.tunable is not None:
                        out.append((node.name, ai, pi, p.tunable, p))
        return out


def format_number(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


# -- parsing -----------------------------------------------------------------

def _parse_number(tok: str, path, lineno: int, col: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise KBSyntaxError(path, lineno, col, f"expected a number, got {tok!r}") from None
    if not math.isfinite(v):
        raise KBSyntaxError(path, lineno, col, f"non-finite number {tok!r}")
    return v


def _parse_tunable(tok: str, path, lineno: int, col: int) -> TunableSpec:
    if not tok.endswith("}"):
        raise KBSyntaxError(path, lineno, col, "unterminated value-encoding block")
    fields = [f.strip() for f in tok[1:-1].split(",")]
    if len(fields) != 4 or not all(fields):
        raise KBSyntaxError(path, lineno, col,
                            "value-encoding block needs {bit_start, bit_end, lower, upper}")
    try:
        b0, b1 = int(fields[0]), int(fields[1])
    except ValueError:
        raise KBSyntaxError(path, lineno, col, "bit positions must be integers") from None
    lo = _parse_number(fields[2], path, lineno, col)
    hi = _parse_number(fields[3], path, lineno, col)
    try:
        return TunableSpec(b0, b1, lo, hi)
    except ValueError as e:
        raise KBSyntaxError(path, lineno, col, str(e)) from None


def _tokenize(line: str) -> list[tuple[str, int]]:
    line = line.split("#", 1)[0]
    return [(m.group(0), m.start() + 1) for m in _TOKEN.finditer(line)]


def _parse_attribute(node: str, tokens, path, lineno: int) -> Attribute:
    keyword, kcol = tokens[0]
    if keyword not in VOCABULARY:
        raise UnknownKeyword(node, keyword)
    entry = VOCABULARY[keyword]
    rest = list(tokens[1:])
    related: list[str] = []
    tag = None
    params: list[Param] = []

    def take_number(required: bool) -> Param | None:
        if not rest:
            if required:
                raise KBSyntaxError(path, lineno, kcol, f"{keyword}: missing numeric parameter")
            return None
        tok, col = rest.pop(0)
        if tok.startswith("{"):
            raise KBSyntaxError(path, lineno, col, "value-encoding block must follow a number")
        value = _parse_number(tok, path, lineno, col)
        tunable = None
        if rest and rest[0][0].startswith("{"):
            btok, bcol = rest.pop(0)
            tunable = _parse_tunable(btok, path, lineno, bcol)
            if not tunable.lower <= value <= tunable.upper:
                raise KBSyntaxError(path, lineno, col,
                                    f"default {tok} outside tunable bounds "
                                    f"[{format_number(tunable.lower)}, {format_number(tunable.upper)}]")
        return Param(value, tunable, tok)

    def take_ident(what: str) -> str:
        if not rest:
            raise KBSyntaxError(path, lineno, kcol, f"{keyword}: missing {what}")
        tok, col = rest.pop(0)
        if not _IDENT.match(tok):
            raise KBSyntaxError(path, lineno, col, f"{keyword}: invalid {what} {tok!r}")
        return tok

    for slot in entry.slots:
        if slot == "node":
            related.append(take_ident("node name"))
        elif slot == "nodes":
            while rest:
                related.append(take_ident("node name"))
            if len(related) < entry.min_nodes:
                raise KBSyntaxError(path, lineno, kcol,
                                    f"{keyword} needs at least {entry.min_nodes} node names")
        elif slot == "tag":
            tag = take_ident("tag")
        elif slot == "num":
            params.append(take_number(True))
        elif slot == "opt_num":
            p = take_number(False)
            if p is not None:
                params.append(p)
        elif slot == "vertices":
            while rest:
                params.append(take_number(True))
            if len(params) < 4 or len(params) % 2:
                raise KBSyntaxError(path, lineno, kcol,
                                    f"{keyword} needs an even list of at least 2 (value, confidence) pairs")
            values = [p.default for p in params]
            if any(not 0.0 <= c <= 1.0 for c in values[1::2]):
                raise KBSyntaxError(path, lineno, kcol, f"{keyword}: confidences must lie in [0, 1]")
            if any(b <= a for a, b in zip(values[0::2], values[2::2])):
                raise KBSyntaxError(path, lineno, kcol, f"{keyword}: vertex values must increase")
        else:  # pragma: no cover - vocabulary table bug
            raise AssertionError(slot)
    if rest:
        tok, col = rest[0]
        raise KBSyntaxError(path, lineno, col, f"{keyword}: unexpected token {tok!r}")
    return Attribute(keyword, tuple(params), tuple(related), tag)


def parse_node_text(text: str, path: str | Path = "<string>") -> SNNode:
    name = None
    attrs: list[Attribute] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = _tokenize(raw)
        if not tokens:
            continue
        if name is None:
            m = _NAME_LINE.match(raw.split("#", 1)[0])
            if not m:
                raise KBSyntaxError(path, lineno, tokens[0][1], "first line must be 'name: <identifier>'")
            name = m.group(1)
            if not _IDENT.match(name):
                raise KBSyntaxError(path, lineno, raw.index(name) + 1 if name else 1,
                                    f"invalid node name {name!r}")
            continue
        attrs.append(_parse_attribute(name, tokens, path, lineno))
    if name is None:
        raise KBSyntaxError(path, 1, 1, "missing 'name:' line")
    node = SNNode(name, tuple(attrs), str(path))
    sources = [a.keyword for a in node.attributes if VOCABULARY[a.keyword].source]
    if len(sources) > 1:
        raise KnowledgeError(f"node {name!r} has more than one segmentation source: {sources}")
    return node


def _resolve_node_file(base: Path, entry: str) -> Path:
    p = base / entry
    if p.is_file():
        return p
    alt = base / (entry + ".txt")
    if alt.is_file():
        return alt
    raise FileNotFoundError(f"node file not found: {p}")


def parse_network(node_list_path: str | Path) -> SemanticNetwork:
    node_list_path = Path(node_list_path)
    text = node_list_path.read_text(encoding="utf-8")
    base = node_list_path.parent
    nodes: dict[str, SNNode] = {}
    paths = [str(node_list_path)]
    for lineno, raw in enumerate(text.splitlines(), start=1):
        entry = raw.split("#", 1)[0].strip()
        if not entry:
            continue
        fp = _resolve_node_file(base, entry)
        node = parse_node_text(fp.read_text(encoding="utf-8"), fp)
        if node.name in nodes:
            raise KBSyntaxError(node_list_path, lineno, 1, f"duplicate node name {node.name!r}")
        nodes[node.name] = node
        paths.append(str(fp))
    sn = SemanticNetwork(nodes, tuple(paths))
    validate_network(sn)
    return sn


def validate_network(sn: SemanticNetwork) -> None:
    for name, node in sn.nodes.items():
        if not name or name != node.name:
            raise KnowledgeError(f"node key {name!r} does not match node name {node.name!r}")
        for ref in node.references():
            if ref not in sn.nodes:
                raise DanglingReference(name, ref)
    ts = TopologicalSorter({n.name: n.references() for n in sn})
    try:
        ts.prepare()
    except CycleError as e:
        # graphlib lists each node before the node that references it
        raise CyclicDependency(list(e.args[1])) from None
    check_bit_overlap(sn)


def gene_label(node: str, attr_index: int, param_index: int, keyword: str = "") -> str:
    kw = f":{keyword}" if keyword else ""
    return f"{node}/{attr_index}{kw}/{param_index}"


def check_bit_overlap(sn: SemanticNetwork) -> None:
    spans = []
    for node, ai, pi, spec, _ in sn.tunables():
        kw = sn.nodes[node].attributes[ai].keyword
        spans.append((spec.bit_start, spec.bit_end, gene_label(node, ai, pi, kw)))
    spans.sort()
    for (s0, e0, l0), (s1, e1, l1) in zip(spans, spans[1:]):
        if s1 <= e0:
            raise OverlappingBits(l0, l1)


def topological_order(sn: SemanticNetwork) -> list[str]:
    """Node names in a dependency-respecting order, list order breaking ties."""
    remaining = {n.name: set(n.references()) for n in sn}
    done: list[str] = []
    while remaining:
        ready = [n for n in sn.names if n in remaining and not remaining[n] - set(done)]
        if not ready:
            raise CyclicDependency(list(remaining))
        done.append(ready[0])
        del remaining[ready[0]]
    return done


# -- serialization -----------------------------------------------------------

def serialize_node(node: SNNode) -> str:
    lines = [f"name: {node.name}"]
    lines.extend(a.format() for a in node.attributes)
    return "\n".join(lines) + "\n"


def write_network(sn: SemanticNetwork, directory: str | Path, list_name: str = "nodes.txt") -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for node in sn:
        (directory / f"{node.name}.txt").write_text(serialize_node(node), encoding="utf-8")
    list_path = directory / list_name
    list_path.write_text("".join(f"{n}.txt\n" for n in sn.names), encoding="utf-8")
    return list_path
