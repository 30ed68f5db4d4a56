"""Chromosome layout extraction and parameter substitution."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, NamedTuple

from ..errors import ExtraGene, MissingGene
from .network import Param, SemanticNetwork, check_bit_overlap, gene_label


class GenePath(NamedTuple):
    node: str
    attribute: int
    param: int

    def __str__(self):
        return gene_label(self.node, self.attribute, self.param)


@dataclass(frozen=True)
class Gene:
    path: GenePath
    keyword: str
    bit_start: int
    bit_end: int
    lower: float
    upper: float
    default: float

    @property
    def n_bits(self) -> int:
        return self.bit_end - self.bit_start + 1

    @property
    def label(self) -> str:
        return gene_label(self.path.node, self.path.attribute, self.path.param, self.keyword)


@dataclass(frozen=True)
class ChromosomeLayout:
    genes: tuple[Gene, ...]
    total_bits: int

    def __len__(self):
        return len(self.genes)

    @property
    def paths(self) -> list[GenePath]:
        return [g.path for g in self.genes]


# decoded gene values keyed by gene path
ParameterSet = Mapping[GenePath, float]


def extract_layout(sn: SemanticNetwork) -> ChromosomeLayout:
    check_bit_overlap(sn)
    genes = []
    for node, ai, pi, spec, param in sn.tunables():
        kw = sn.nodes[node].attributes[ai].keyword
        genes.append(Gene(GenePath(node, ai, pi), kw, spec.bit_start, spec.bit_end,
                          spec.lower, spec.upper, param.default))
    total = 1 + max(g.bit_end for g in genes) if genes else 0
    return ChromosomeLayout(tuple(genes), total)


def default_parameters(sn: SemanticNetwork) -> dict[GenePath, float]:
    return {g.path: g.default for g in extract_layout(sn).genes}


def substitute(sn: SemanticNetwork, ps: ParameterSet) -> SemanticNetwork:
    """Copy of ``sn`` with every tunable replaced by its value in ``ps``.

    The value-encoding annotations are dropped, so the result is a fully
    specified knowledge base.
    """
    layout = extract_layout(sn)
    wanted = set(layout.paths)
    for path in layout.paths:
        if path not in ps:
            raise MissingGene(path)
    for path in ps:
        if path not in wanted:
            raise ExtraGene(path)
    nodes = {}
    for name, node in sn.nodes.items():
        attrs = list(node.attributes)
        for ai, a in enumerate(attrs):
            params = list(a.params)
            changed = False
            for pi, p in enumerate(params):
                key = GenePath(name, ai, pi)
                if key in ps:
                    params[pi] = Param(float(ps[key]))
                    changed = True
            if changed:
                attrs[ai] = replace(a, params=tuple(params))
        nodes[name] = replace(node, attributes=tuple(attrs))
    return SemanticNetwork(nodes, sn.source_paths)
