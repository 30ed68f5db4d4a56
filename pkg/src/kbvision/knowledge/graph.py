from __future__ import annotations

from .network import SemanticNetwork


def export_graph(sn: SemanticNetwork, title: str = "semantic_network") -> str:
    """DOT digraph with one vertex per node and one edge per relation.

    Edges point from the referenced node to the node holding the
    attribute, i.e. in processing-dependency direction.
    """
    lines = [f'digraph "{title}" {{', "  rankdir=TB;", "  node [shape=box];"]
    for name in sn.names:
        lines.append(f'  {name} [label="{name}"];')
    for src, dst, kw in sn.edges():
        lines.append(f'  {src} -> {dst} [label="{kw}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
