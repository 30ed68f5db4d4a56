"""Knowledge base: semantic-network files, vocabulary, fuzzy sets, tunables."""
from .fuzzy import FuzzyMembership, eval_fuzzy, falling, trapezoid
from .graph import export_graph
from .layout import (
    ChromosomeLayout,
    Gene,
    GenePath,
    ParameterSet,
    default_parameters,
    extract_layout,
    substitute,
)
from .network import (
    Attribute,
    Param,
    SemanticNetwork,
    SNNode,
    TunableSpec,
    format_number,
    parse_network,
    parse_node_text,
    serialize_node,
    topological_order,
    validate_network,
    write_network,
)
from .vocabulary import VOCABULARY, VocabEntry

__all__ = [
    "Attribute", "ChromosomeLayout", "FuzzyMembership", "Gene", "GenePath", "Param",
    "ParameterSet", "SNNode", "SemanticNetwork", "TunableSpec", "VOCABULARY", "VocabEntry",
    "default_parameters", "eval_fuzzy", "export_graph", "extract_layout", "falling",
    "format_number", "parse_network", "parse_node_text", "serialize_node", "substitute",
    "topological_order", "trapezoid", "validate_network", "write_network",
]
