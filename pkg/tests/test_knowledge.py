from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import kb_path, write_kb
from kbvision.errors import (
    CyclicDependency,
    DanglingReference,
    ExtraGene,
    KBSyntaxError,
    KnowledgeError,
    MissingGene,
    OverlappingBits,
    UnknownKeyword,
)
from kbvision.knowledge import (
    FuzzyMembership,
    GenePath,
    SemanticNetwork,
    default_parameters,
    eval_fuzzy,
    export_graph,
    extract_layout,
    falling,
    parse_network,
    parse_node_text,
    serialize_node,
    substitute,
    topological_order,
    trapezoid,
    write_network,
)

KIDNEY_NODES = ["abdomen", "dense_bone", "spine", "kidney_cnn", "kidney_left_init",
                "kidney_right_init", "kidney_left", "kidney_right"]


# -- parsing ------------------------------------------------------------------

def test_kidney_network_has_eight_nodes_in_list_order():
    sn = parse_network(kb_path("kidney"))
    assert sn.names == KIDNEY_NODES
    assert ("spine", "kidney_left_init", "LeftOf") in sn.edges()
    order = topological_order(sn)
    for ref, dst, _ in sn.edges():
        assert order.index(ref) < order.index(dst)


@pytest.mark.parametrize("kb", ["kidney", "kidney_tuning", "ett"])
def test_shipped_networks_parse(kb):
    sn = parse_network(kb_path(kb))
    assert len(sn) >= 8


def test_empty_node_list(tmp_path):
    p = tmp_path / "nodes.txt"
    p.write_text("# nothing here\n\n")
    sn = parse_network(p)
    assert len(sn) == 0 and sn.edges() == []


def test_dangling_reference(tmp_path):
    lst = write_kb(tmp_path, {"spine": "Threshold 500 3000", "kidney": "LeftOf spne 50 100"})
    with pytest.raises(DanglingReference) as ei:
        parse_network(lst)
    assert ei.value.node == "kidney" and ei.value.referenced == "spne"


def test_missing_node_file(tmp_path):
    p = tmp_path / "nodes.txt"
    p.write_text("ghost.txt\n")
    with pytest.raises(FileNotFoundError):
        parse_network(p)


def test_node_list_entry_without_suffix(tmp_path):
    write_kb(tmp_path, {"a": "Threshold 0 1"})
    (tmp_path / "list.txt").write_text("a\n")
    assert parse_network(tmp_path / "list.txt").names == ["a"]


def test_cycle_reported_with_full_path(tmp_path):
    lst = write_kb(tmp_path, {"a": "PartOf c", "b": "PartOf a", "c": "PartOf b", "d": "Threshold 0 1"})
    with pytest.raises(CyclicDependency) as ei:
        parse_network(lst)
    cyc = ei.value.cycle
    assert cyc[0] == cyc[-1] and set(cyc) == {"a", "b", "c"} and len(cyc) == 4
    # consecutive entries follow dependency edges (referenced -> referencing)
    refs = {"a": "c", "b": "a", "c": "b"}
    for x, y in zip(cyc, cyc[1:]):
        assert refs[y] == x


def test_self_reference_is_a_cycle(tmp_path):
    lst = write_kb(tmp_path, {"a": "PartOf a"})
    with pytest.raises(CyclicDependency):
        parse_network(lst)


def test_unknown_keyword():
    with pytest.raises(UnknownKeyword) as ei:
        parse_node_text("name: k\nLeftof spine 50 100\n")
    assert ei.value.keyword == "Leftof" and ei.value.node == "k"


@pytest.mark.parametrize("text, line, col", [
    ("name: k\nLeftOf spine 50\n", 2, 1),
    ("name: k\nLeftOf spine fifty 100\n", 2, 14),
    ("name: k\nThreshold 0 1 2\n", 2, 15),
    ("kidney\n", 1, 1),
    ("name: k\nThreshold 0 {1, 2, 3\n", 2, 13),
])
def test_syntax_errors_carry_position(text, line, col):
    with pytest.raises(KBSyntaxError) as ei:
        parse_node_text(text, "k.txt")
    assert (ei.value.line, ei.value.column) == (line, col)


def test_tunable_default_outside_bounds():
    with pytest.raises(KnowledgeError):
        parse_node_text("name: k\nThreshold 700 {0, 3, 0, 500} 1000\n")


def test_two_segmentation_sources_rejected():
    with pytest.raises(KnowledgeError):
        parse_node_text("name: k\nThreshold 0 1\nExternalCandidates cnn\n")


def test_comments_and_blank_lines():
    node = parse_node_text("# header\n\nname: k   # trailing\n\nThreshold 1 2 # lo hi\n")
    assert node.name == "k" and [a.keyword for a in node.attributes] == ["Threshold"]


def test_overlapping_bits(tmp_path):
    lst = write_kb(tmp_path, {"a": "Threshold 0 {0, 1, 0, 3} 5 {1, 2, 4, 8}"})
    with pytest.raises(OverlappingBits):
        parse_network(lst)


# -- fuzzy memberships ------------------------------------------------------------

def test_area_membership_vertices():
    f = FuzzyMembership(((100, 0.0), (500, 1.0)))
    assert eval_fuzzy(f, 100) == 0.0
    assert eval_fuzzy(f, 500) == 1.0
    assert eval_fuzzy(f, 1000) == 1.0
    assert abs(eval_fuzzy(f, 300) - 0.5) <= 1e-12
    assert eval_fuzzy(f, 0) == 0.0


def test_trapezoid_margin_quarter_of_range():
    f = trapezoid(50, 100)
    assert f.vertices == ((37.5, 0.0), (50.0, 1.0), (100.0, 1.0), (112.5, 0.0))
    assert f(75) == 1.0 and f(37.5) == 0.0 and abs(f(43.75) - 0.5) < 1e-12


def test_falling_membership():
    f = falling(30)
    assert f(0) == 1.0 and f(30) == 0.0 and f(45) == 0.0 and abs(f(15) - 0.5) < 1e-12


@pytest.mark.parametrize("vertices", [((1, 0.0),), ((1, 0.0), (1, 1.0)), ((2, 0.0), (1, 1.0)),
                                      ((0, -0.1), (1, 1.0)), ((0, 0.0), (1, 1.5))])
def test_invalid_memberships(vertices):
    with pytest.raises(ValueError):
        FuzzyMembership(vertices)


@st.composite
def memberships(draw):
    n = draw(st.integers(2, 6))
    xs = sorted(draw(st.sets(st.integers(-1000, 1000), min_size=n, max_size=n)))
    cs = [draw(st.floats(0, 1)) for _ in xs]
    return FuzzyMembership(tuple(zip(map(float, xs), cs)))


@given(memberships(), st.floats(-5000, 5000))
def test_fuzzy_range_and_vertex_exactness(f, x):
    assert 0.0 <= f(x) <= 1.0
    for v, c in f.vertices:
        assert f(v) == c


@given(memberships(), st.floats(-5000, 5000), st.floats(-5000, 5000))
def test_fuzzy_monotone_between_vertices(f, a, b):
    a, b = min(a, b), max(a, b)
    # on any single segment the function is monotone in the segment's direction
    for (v0, c0), (v1, c1) in zip(f.vertices, f.vertices[1:]):
        lo, hi = max(a, v0), min(b, v1)
        if lo <= hi:
            if c1 >= c0:
                assert f(lo) <= f(hi) + 1e-12
            else:
                assert f(lo) + 1e-12 >= f(hi)


# -- layout and substitution -----------------------------------------------------

def test_learning_rate_gene_layout(tmp_path):
    lst = write_kb(tmp_path, {"apex_cnn": "ExternalCandidates cnn\nNeuralNet_LearningRate 1.0 -3 {45, 46, -5, -2}"})
    layout = extract_layout(parse_network(lst))
    assert len(layout.genes) == 1
    g = layout.genes[0]
    assert (g.bit_start, g.bit_end, g.n_bits, g.lower, g.upper) == (45, 46, 2, -5, -2)
    assert layout.total_bits == 47


def test_learning_rate_substitution_serializes_plainly(tmp_path):
    lst = write_kb(tmp_path, {"apex_cnn": "ExternalCandidates cnn\nNeuralNet_LearningRate 1.0 -3 {45, 46, -5, -2}"})
    sn = parse_network(lst)
    path = extract_layout(sn).genes[0].path
    out = substitute(sn, {path: -4.0})
    assert "NeuralNet_LearningRate 1.0 -4\n" in serialize_node(out.nodes["apex_cnn"])
    assert extract_layout(out).total_bits == 0


def test_layout_of_tunable_free_network():
    sn = parse_network(kb_path("kidney"))
    layout = extract_layout(sn)
    assert layout.genes == () and layout.total_bits == 0
    assert substitute(sn, {}) == sn


def test_substitute_gene_coverage():
    sn = parse_network(kb_path("kidney_tuning"))
    ps = default_parameters(sn)
    first = next(iter(ps))
    with pytest.raises(MissingGene):
        substitute(sn, {k: v for k, v in ps.items() if k != first})
    with pytest.raises(ExtraGene):
        substitute(sn, {**ps, GenePath("spine", 0, 0): 1.0})


def test_layout_order_is_node_then_attribute():
    layout = extract_layout(parse_network(kb_path("kidney_tuning")))
    assert [g.path.node for g in layout.genes] == ["kidney_candidates", "kidney_left_init"]
    assert [g.keyword for g in layout.genes] == ["Threshold", "LeftOf"]
    assert layout.total_bits == 13


def test_round_trip_shipped_networks(tmp_path):
    for kb in ("kidney", "kidney_tuning", "ett"):
        sn = parse_network(kb_path(kb))
        again = parse_network(write_network(sn, tmp_path / kb))
        assert again == sn
        assert extract_layout(again) == extract_layout(sn)


# random networks for the round-trip property
_REL = ["PartOf {r}", "NotPartOf {r}", "NotPartOf {r} 0.25", "InsideOf {r}", "LeftOf {r} 10 40",
        "RightOf {r} 5.5 20", "Above {r} 0 30", "Below {r} 1 2", "SameLevelAs {r} 12",
        "Box {r} -10 10 -20 0 -5 5", "NormalizationSource {r}"]
_PLAIN = ["IntensityRange 300 2000", "Area_Fuzzy 100 0 500 1", "Volume_Fuzzy 10 0 50 1 80 0",
          "MorphOpen 2", "MorphClose 4.5", "FillHoles", "Preprocess_MinMaxNorm",
          "Preprocess_ClipHistEq 1 99", "NeuralNet_LearningRate 1.0 -4"]
_SOURCES = ["Threshold -100 {B} 400", "ExternalCandidates cnn_{i}", None]


@st.composite
def networks(draw):
    n = draw(st.integers(1, 7))
    names = [f"n{i}" for i in range(n)]
    nodes, bit = {}, 0
    for i, name in enumerate(names):
        lines = []
        src = draw(st.sampled_from(_SOURCES))
        if src is not None:
            if "{B}" in src:
                tunable = draw(st.booleans())
                block = f"{{{bit}, {bit + 2}, -200, 0}}" if tunable else ""
                bit += 3 if tunable else 0
                src = src.replace("{B}", block).replace("  ", " ")
            lines.append(src.replace("{i}", str(i)))
        for _ in range(draw(st.integers(0, 3))):
            lines.append(draw(st.sampled_from(_PLAIN)))
        if i:
            for _ in range(draw(st.integers(0, 2))):
                r = draw(st.sampled_from(names[:i]))
                lines.append(draw(st.sampled_from(_REL)).format(r=r))
        nodes[name] = "\n".join(lines)
    order = draw(st.permutations(names))
    return {k: nodes[k] for k in order}


@given(networks())
def test_round_trip_random_networks(tmp_path_factory, nodes):
    d = tmp_path_factory.mktemp("rt")
    sn = parse_network(write_kb(d / "src", nodes))
    again = parse_network(write_network(sn, d / "out"))
    assert again == sn
    assert extract_layout(again) == extract_layout(sn)
    # all-zeros decode sets every tunable to its lower bound
    low = substitute(sn, {g.path: g.lower for g in extract_layout(sn).genes})
    for g in extract_layout(sn).genes:
        assert low.nodes[g.path.node].attributes[g.path.attribute].params[g.path.param].default == g.lower


# -- graph export ---------------------------------------------------------------

def test_graph_export_kidney():
    dot = export_graph(parse_network(kb_path("kidney")))
    assert dot.startswith("digraph")
    assert 'spine -> kidney_left_init [label="LeftOf"];' in dot
    assert dot == export_graph(parse_network(kb_path("kidney")))
    assert dot.count("->") == len(parse_network(kb_path("kidney")).edges())


def test_graph_export_single_node():
    sn = SemanticNetwork({"a": parse_node_text("name: a\nThreshold 0 1\n")})
    dot = export_graph(sn)
    assert 'a [label="a"];' in dot and "->" not in dot


def test_graph_export_prostate_style(tmp_path):
    lst = write_kb(tmp_path, {
        "prostate": "ExternalCandidates prostate_cnn",
        "prostate_apex_box": "Box prostate -50 50 -50 50 5 25",
        "prostate_apex_attention": "PartOf prostate_apex_box\nNormalizationSource prostate_apex_box\n"
                                   "Preprocess_MinMaxNorm\nThreshold 0.5 1",
    })
    dot = export_graph(parse_network(lst))
    assert "prostate_apex_box -> prostate_apex_attention" in dot
