"""Attribute vocabulary for node files.

Each entry lists the argument slots of a keyword in file order. Slot kinds:

``node``      reference to another node (creates a dependency edge)
``nodes``     one or more node references (``min_nodes`` applies)
``tag``       free identifier, not a node
``num``       required number, may carry a tunable ``{b0, b1, lo, hi}`` block
``opt_num``   optional trailing number
``vertices``  even-length list of numbers ``v1 c1 v2 c2 ...`` (at least two pairs)
"""
from __future__ import annotations

from dataclasses import dataclass

# what kind of candidate generator an attribute makes its node
SOURCE_THRESHOLD = "threshold"
SOURCE_EXTERNAL = "external"
SOURCE_DECISION = "decision"


@dataclass(frozen=True)
class VocabEntry:
    keyword: str
    slots: tuple[str, ...]
    min_nodes: int = 1
    source: str | None = None
    doc: str = ""


_ENTRIES = [
    VocabEntry("IntensityRange", ("num", "num"), doc="expected mean intensity range"),
    VocabEntry("Area_Fuzzy", ("vertices",), doc="mean cross-sectional area, cm^2"),
    VocabEntry("Volume_Fuzzy", ("vertices",), doc="volume, cm^3"),
    VocabEntry("PartOf", ("node",)),
    VocabEntry("NotPartOf", ("node", "opt_num")),
    VocabEntry("RightOf", ("node", "num", "num"), doc="mm"),
    VocabEntry("LeftOf", ("node", "num", "num"), doc="mm"),
    VocabEntry("Above", ("node", "num", "num"), doc="mm"),
    VocabEntry("Below", ("node", "num", "num"), doc="mm"),
    VocabEntry("SameLevelAs", ("node", "num"), doc="tolerance, mm"),
    VocabEntry("InsideOf", ("node", "opt_num")),
    VocabEntry("Box", ("node", "num", "num", "num", "num", "num", "num"),
               doc="mm offsets dx0 dx1 dy0 dy1 dz0 dz1 from reference centroid"),
    VocabEntry("Threshold", ("num", "num"), source=SOURCE_THRESHOLD),
    VocabEntry("MorphOpen", ("num",), doc="radius, mm"),
    VocabEntry("MorphClose", ("num",), doc="radius, mm"),
    VocabEntry("FillHoles", ()),
    VocabEntry("ExternalCandidates", ("tag",), source=SOURCE_EXTERNAL),
    VocabEntry("NormalizationSource", ("node",)),
    VocabEntry("Preprocess_MinMaxNorm", ()),
    VocabEntry("Preprocess_ClipHistEq", ("num", "num"), doc="percentiles"),
    VocabEntry("DecisionAnd", ("nodes",), min_nodes=2, source=SOURCE_DECISION),
    VocabEntry("DecisionNot", ("node",), source=SOURCE_DECISION),
    VocabEntry("NeuralNet_LearningRate", ("num", "num"), doc="mantissa, exponent"),
]

VOCABULARY: dict[str, VocabEntry] = {e.keyword: e for e in _ENTRIES}

DIRECTIONAL = ("RightOf", "LeftOf", "Above", "Below")
FUZZY_FEATURES = {"Area_Fuzzy": "area_cm2", "Volume_Fuzzy": "volume_cm3"}
