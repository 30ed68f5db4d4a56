from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass


@dataclass(frozen=True)
class FuzzyMembership:
    """Piecewise-linear confidence function over a scalar feature.

    Vertices are ``(value, confidence)`` pairs with strictly increasing
    values. Outside the vertex range the first/last confidence is held.
    """

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        verts = tuple((float(v), float(c)) for v, c in self.vertices)
        if len(verts) < 2:
            raise ValueError("a fuzzy membership needs at least 2 vertices")
        for v, c in verts:
            if not (math.isfinite(v) and 0.0 <= c <= 1.0):
                raise ValueError(f"invalid vertex ({v}, {c})")
        for (v0, _), (v1, _) in zip(verts, verts[1:]):
            if not v1 > v0:
                raise ValueError("vertex values must be strictly increasing")
        object.__setattr__(self, "vertices", verts)

    @classmethod
    def from_flat(cls, values) -> "FuzzyMembership":
        values = list(values)
        if len(values) % 2:
            raise ValueError("vertex list must have even length")
        return cls(tuple(zip(values[0::2], values[1::2])))

    def __call__(self, x: float) -> float:
        return eval_fuzzy(self, x)


def eval_fuzzy(f: FuzzyMembership, x: float) -> float:
    verts = f.vertices
    if x <= verts[0][0]:
        return verts[0][1]
    if x >= verts[-1][0]:
        return verts[-1][1]
    i = bisect_right([v for v, _ in verts], x)
    (v0, c0), (v1, c1) = verts[i - 1], verts[i]
    if x == v0:
        return c0
    return c0 + (x - v0) * (c1 - c0) / (v1 - v0)


def trapezoid(lo: float, hi: float, margin: float | None = None) -> FuzzyMembership:
    """Confidence 1 on ``[lo, hi]`` falling linearly to 0 over ``margin``.

    The default margin is a quarter of the range width; degenerate ranges
    fall back to 1.0 so the vertices stay strictly increasing.
    """
    if hi < lo:
        raise ValueError(f"empty range [{lo}, {hi}]")
    if margin is None:
        margin = 0.25 * (hi - lo)
    if margin <= 0:
        margin = 1.0
    if hi == lo:
        return FuzzyMembership(((lo - margin, 0.0), (lo, 1.0), (lo + margin, 0.0)))
    return FuzzyMembership(((lo - margin, 0.0), (lo, 1.0), (hi, 1.0), (hi + margin, 0.0)))


def falling(tol: float) -> FuzzyMembership:
    """1 at zero, linearly down to 0 at ``tol`` (used for |difference| features)."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    return FuzzyMembership(((0.0, 1.0), (float(tol), 0.0)))
