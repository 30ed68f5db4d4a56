"""Binary chromosomes and their decoding into knowledge-base parameters."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import FormatError, LengthMismatch
from ..knowledge import ChromosomeLayout, GenePath


@dataclass(frozen=True)
class Chromosome:
    """Fixed-length bit string; stored as a ``'0'``/``'1'`` text for hashing."""

    bits: str

    def __post_init__(self):
        if any(b not in "01" for b in self.bits):
            raise ValueError("chromosome bits must be '0' or '1'")

    def __len__(self):
        return len(self.bits)

    def __str__(self):
        return self.bits

    @classmethod
    def from_array(cls, a) -> "Chromosome":
        return cls("".join("1" if b else "0" for b in np.asarray(a).ravel()))

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.bits.encode("ascii"), dtype=np.uint8) - ord("0")

    @classmethod
    def zeros(cls, n: int) -> "Chromosome":
        return cls("0" * n)

    @classmethod
    def ones(cls, n: int) -> "Chromosome":
        return cls("1" * n)


def gene_index(bits: str) -> int:
    """Unsigned big-endian value of a gene's bits."""
    return int(bits, 2) if bits else 0


def decode_gene(bits: str, lower: float, upper: float) -> float:
    n = len(bits)
    i = gene_index(bits)
    if i == 0:
        return float(lower)
    if i == 2 ** n - 1:
        return float(upper)
    return lower + i * (upper - lower) / (2 ** n - 1)


def decode(ch: Chromosome | str, layout: ChromosomeLayout) -> dict[GenePath, float]:
    bits = ch.bits if isinstance(ch, Chromosome) else str(ch)
    if len(bits) != layout.total_bits:
        raise LengthMismatch(layout.total_bits, len(bits))
    return {g.path: decode_gene(bits[g.bit_start:g.bit_end + 1], g.lower, g.upper)
            for g in layout.genes}


def encode_nearest(values: dict[GenePath, float], layout: ChromosomeLayout) -> Chromosome:
    """Chromosome whose genes decode closest to ``values`` (unused bits 0)."""
    out = ["0"] * layout.total_bits
    for g in layout.genes:
        steps = 2 ** g.n_bits - 1
        i = int(round((values[g.path] - g.lower) / (g.upper - g.lower) * steps))
        i = min(max(i, 0), steps)
        out[g.bit_start:g.bit_end + 1] = format(i, f"0{g.n_bits}b")
    return Chromosome("".join(out))


def read_chromosome(path) -> Chromosome:
    text = Path(path).read_text(encoding="ascii").strip()
    try:
        return Chromosome(text)
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from None


def write_chromosome(ch: Chromosome, path) -> None:
    Path(path).write_text(ch.bits + "\n", encoding="ascii")
