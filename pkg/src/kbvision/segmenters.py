"""Candidate generators: thresholding, connected components, morphology,
intensity preprocessing, and externally supplied masks.

Connectivity is face-only (6 in 3-D, 4 in 2-D) everywhere.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import ndimage

from .errors import EmptySourceRegion, FormatError, GeometryMismatch, MissingExternalInput
from .imaging import ImageRegion, ImageVolume, read_volume

MORPH_OPS = ("erode", "dilate", "open", "close", "fill_holes")


def _structure(mask: np.ndarray) -> np.ndarray:
    if mask.shape[0] == 1:
        # in-plane cross only; label() needs a 3x3x3 structure
        s = np.zeros((3, 3, 3), bool)
        s[1] = ndimage.generate_binary_structure(2, 1)
        return s
    return ndimage.generate_binary_structure(3, 1)


def threshold_mask(img: ImageVolume, lo: float, hi: float) -> np.ndarray:
    return (img.data >= lo) & (img.data <= hi)


def split_components(mask: np.ndarray, spacing) -> list[ImageRegion]:
    """Face-connected components, largest first, ties by first voxel index."""
    labels, n = ndimage.label(mask, structure=_structure(mask))
    if n == 0:
        return []
    flat = labels.ravel()
    counts = np.bincount(flat, minlength=n + 1)[1:]
    nz = np.flatnonzero(flat)
    # first voxel of each label in raster order
    firsts = np.full(n, flat.size, dtype=np.int64)
    np.minimum.at(firsts, flat[nz] - 1, nz)
    order = sorted(range(n), key=lambda i: (-counts[i], firsts[i]))
    return [ImageRegion(labels == (i + 1), spacing) for i in order]


def threshold_segment(img: ImageVolume, lo: float, hi: float,
                      search: ImageRegion | None = None) -> list[ImageRegion]:
    if lo > hi:
        raise ValueError(f"threshold lower bound {lo} exceeds upper bound {hi}")
    mask = threshold_mask(img, lo, hi)
    if search is not None:
        search.check_geometry(img)
        mask &= search.mask
    return split_components(mask, img.spacing)


# -- morphology ---------------------------------------------------------------

def ball(radius_mm: float, spacing, two_d: bool = False) -> np.ndarray:
    """Ellipsoidal structuring element of a physical radius (anisotropy aware)."""
    sx, sy, sz = spacing
    rx, ry = int(math.floor(radius_mm / sx)), int(math.floor(radius_mm / sy))
    rz = 0 if two_d else int(math.floor(radius_mm / sz))
    z, y, x = np.meshgrid(np.arange(-rz, rz + 1), np.arange(-ry, ry + 1),
                          np.arange(-rx, rx + 1), indexing="ij")
    return (x * sx) ** 2 + (y * sy) ** 2 + (z * sz) ** 2 <= radius_mm ** 2 + 1e-9


def _erode(mask, se):
    if se.size == 1:
        return mask.copy()
    return ndimage.binary_erosion(mask, structure=se, border_value=0)


def _dilate(mask, se):
    if se.size == 1:
        return mask.copy()
    return ndimage.binary_dilation(mask, structure=se, border_value=0)


def _fill_holes(mask: np.ndarray) -> np.ndarray:
    if mask.shape[0] == 1:
        s2 = ndimage.generate_binary_structure(2, 1)
        return ndimage.binary_fill_holes(mask[0], structure=s2)[np.newaxis]
    return ndimage.binary_fill_holes(mask, structure=_structure(mask))


def morph_mask(mask: np.ndarray, op: str, radius_mm: float, spacing) -> np.ndarray:
    if op == "fill_holes":
        return _fill_holes(mask)
    if radius_mm < 0:
        raise ValueError("radius must be non-negative")
    se = ball(radius_mm, spacing, two_d=mask.shape[0] == 1)
    if op == "erode":
        return _erode(mask, se)
    if op == "dilate":
        return _dilate(mask, se)
    if op == "open":
        return _dilate(_erode(mask, se), se)
    if op == "close":
        # pad so closing stays extensive next to the grid border
        pad = [(h // 2, h // 2) for h in se.shape]
        padded = np.pad(mask, pad)
        closed = _erode(_dilate(padded, se), se)
        return closed[tuple(slice(p, p + n) for (p, _), n in zip(pad, mask.shape))]
    raise ValueError(f"unknown morphology op {op!r}; expected one of {MORPH_OPS}")


def morphology(r: ImageRegion, op: str, radius_mm: float = 0.0) -> ImageRegion:
    return ImageRegion(morph_mask(r.mask, op, radius_mm, r.spacing), r.spacing)


# -- external candidates -------------------------------------------------------

def read_manifest(path: str | Path) -> dict[str, Path]:
    """``tag <whitespace> path`` lines; relative paths resolve against the file."""
    path = Path(path)
    out: dict[str, Path] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise FormatError(f"{path}:{lineno}: expected 'tag path'")
        tag, p = parts[0], Path(parts[1].strip())
        out[tag] = p if p.is_absolute() else path.parent / p
    return out


def load_external_mask(tag: str, manifest: Mapping[str, str | Path], geometry) -> np.ndarray:
    if tag not in manifest:
        raise MissingExternalInput(tag)
    path = Path(manifest[tag])
    if not path.is_file():
        raise MissingExternalInput(tag)
    vol = read_volume(path)
    dims = geometry.dims if hasattr(geometry, "dims") else tuple(geometry[0])
    if tuple(vol.dims) != tuple(dims):
        raise GeometryMismatch(tuple(dims), vol.dims)
    return vol.data != 0


def external_candidates(tag: str, manifest: Mapping[str, str | Path], geometry) -> list[ImageRegion]:
    """Connected components of an externally produced mask (e.g. a DNN output)."""
    spacing = geometry.spacing if hasattr(geometry, "spacing") else tuple(geometry[1])
    return split_components(load_external_mask(tag, manifest, geometry), spacing)


# -- intensity preprocessing --------------------------------------------------

def nearest_rank(sorted_values: np.ndarray, p: float) -> float:
    n = sorted_values.size
    rank = max(1, math.ceil(p / 100.0 * n))
    return float(sorted_values[min(rank, n) - 1])


def _min_max(data: np.ndarray, stats: np.ndarray) -> np.ndarray:
    lo, hi = float(stats.min()), float(stats.max())
    if hi <= lo:
        return np.zeros(data.shape)
    return np.clip((data - lo) / (hi - lo), 0.0, 1.0)


def _clip_hist_eq(data: np.ndarray, stats: np.ndarray, p_lo: float, p_hi: float) -> np.ndarray:
    if not 0 <= p_lo < p_hi <= 100:
        raise ValueError(f"need 0 <= p_lo < p_hi <= 100, got {p_lo}, {p_hi}")
    s = np.sort(stats)
    a, b = nearest_rank(s, p_lo), nearest_rank(s, p_hi)
    if b <= a:
        return np.zeros(data.shape)

    def bins(v):
        return np.minimum(((np.clip(v, a, b) - a) / (b - a) * 256).astype(np.int64), 255)

    hist = np.bincount(bins(s), minlength=256)
    cdf = np.cumsum(hist) / s.size
    return cdf[bins(data)]


def preprocess(img: ImageVolume, steps: Sequence, source_region: ImageRegion | None = None) -> ImageVolume:
    """Apply normalisation steps in order; output is f32 in [0, 1].

    ``steps`` items are ``"min_max_norm"`` or ``("clip_hist_eq", p_lo, p_hi)``.
    Statistics come from ``source_region`` when given, else the whole image.
    """
    if source_region is not None:
        source_region.check_geometry(img)
        if source_region.empty:
            raise EmptySourceRegion("normalisation source region is empty")
    data = img.data.astype(np.float64)
    for step in steps:
        name, *args = (step,) if isinstance(step, str) else step
        stats = data[source_region.mask] if source_region is not None else data.ravel()
        if name == "min_max_norm":
            data = _min_max(data, stats)
        elif name == "clip_hist_eq":
            data = _clip_hist_eq(data, stats, *args)
        else:
            raise ValueError(f"unknown preprocessing step {name!r}")
    return ImageVolume(data.astype(np.float32), img.spacing)


def union_mask(regions: Iterable[ImageRegion], shape) -> np.ndarray:
    mask = np.zeros(shape, bool)
    for r in regions:
        mask |= r.mask
    return mask
