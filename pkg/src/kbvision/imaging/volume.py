from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..errors import GeometryMismatch

Spacing = tuple[float, float, float]
Dims = tuple[int, int, int]

DTYPES = {"u8": np.dtype("<u1"), "i16": np.dtype("<i2"), "f32": np.dtype("<f4")}


def dtype_code(dtype) -> str:
    dtype = np.dtype(dtype)
    for code, dt in DTYPES.items():
        if dtype.kind == dt.kind and dtype.itemsize == dt.itemsize:
            return code
    raise ValueError(f"unsupported voxel dtype {dtype}")


def _readonly(a: np.ndarray) -> np.ndarray:
    if a.flags.writeable or not a.flags.c_contiguous:
        a = np.array(a, order="C", copy=True)
        a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ImageVolume:
    """Scalar grid stored as a ``(nz, ny, nx)`` array, so x varies fastest.

    ``spacing`` is ``(sx, sy, sz)`` in mm per voxel.
    """

    data: np.ndarray
    spacing: Spacing = (1.0, 1.0, 1.0)

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 2:
            data = data[np.newaxis]
        if data.ndim != 3:
            raise ValueError("image data must be 2-D or 3-D")
        dtype_code(data.dtype)
        spacing = tuple(float(s) for s in self.spacing)
        if len(spacing) != 3 or not all(s > 0 for s in spacing):
            raise ValueError(f"spacing must be 3 positive values, got {self.spacing}")
        object.__setattr__(self, "data", _readonly(data))
        object.__setattr__(self, "spacing", spacing)

    @property
    def dims(self) -> Dims:
        nz, ny, nx = self.data.shape
        return (nx, ny, nz)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    @property
    def is_2d(self) -> bool:
        return self.data.shape[0] == 1

    @property
    def dtype(self) -> str:
        return dtype_code(self.data.dtype)

    @property
    def geometry(self) -> tuple[Dims, Spacing]:
        return (self.dims, self.spacing)

    def __eq__(self, other):
        if not isinstance(other, ImageVolume):
            return NotImplemented
        return (self.spacing == other.spacing and self.data.dtype == other.data.dtype
                and np.array_equal(self.data, other.data))

    __hash__ = None

    def empty_region(self) -> "ImageRegion":
        return ImageRegion(np.zeros(self.shape, bool), self.spacing)

    def full_region(self) -> "ImageRegion":
        return ImageRegion(np.ones(self.shape, bool), self.spacing)


@dataclass(frozen=True, eq=False)
class ImageRegion:
    """Immutable voxel subset of a grid, with lazily cached features."""

    mask: np.ndarray
    spacing: Spacing = (1.0, 1.0, 1.0)

    def __post_init__(self):
        mask = np.asarray(self.mask)
        if mask.ndim == 2:
            mask = mask[np.newaxis]
        if mask.ndim != 3:
            raise ValueError("region mask must be 2-D or 3-D")
        object.__setattr__(self, "mask", _readonly(mask.astype(bool, copy=False)))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))

    @classmethod
    def like(cls, ref: "ImageVolume | ImageRegion", mask: np.ndarray) -> "ImageRegion":
        return cls(mask, ref.spacing)

    def __eq__(self, other):
        if not isinstance(other, ImageRegion):
            return NotImplemented
        return self.spacing == other.spacing and np.array_equal(self.mask, other.mask)

    __hash__ = None

    @property
    def shape(self):
        return self.mask.shape

    @property
    def dims(self) -> Dims:
        nz, ny, nx = self.mask.shape
        return (nx, ny, nz)

    @property
    def is_2d(self) -> bool:
        return self.mask.shape[0] == 1

    def check_geometry(self, other) -> None:
        if self.shape != other.shape or self.spacing != tuple(other.spacing):
            raise GeometryMismatch((self.dims, self.spacing), (other.dims, tuple(other.spacing)))

    @cached_property
    def count(self) -> int:
        return int(np.count_nonzero(self.mask))

    @property
    def empty(self) -> bool:
        return self.count == 0

    @cached_property
    def flat_indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    @cached_property
    def voxel_volume_mm3(self) -> float:
        sx, sy, sz = self.spacing
        return sx * sy * sz

    @cached_property
    def volume_cm3(self) -> float:
        return self.count * self.voxel_volume_mm3 / 1000.0

    @cached_property
    def area_cm2(self) -> float:
        """In-plane area; for 3-D regions the mean over occupied slices."""
        sx, sy, _ = self.spacing
        if self.count == 0:
            return 0.0
        slices = int(np.count_nonzero(self.mask.any(axis=(1, 2))))
        return self.count * sx * sy / 100.0 / slices

    @cached_property
    def centroid_mm(self) -> tuple[float, float, float]:
        if self.count == 0:
            raise ValueError("centroid of an empty region")
        z, y, x = np.nonzero(self.mask)
        sx, sy, sz = self.spacing
        return (float(x.mean() * sx), float(y.mean() * sy), float(z.mean() * sz))

    @cached_property
    def bbox(self) -> tuple[tuple[int, int], ...]:
        """Inclusive voxel bounds ``((x0, x1), (y0, y1), (z0, z1))``."""
        if self.count == 0:
            return ()
        z, y, x = np.nonzero(self.mask)
        return ((int(x.min()), int(x.max())), (int(y.min()), int(y.max())),
                (int(z.min()), int(z.max())))

    def mean_intensity(self, img: ImageVolume) -> float:
        self.check_geometry(img)
        if self.count == 0:
            raise ValueError("mean intensity of an empty region")
        return float(img.data[self.mask].astype(np.float64).mean())

    def overlap_fraction(self, other: "ImageRegion") -> float:
        """Fraction of this region's voxels that also lie in ``other``."""
        self.check_geometry(other)
        if self.count == 0:
            return 0.0
        return int(np.count_nonzero(self.mask & other.mask)) / self.count

    def __and__(self, other: "ImageRegion") -> "ImageRegion":
        self.check_geometry(other)
        return ImageRegion(self.mask & other.mask, self.spacing)

    def __or__(self, other: "ImageRegion") -> "ImageRegion":
        self.check_geometry(other)
        return ImageRegion(self.mask | other.mask, self.spacing)

    def __invert__(self) -> "ImageRegion":
        return ImageRegion(~self.mask, self.spacing)

    def summary(self) -> dict:
        out = {"voxels": self.count}
        if self.count:
            out["centroid_mm"] = [round(c, 6) for c in self.centroid_mm]
            out["bbox"] = [list(b) for b in self.bbox]
        return out


def union(regions, like: ImageVolume | ImageRegion) -> ImageRegion:
    mask = np.zeros(like.shape, bool)
    for r in regions:
        mask |= r.mask
    return ImageRegion(mask, like.spacing)


def lexicographic_key(region: ImageRegion):
    """Sort key ordering regions by their sorted flat voxel indices."""
    return _LexKey(region.flat_indices)


class _LexKey:
    __slots__ = ("idx",)

    def __init__(self, idx: np.ndarray):
        self.idx = idx

    def _cmp(self, other: "_LexKey") -> int:
        a, b = self.idx, other.idx
        n = min(a.size, b.size)
        diff = np.flatnonzero(a[:n] != b[:n])
        if diff.size:
            i = diff[0]
            return -1 if a[i] < b[i] else 1
        return (a.size > b.size) - (a.size < b.size)

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __eq__(self, other):
        return self._cmp(other) == 0
