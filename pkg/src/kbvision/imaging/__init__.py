"""Image volumes, regions, file formats and synthetic phantoms."""
from .io import (
    decode_mhdx,
    decode_pgm,
    encode_mhdx,
    encode_pgm,
    read_mask,
    read_volume,
    region_volume,
    write_region,
    write_volume,
)
from .phantoms import FAMILIES, PhantomSpec, make_phantom
from .volume import ImageRegion, ImageVolume, lexicographic_key, union

__all__ = [
    "FAMILIES", "ImageRegion", "ImageVolume", "PhantomSpec", "decode_mhdx", "decode_pgm",
    "encode_mhdx", "encode_pgm", "lexicographic_key", "make_phantom", "read_mask",
    "read_volume", "region_volume", "union", "write_region", "write_volume",
]
