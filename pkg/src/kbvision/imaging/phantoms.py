"""Synthetic test images with analytically known ground truth.

``kidney_ct``
    3-D abdomen: elliptical body at ~0 HU, a 1200 HU spine cylinder on the
    midline, two 400 HU kidney ellipsoids left and right of the spine at
    the same level, and one stray 400 HU blob anterior to the spine.
``ett_cxr``
    2-D chest film: dark trachea band splitting into two bronchi at the
    carina, a bright tube inside the trachea whose radio-opaque tip marker
    sits ``tip_offset_mm`` above the carina.

Axis convention: +x patient left, +y posterior, +z superior. In 2-D
images "above" means smaller y.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import UnknownPhantom
from .volume import ImageRegion, ImageVolume

FAMILIES = ("kidney_ct", "ett_cxr")

_DEFAULT_GEOMETRY = {
    "kidney_ct": ((128, 96, 24), (3.0, 3.0, 5.0)),
    "ett_cxr": ((256, 256, 1), (1.0, 1.0, 1.0)),
}


@dataclass(frozen=True)
class PhantomSpec:
    family: str
    dims: tuple[int, int, int] | None = None
    spacing: tuple[float, float, float] | None = None
    noise_sigma: float | None = None
    blur_sigma_mm: float | None = None
    # ett_cxr only
    tip_offset_mm: float = 50.0

    def geometry(self):
        if self.family not in _DEFAULT_GEOMETRY:
            raise UnknownPhantom(f"unknown phantom family {self.family!r}; known: {FAMILIES}")
        dims, spacing = _DEFAULT_GEOMETRY[self.family]
        return tuple(self.dims or dims), tuple(float(s) for s in (self.spacing or spacing))


def _grid(dims, spacing):
    nx, ny, nz = dims
    sx, sy, sz = spacing
    z, y, x = np.meshgrid(np.arange(nz) * sz, np.arange(ny) * sy, np.arange(nx) * sx,
                          indexing="ij")
    return x, y, z


def _ellipsoid(x, y, z, center, semi):
    cx, cy, cz = center
    ax, ay, az = semi
    return ((x - cx) / ax) ** 2 + ((y - cy) / ay) ** 2 + ((z - cz) / az) ** 2 <= 1.0


def _finish(image: np.ndarray, spacing, blur_mm: float, noise: float, rng, lo, hi, dtype):
    if blur_mm > 0:
        sigma = [blur_mm / s for s in (spacing[2], spacing[1], spacing[0])]
        if image.shape[0] == 1:
            sigma[0] = 0.0
        image = ndimage.gaussian_filter(image, sigma=sigma, mode="nearest")
    if noise > 0:
        image = image + rng.normal(0.0, noise, size=image.shape)
    return np.clip(np.rint(image), lo, hi).astype(dtype)


def _kidney_ct(spec: PhantomSpec, rng: np.random.Generator):
    dims, spacing = spec.geometry()
    x, y, z = _grid(dims, spacing)
    fov = [d * s for d, s in zip(dims, spacing)]
    cx, cy, cz = fov[0] / 2, fov[1] / 2, fov[2] / 2

    body = ((x - cx) / 170.0) ** 2 + ((y - cy) / 120.0) ** 2 <= 1.0
    spine_xy = (cx, cy + 65.0)
    spine = (x - spine_xy[0]) ** 2 + (y - spine_xy[1]) ** 2 <= 15.0 ** 2

    level = cz + rng.uniform(-5.0, 5.0)
    kidneys = {}
    for name, side in (("kidney_left", +1.0), ("kidney_right", -1.0)):
        offset = rng.uniform(65.0, 85.0)
        semi = tuple(a * rng.uniform(0.9, 1.1) for a in (28.0, 22.0, 45.0))
        center = (spine_xy[0] + side * offset, cy + 40.0 + rng.uniform(-5.0, 5.0),
                  level + rng.uniform(-3.0, 3.0))
        kidneys[name] = _ellipsoid(x, y, z, center, semi)
    stray_c = (cx - 15.0 + rng.uniform(-5.0, 5.0), cy - 60.0 + rng.uniform(-5.0, 5.0), level)
    stray = _ellipsoid(x, y, z, stray_c, (14.0, 14.0, 14.0))

    image = np.full(x.shape, -1000.0)
    image[body] = 0.0
    image[spine] = 1200.0
    for m in (*kidneys.values(), stray):
        image[m] = 400.0
    noise = 10.0 if spec.noise_sigma is None else spec.noise_sigma
    blur = 2.0 if spec.blur_sigma_mm is None else spec.blur_sigma_mm
    data = _finish(image, spacing, blur, noise, rng, -1024, 3071, np.int16)

    truth = {name: ImageRegion(m, spacing) for name, m in kidneys.items()}
    truth["spine"] = ImageRegion(spine & body, spacing)
    truth["stray"] = ImageRegion(stray, spacing)
    return ImageVolume(data, spacing), truth


def _segment_distance(px, py, a, b):
    (ax, ay), (bx, by) = a, b
    dx, dy = bx - ax, by - ay
    t = ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _polyline(px, py, points, half_width):
    m = np.zeros(px.shape, bool)
    for a, b in zip(points, points[1:]):
        m |= _segment_distance(px, py, a, b) <= half_width
    return m


def _ett_cxr(spec: PhantomSpec, rng: np.random.Generator):
    dims, spacing = spec.geometry()
    if dims[2] != 1:
        raise ValueError("ett_cxr is a 2-D phantom (nz must be 1)")
    x, y, _ = _grid(dims, spacing)
    x, y = x[0], y[0]
    fov_x, fov_y = dims[0] * spacing[0], dims[1] * spacing[1]
    x0 = fov_x / 2 + rng.uniform(-3.0, 3.0)
    carina = (x0, fov_y * 0.78 + rng.uniform(-3.0, 3.0))
    top = fov_y * 0.08

    trachea = (np.abs(x - x0) <= 9.0) & (y >= top) & (y <= carina[1] - 2.0)
    bronchi = (_polyline(x, y, [(x0 - 5.0, carina[1] - 6.0), (x0 - 55.0, carina[1] + 45.0)], 6.0)
               | _polyline(x, y, [(x0 + 5.0, carina[1] - 6.0), (x0 + 55.0, carina[1] + 45.0)], 6.0))
    airway = trachea | bronchi

    tip = (x0 + rng.uniform(-1.5, 1.5), carina[1] - spec.tip_offset_mm)
    tube_pts = [(x0 + 1.0, top + 10.0), (x0 + 2.0, (top + 10.0 + tip[1]) / 2), tip]
    tube = _polyline(x, y, tube_pts, 1.5)
    tip_marker = np.hypot(x - tip[0], y - tip[1]) <= 2.5
    carina_disk = np.hypot(x - carina[0], y - carina[1]) <= 3.0

    image = np.full(x.shape, 100.0)
    image[airway] = 30.0
    image[tube] = 200.0
    image[tip_marker] = 255.0
    noise = 4.0 if spec.noise_sigma is None else spec.noise_sigma
    blur = 0.0 if spec.blur_sigma_mm is None else spec.blur_sigma_mm
    data = _finish(image[np.newaxis], spacing, blur, noise, rng, 0, 255, np.uint8)

    truth = {
        "trachea": ImageRegion(airway & ~tube & ~tip_marker, spacing),
        "carina": ImageRegion(carina_disk & ~airway & ~tube & ~tip_marker, spacing),
        "tube": ImageRegion(tube & ~tip_marker, spacing),
        "tip": ImageRegion(tip_marker, spacing),
    }
    return ImageVolume(data, spacing), truth


def make_phantom(spec: PhantomSpec | str, seed: int = 0):
    """Return ``(image, {truth_name: region})``; pure in ``(spec, seed)``."""
    if isinstance(spec, str):
        spec = PhantomSpec(spec)
    rng = np.random.default_rng(seed)
    if spec.family == "kidney_ct":
        return _kidney_ct(spec, rng)
    if spec.family == "ett_cxr":
        return _ett_cxr(spec, rng)
    raise UnknownPhantom(f"unknown phantom family {spec.family!r}; known: {FAMILIES}")
