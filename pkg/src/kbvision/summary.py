"""Static HTML summaries of blackboard dumps and a PNG overview image."""
from __future__ import annotations

import base64
import html
import io
from pathlib import Path

import numpy as np
from PIL import Image

from .imaging import ImageRegion, ImageVolume

# distinct overlay colours, cycled over found objects
PALETTE = [(230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200), (245, 130, 48),
           (145, 30, 180), (70, 240, 240), (240, 50, 230), (210, 245, 60), (250, 190, 212)]


def _window(slice2d: np.ndarray) -> np.ndarray:
    lo, hi = np.percentile(slice2d, [1, 99])
    if hi <= lo:
        return np.zeros(slice2d.shape, np.uint8)
    return (np.clip((slice2d - lo) / (hi - lo), 0, 1) * 255).astype(np.uint8)


def _outline(mask2d: np.ndarray) -> np.ndarray:
    inner = mask2d.copy()
    inner[1:, :] &= mask2d[:-1, :]
    inner[:-1, :] &= mask2d[1:, :]
    inner[:, 1:] &= mask2d[:, :-1]
    inner[:, :-1] &= mask2d[:, 1:]
    return mask2d & ~inner


def overview_png(img: ImageVolume, regions: dict[str, ImageRegion]) -> bytes:
    """Axial slice with the most found voxels, found objects outlined."""
    found = {n: r for n, r in regions.items() if r is not None and not r.empty}
    if found:
        per_slice = sum(r.mask.sum(axis=(1, 2)) for r in found.values())
        z = int(np.argmax(per_slice))
    else:
        z = img.shape[0] // 2
    gray = _window(img.data[z].astype(np.float64))
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    for i, (_, r) in enumerate(found.items()):
        rgb[_outline(r.mask[z])] = PALETTE[i % len(PALETTE)]
    pil = Image.fromarray(rgb, "RGB")
    # upscale small grids and honour anisotropic pixels
    sx, sy, _ = img.spacing
    scale = max(1.0, 384 / max(img.dims[0] * sx, img.dims[1] * sy))
    size = (max(1, round(img.dims[0] * sx * scale)), max(1, round(img.dims[1] * sy * scale)))
    pil = pil.resize(size, Image.NEAREST)
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()


def legend(names: list[str]) -> list[tuple[str, str]]:
    return [(n, "#%02x%02x%02x" % PALETTE[i % len(PALETTE)]) for i, n in enumerate(names)]


def _status_rows(dump: dict) -> str:
    rows = []
    for name, el in sorted(dump["elements"].items(), key=lambda kv: kv[1]["order"]):
        cands = el["candidates"]
        elim = [f"#{c['index']}: {', '.join(c['eliminated_by'])}" for c in cands if c["eliminated_by"]]
        sel = el["selected"]
        voxels = cands[sel]["voxels"] if sel is not None else ""
        rows.append(
            f"<tr class=\"{el['status']}\"><td>{html.escape(name)}</td><td>{el['status']}</td>"
            f"<td>{len(cands)}</td><td>{'' if sel is None else sel}</td><td>{voxels}</td>"
            f"<td>{html.escape('; '.join(elim))}</td><td>{html.escape(el['reason'] or '')}</td></tr>")
    return "".join(rows)


_STYLE = """body{font-family:sans-serif;margin:2em}table{border-collapse:collapse;margin-bottom:1em}
td,th{border:1px solid #ccc;padding:2px 8px}tr.empty td{background:#fde0dc}
tr.done td:nth-child(2){color:#1a7f37}img{image-rendering:pixelated;border:1px solid #999}"""


def blackboard_html(dumps: list[tuple[str, dict]], images: dict[str, bytes] | None = None,
                    title: str = "Blackboard summary") -> str:
    """One page over any number of dumps; ``images`` maps dump label to PNG."""
    images = images or {}
    head = ("<tr><th>node</th><th>status</th><th>candidates</th><th>selected</th>"
            "<th>voxels</th><th>eliminations</th><th>reason</th></tr>")
    overview = ["<tr><th>run</th><th>found</th><th>not found</th></tr>"]
    sections = []
    for label, dump in dumps:
        els = dump["elements"]
        done = sum(e["status"] == "done" for e in els.values())
        overview.append(f"<tr><td><a href=\"#{html.escape(label)}\">{html.escape(label)}</a></td>"
                        f"<td>{done}</td><td>{len(els) - done}</td></tr>")
        img = ""
        if label in images:
            b64 = base64.b64encode(images[label]).decode("ascii")
            img = f'<p><img alt="overview of {html.escape(label)}" src="data:image/png;base64,{b64}"></p>'
        sections.append(f"<h2 id=\"{html.escape(label)}\">{html.escape(label)}</h2>{img}"
                        f"<table>{head}{_status_rows(dump)}</table>"
                        f"<p>{len(dump['activation_log'])} agent activations</p>")
    return (f"<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>{html.escape(title)}</title>"
            f"<style>{_STYLE}</style></head><body><h1>{html.escape(title)}</h1>"
            f"<table>{''.join(overview)}</table>{''.join(sections)}</body></html>\n")


def read_png(path: str | Path) -> bytes | None:
    path = Path(path)
    return path.read_bytes() if path.is_file() else None
