"""KNoLO status reports: a CSV history and a self-contained HTML page."""
from __future__ import annotations

import csv
import html
import io
from pathlib import Path

from ..knowledge import ChromosomeLayout, format_number
from .encoding import decode
from .ga import FitnessReport, best_report

BASE_COLUMNS = ("generation", "chromosome", "fitness", "error")


def metric_names(history) -> list[str]:
    names = set()
    for gen in history:
        for r in gen:
            names.update(r.metrics)
    return sorted(names)


def _cell(v) -> str:
    return "" if v is None else repr(float(v))


def history_csv(history: list[list[FitnessReport]]) -> str:
    names = metric_names(history)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow([*BASE_COLUMNS, *names])
    for gen in history:
        for r in gen:
            w.writerow([r.generation, r.chromosome, repr(float(r.fitness)), r.error or "",
                        *(_cell(r.metrics.get(n)) for n in names)])
    return buf.getvalue()


def write_history_csv(history, path: str | Path) -> None:
    Path(path).write_text(history_csv(history), encoding="utf-8", newline="")


def parse_history_csv(text: str) -> list[list[FitnessReport]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0][:4]) != BASE_COLUMNS:
        raise ValueError("not a KNoLO status CSV (bad header)")
    names = rows[0][4:]
    gens: dict[int, list[FitnessReport]] = {}
    for row in rows[1:]:
        if not row:
            continue
        g = int(row[0])
        metrics = {n: (float(v) if v != "" else None) for n, v in zip(names, row[4:])}
        gens.setdefault(g, []).append(
            FitnessReport(row[1], float(row[2]), g, metrics, {}, row[3] or None))
    return [gens[g] for g in sorted(gens)]


def read_history_csv(path: str | Path) -> list[list[FitnessReport]]:
    return parse_history_csv(Path(path).read_text(encoding="utf-8"))


def _scatter_svg(history, baseline: float | None, width=640, height=360) -> str:
    pad_l, pad_r, pad_t, pad_b = 56, 16, 16, 40
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b
    vals = [r.fitness for gen in history for r in gen]
    if baseline is not None:
        vals.append(baseline)
    lo, hi = min(vals + [0.0]), max(vals + [1.0])
    if hi <= lo:
        hi = lo + 1.0
    ng = len(history)

    def x(g):
        return pad_l + (g + 0.5) * pw / ng

    def y(v):
        return pad_t + (hi - v) / (hi - lo) * ph

    best = best_report(history)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}" role="img">',
             f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="#fafafa" stroke="#999"/>']
    for k in range(5):
        v = lo + (hi - lo) * k / 4
        parts.append(f'<text x="{pad_l - 6}" y="{y(v) + 4:.1f}" font-size="11" text-anchor="end">{v:.3f}</text>')
    for gi, gen in enumerate(history):
        g = gen[0].generation if gen else gi
        parts.append(f'<text class="gen" x="{x(gi):.1f}" y="{height - pad_b + 16}" font-size="11" '
                     f'text-anchor="middle">{g}</text>')
        gbest = max(r.fitness for r in gen) if gen else None
        for r in gen:
            is_best = r.chromosome == best.chromosome and r.fitness == best.fitness
            color = "#1a9850" if is_best else ("#2166ac" if r.fitness == gbest else "#999999")
            radius = 5 if is_best else 3
            parts.append(f'<circle class="pt" cx="{x(gi):.1f}" cy="{y(r.fitness):.1f}" r="{radius}" '
                         f'fill="{color}" fill-opacity="0.7"><title>{html.escape(r.chromosome)}: '
                         f'{r.fitness:.4f}</title></circle>')
    if baseline is not None:
        parts.append(f'<line x1="{pad_l}" x2="{pad_l + pw}" y1="{y(baseline):.1f}" y2="{y(baseline):.1f}" '
                     f'stroke="#d73027" stroke-dasharray="6 4"/>')
        parts.append(f'<text x="{pad_l + pw - 4}" y="{y(baseline) - 4:.1f}" font-size="11" '
                     f'text-anchor="end" fill="#d73027">default {baseline:.4f}</text>')
    parts.append(f'<text x="{pad_l + pw / 2}" y="{height - 6}" font-size="12" text-anchor="middle">generation</text>')
    parts.append(f'<text x="14" y="{pad_t + ph / 2}" font-size="12" text-anchor="middle" '
                 f'transform="rotate(-90 14 {pad_t + ph / 2})">fitness</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def history_html(history: list[list[FitnessReport]], layout: ChromosomeLayout | None = None,
                 baseline: float | None = None, title: str = "KNoLO status") -> str:
    if not history or not any(history):
        raise ValueError("empty history")
    best = best_report(history)
    rows = []
    for gen in history:
        fs = [r.fitness for r in gen]
        rows.append(f"<tr><td>{gen[0].generation}</td><td>{len(gen)}</td>"
                    f"<td>{max(fs):.6f}</td><td>{sum(fs) / len(fs):.6f}</td></tr>")
    params = ""
    if layout is not None and len(best.chromosome) == layout.total_bits:
        values = decode(best.chromosome, layout)
        prow = []
        for g in layout.genes:
            bits = best.chromosome[g.bit_start:g.bit_end + 1]
            prow.append(f"<tr><td>{html.escape(g.label)}</td><td><code>{bits}</code></td>"
                        f"<td>{format_number(values[g.path])}</td><td>{format_number(g.default)}</td></tr>")
        params = ("<h2>Best parameter set</h2><table><tr><th>gene</th><th>bits</th><th>value</th>"
                  "<th>default</th></tr>" + "".join(prow) + "</table>")
    metrics = "".join(f"<li>{html.escape(k)}: {v:.6f}</li>" for k, v in sorted(best.metrics.items())
                      if v is not None)
    base = f"<p>Default parameters: fitness {baseline:.6f}</p>" if baseline is not None else ""
    return f"""<!DOCTYPE html>
<html><head><meta charset="utf-8"><title>{html.escape(title)}</title>
<style>body{{font-family:sans-serif;margin:2em}}table{{border-collapse:collapse}}
td,th{{border:1px solid #ccc;padding:2px 8px;text-align:right}}</style></head>
<body><h1>{html.escape(title)}</h1>
<p>Best fitness {best.fitness:.6f} (generation {best.generation}), chromosome <code>{best.chromosome}</code></p>
{base}<ul>{metrics}</ul>
{_scatter_svg(history, baseline)}
<h2>Generations</h2><table><tr><th>generation</th><th>chromosomes</th><th>best</th><th>mean</th></tr>
{''.join(rows)}</table>
{params}
</body></html>
"""


def knolo_report(history, out_dir: str | Path, layout: ChromosomeLayout | None = None,
                 baseline: float | None = None) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path, html_path = out_dir / "knolo_status.csv", out_dir / "knolo_status.html"
    write_history_csv(history, csv_path)
    html_path.write_text(history_html(history, layout, baseline), encoding="utf-8")
    return csv_path, html_path
