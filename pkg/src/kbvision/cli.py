"""Command line: ``think``, ``learn``, ``report`` and ``phantom``.

Exit codes: 0 success, 2 knowledge/config errors, 3 I/O or format
errors, 4 geometry mismatches.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .blackboard import dump, init_blackboard, parse_dump, run
from .errors import (
    FormatError,
    GeometryMismatch,
    KBVisionError,
    KnowledgeError,
    LengthMismatch,
    MissingExternalInput,
    UnknownPhantom,
)
from .imaging import PhantomSpec, make_phantom, read_volume, union, write_region, write_volume
from .knolo import (
    Chromosome,
    Distributor,
    decode,
    ga_run,
    history_html,
    knolo_report,
    make_job,
    read_chromosome,
    read_ga_config,
    read_history_csv,
    read_tuning_manifest,
    write_chromosome,
)
from .knolo.tuning import check_tuning_setup
from .knowledge import export_graph, extract_layout, parse_network, substitute, write_network
from .segmenters import read_manifest
from .summary import blackboard_html, overview_png, read_png

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_GEOMETRY = 0, 2, 3, 4

log = logging.getLogger("kbvision")

# phantom truth name -> knowledge-base node it grades, per family
TRUTH_NODES = {
    "kidney_ct": {"kidney_left": "kidney_left", "kidney_right": "kidney_right"},
    "ett_cxr": {"trachea": "trachea", "tube": "et_tube", "tip": "et_tip"},
}


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, GeometryMismatch):
        return EXIT_GEOMETRY
    if isinstance(exc, (KnowledgeError, LengthMismatch, UnknownPhantom, ValueError)):
        return EXIT_CONFIG
    if isinstance(exc, (FormatError, MissingExternalInput, OSError)):
        return EXIT_IO
    return EXIT_CONFIG if isinstance(exc, KBVisionError) else 1


# -- think --------------------------------------------------------------------

def think(kb: Path, image: Path, out: Path, chromosome: Path | None = None,
          external: Path | None = None, seed: int = 0) -> dict:
    sn = parse_network(kb)
    ps = None
    if chromosome is not None:
        ps = decode(read_chromosome(chromosome), extract_layout(sn))
    img = read_volume(image)
    manifest = read_manifest(external) if external is not None else {}
    bb = init_blackboard(sn, ps, rng_seed=seed)
    run(bb, img, external=manifest)

    out.mkdir(parents=True, exist_ok=True)
    suffix = ".pgm" if image.read_bytes()[:2] == b"P5" else ".mhdx"
    for name, el in bb.elements.items():
        write_region(el.region if el.region is not None else img.empty_region(), out / f"{name}{suffix}")
    text = dump(bb)
    (out / "blackboard.json").write_text(text, encoding="utf-8")
    png = overview_png(img, {n: el.region for n, el in bb.elements.items()})
    (out / "overview.png").write_bytes(png)
    (out / "summary.html").write_text(
        blackboard_html([(image.name, parse_dump(text))], {image.name: png},
                        title=f"Think: {image.name}"), encoding="utf-8")
    return parse_dump(text)


def cmd_think(args) -> int:
    result = think(args.kb, args.image, args.out, args.chromosome, args.external, args.seed)
    for name, el in sorted(result["elements"].items(), key=lambda kv: kv[1]["order"]):
        extra = f"  ({el['reason']})" if el["reason"] else ""
        print(f"{name:24s} {el['status']}{extra}")
    return EXIT_OK


# -- learn --------------------------------------------------------------------

def learn(kb: Path, manifest: Path, ga_config: Path, out: Path, workers: int = 1,
          seed: int | None = None) -> dict:
    sn = parse_network(kb)
    layout = extract_layout(sn)
    cases = read_tuning_manifest(manifest)
    cfg, terms = read_ga_config(ga_config)
    if seed is not None:
        cfg = type(cfg)(**{**cfg.__dict__, "seed": seed})
    check_tuning_setup(sn, cases, terms)
    if layout.total_bits == 0:
        raise KnowledgeError(f"{kb}: knowledge base has no tunable parameters")
    job = make_job(kb, cases, terms, seed=cfg.seed)
    baseline = job.evaluate_parameters(None)

    def progress(gen, reports):
        log.info("generation %d: best %.6f", gen, max(r.fitness for r in reports))

    with Distributor(workers) as dist:
        best, history = ga_run(layout, cfg, job, dist, on_generation=progress)

    out.mkdir(parents=True, exist_ok=True)
    write_chromosome(Chromosome(best.chromosome), out / "best.chromosome")
    params = decode(best.chromosome, layout)
    write_network(substitute(sn, params), out / "tuned_kb")
    knolo_report(history, out, layout, baseline.fitness)
    summary = {
        "best": {"chromosome": best.chromosome, "fitness": best.fitness,
                 "generation": best.generation, "metrics": best.metrics},
        "generation0_best": max(r.fitness for r in history[0]),
        "default_fitness": baseline.fitness,
        "default_metrics": baseline.metrics,
        "parameters": {g.label: params[g.path] for g in layout.genes},
        "config": cfg.__dict__,
        "fitness_terms": [t.name + f":{t.weight:g}" for t in terms],
    }
    (out / "knolo_summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n",
                                            encoding="utf-8")
    return summary


def cmd_learn(args) -> int:
    s = learn(args.kb, args.manifest, args.ga_config, args.out, args.workers, args.seed)
    print(f"default fitness {s['default_fitness']:.6f}")
    print(f"generation 0 best {s['generation0_best']:.6f}")
    print(f"best fitness {s['best']['fitness']:.6f} (generation {s['best']['generation']}) "
          f"chromosome {s['best']['chromosome']}")
    for label, value in s["parameters"].items():
        print(f"  {label} = {value:g}")
    return EXIT_OK


# -- report -------------------------------------------------------------------

def _write_or_print(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def cmd_report(args) -> int:
    if args.sub == "sn-graph":
        sn = parse_network(args.kb)
        _write_or_print(export_graph(sn, title=Path(args.kb).parent.name or "sn"), args.out)
    elif args.sub == "blackboard-summary":
        dumps, images = [], {}
        for p in args.dumps:
            p = Path(p)
            label = str(p.parent / p.stem) if p.parent != Path(".") else p.stem
            try:
                dumps.append((label, parse_dump(p.read_text(encoding="utf-8"))))
            except FormatError as e:
                raise FormatError(f"{p}: {e}") from None
            png = read_png(p.parent / "overview.png")
            if png is not None:
                images[label] = png
        _write_or_print(blackboard_html(dumps, images), args.out)
    elif args.sub == "knolo-status":
        try:
            history = read_history_csv(args.csv)
        except ValueError as e:
            raise FormatError(f"{args.csv}: {e}") from None
        layout = extract_layout(parse_network(args.kb)) if args.kb else None
        text = history_html(history, layout, args.baseline)
        _write_or_print(text, args.out)
    return EXIT_OK


# -- phantom ------------------------------------------------------------------

def write_phantom_case(family: str, seed: int, out: Path, spec_kw: dict) -> dict[str, Path]:
    """Image, truth masks and external-candidate stand-ins for one phantom."""
    img, truth = make_phantom(PhantomSpec(family, **spec_kw), seed)
    out.mkdir(parents=True, exist_ok=True)
    ext = ".pgm" if family == "ett_cxr" else ".mhdx"
    write_volume(img, out / f"image{ext}")
    paths = {}
    for name, r in truth.items():
        paths[name] = out / f"truth_{name}{ext}"
        write_region(r, paths[name])
    lines = []
    if family == "kidney_ct":
        write_region(union([truth["kidney_left"], truth["kidney_right"], truth["stray"]], img),
                     out / f"cnn{ext}")
        lines.append(f"cnn cnn{ext}")
    else:
        write_region(truth["carina"], out / f"carina_cnn{ext}")
        write_region(truth["carina"], out / f"carina_alt{ext}")
        lines += [f"carina_cnn carina_cnn{ext}", f"carina_alt carina_alt{ext}"]
    (out / "externals.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return paths


def cmd_phantom(args) -> int:
    spec_kw = {}
    if args.dims:
        spec_kw["dims"] = tuple(args.dims)
    if args.spacing:
        spec_kw["spacing"] = tuple(args.spacing)
    if args.blur is not None:
        spec_kw["blur_sigma_mm"] = args.blur
    if args.noise is not None:
        spec_kw["noise_sigma"] = args.noise
    if args.tip_offset is not None:
        spec_kw["tip_offset_mm"] = args.tip_offset
    ext = ".pgm" if args.family == "ett_cxr" else ".mhdx"
    lines = []
    for i in range(args.cases):
        case = f"case{i:02d}"
        d = args.out / case if args.cases > 1 else args.out
        truths = write_phantom_case(args.family, args.seed + i, d, spec_kw)
        rel = Path(case) if args.cases > 1 else Path(".")
        tokens = [case, str(rel / f"image{ext}")]
        for tname, node in TRUTH_NODES[args.family].items():
            tokens.append(f"{node}={rel / truths[tname].name}")
        for line in (d / "externals.txt").read_text(encoding="utf-8").split("\n"):
            if line:
                tag, p = line.split()
                tokens.append(f"@{tag}={rel / p}")
        lines.append(" ".join(tokens))
    (args.out / "tuning.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {args.cases} {args.family} case(s) to {args.out}")
    return EXIT_OK


# -- entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kbvision", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("think", help="recognise the knowledge base's objects in one image")
    t.add_argument("--kb", type=Path, required=True, help="node list file")
    t.add_argument("--image", type=Path, required=True, help="MHDX or PGM image")
    t.add_argument("--out", type=Path, required=True, help="output directory")
    t.add_argument("--chromosome", type=Path, help="bit string file with tuned parameters")
    t.add_argument("--external", type=Path, help="manifest of external candidate masks")
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=cmd_think)

    lr = sub.add_parser("learn", help="tune knowledge base parameters with a genetic algorithm")
    lr.add_argument("--kb", type=Path, required=True)
    lr.add_argument("--manifest", type=Path, required=True, help="tuning set manifest")
    lr.add_argument("--ga-config", type=Path, required=True)
    lr.add_argument("--out", type=Path, required=True)
    lr.add_argument("--workers", type=int, default=1, help="parallel evaluation processes")
    lr.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    lr.set_defaults(func=cmd_learn)

    r = sub.add_parser("report", help="report tools")
    rsub = r.add_subparsers(dest="sub", required=True)
    g = rsub.add_parser("sn-graph", help="DOT graph of a knowledge base")
    g.add_argument("--kb", type=Path, required=True)
    g.add_argument("--out", type=Path)
    b = rsub.add_parser("blackboard-summary", help="HTML over blackboard dumps")
    b.add_argument("dumps", nargs="*", type=Path)
    b.add_argument("--out", type=Path)
    k = rsub.add_parser("knolo-status", help="HTML from a KNoLO status CSV")
    k.add_argument("--csv", type=Path, required=True)
    k.add_argument("--kb", type=Path, help="decode the best chromosome against this KB")
    k.add_argument("--baseline", type=float, help="default-parameter fitness to draw")
    k.add_argument("--out", type=Path)
    r.set_defaults(func=cmd_report)

    ph = sub.add_parser("phantom", help="write synthetic test cases with ground truth")
    ph.add_argument("family", choices=sorted(TRUTH_NODES))
    ph.add_argument("--out", type=Path, required=True)
    ph.add_argument("--seed", type=int, default=0)
    ph.add_argument("--cases", type=int, default=1)
    ph.add_argument("--dims", type=int, nargs=3)
    ph.add_argument("--spacing", type=float, nargs=3)
    ph.add_argument("--blur", type=float, help="Gaussian blur sigma, mm")
    ph.add_argument("--noise", type=float, help="noise sigma, intensity units")
    ph.add_argument("--tip-offset", type=float, help="ett_cxr: tube tip height above carina, mm")
    ph.set_defaults(func=cmd_phantom)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (KBVisionError, OSError, ValueError) as e:
        print(f"kbvision: error: {e}", file=sys.stderr)
        return exit_code(e)


if __name__ == "__main__":
    sys.exit(main())
