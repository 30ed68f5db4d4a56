"""Tuning sets, GA configuration files, and the think-run fitness job.

Tuning manifest lines::

    case_id image_path truth_node=mask_path [truth_node=mask_path ...] [@tag=mask_path ...]

``@tag=path`` tokens supply per-case external candidate masks. Relative
paths resolve against the manifest's directory.

GA configuration is flat ``key value`` text; ``fitness`` lines hold one or
more terms (``dice:<node>:<weight>`` or ``presence:<node>:<metric>:<weight>``).
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, fields
from pathlib import Path

from ..blackboard import init_blackboard, run
from ..errors import ConfigError
from ..imaging import read_mask, read_volume
from ..knowledge import ParameterSet, SemanticNetwork, extract_layout, parse_network
from .encoding import Chromosome, decode
from .fitness import MetricTerm, combine_fitness, fitness_confusion, fitness_dice
from .ga import Evaluation, GAConfig


@dataclass(frozen=True)
class TuningCase:
    case_id: str
    image: str
    truths: tuple[tuple[str, str], ...] = ()
    external: tuple[tuple[str, str], ...] = ()

    @property
    def truth_map(self) -> dict[str, str]:
        return dict(self.truths)

    @property
    def external_map(self) -> dict[str, str]:
        return dict(self.external)


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def read_tuning_manifest(path: str | Path) -> list[TuningCase]:
    path = Path(path)
    base = path.parent

    def resolve(p: str) -> str:
        q = Path(p)
        return str(q if q.is_absolute() else base / q)

    cases, seen = [], set()
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        tokens = line.split()
        if len(tokens) < 2:
            raise ConfigError(f"{path}:{lineno}: expected 'case_id image_path node=mask ...'")
        case_id, image = tokens[0], resolve(tokens[1])
        if case_id in seen:
            raise ConfigError(f"{path}:{lineno}: duplicate case id {case_id!r}")
        seen.add(case_id)
        truths, external = [], []
        for tok in tokens[2:]:
            key, eq, value = tok.partition("=")
            if not eq or not key or not value or key == "@":
                raise ConfigError(f"{path}:{lineno}: expected key=path, got {tok!r}")
            if key.startswith("@"):
                external.append((key[1:], resolve(value)))
            else:
                truths.append((key, resolve(value)))
        cases.append(TuningCase(case_id, image, tuple(truths), tuple(external)))
    if not cases:
        raise ConfigError(f"{path}: tuning manifest has no cases")
    return cases


_GA_KEYS = {f.name for f in fields(GAConfig)}
_INT_KEYS = ("population", "generations", "elite_count", "tournament_size", "seed")


def parse_ga_config(text: str, name: str = "<string>") -> tuple[GAConfig, list[MetricTerm]]:
    values: dict[str, float | int] = {}
    terms: list[MetricTerm] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        key, *rest = line.split()
        if key == "fitness":
            if not rest:
                raise ConfigError(f"{name}:{lineno}: fitness needs at least one term")
            terms.extend(MetricTerm.parse(t) for t in rest)
            continue
        if key not in _GA_KEYS:
            raise ConfigError(f"{name}:{lineno}: unknown GA setting {key!r}")
        if len(rest) != 1:
            raise ConfigError(f"{name}:{lineno}: {key} takes exactly one value")
        try:
            values[key] = int(rest[0]) if key in _INT_KEYS else float(rest[0])
        except ValueError:
            raise ConfigError(f"{name}:{lineno}: bad value {rest[0]!r} for {key}") from None
    if not terms:
        raise ConfigError(f"{name}: no fitness terms configured")
    return GAConfig(**values), terms


def read_ga_config(path: str | Path) -> tuple[GAConfig, list[MetricTerm]]:
    path = Path(path)
    return parse_ga_config(path.read_text(encoding="utf-8"), str(path))


def check_tuning_setup(sn: SemanticNetwork, cases: list[TuningCase], terms: list[MetricTerm]) -> None:
    for t in terms:
        if t.node not in sn.nodes:
            raise ConfigError(f"fitness term {t.name} names unknown node {t.node!r}")
    if not any(t.node in c.truth_map for t in terms for c in cases):
        raise ConfigError("no tuning case has a truth mask for any node named in the fitness terms")


# per-process caches: jobs in one worker share parsed inputs
@functools.lru_cache(maxsize=8)
def _network(kb_path: str):
    sn = parse_network(kb_path)
    return sn, extract_layout(sn)


@functools.lru_cache(maxsize=64)
def _volume(path: str):
    return read_volume(path)


@functools.lru_cache(maxsize=256)
def _mask(path: str):
    return read_mask(path)


@dataclass(frozen=True)
class ThinkJob:
    """Fitness of one parameter set over the whole tuning set (picklable)."""

    kb_path: str
    cases: tuple[TuningCase, ...]
    terms: tuple[MetricTerm, ...]
    seed: int = 0

    def __call__(self, ch: Chromosome) -> Evaluation:
        _, layout = _network(self.kb_path)
        return self.evaluate_parameters(decode(ch, layout))

    def evaluate_parameters(self, ps: ParameterSet | None) -> Evaluation:
        """``ps=None`` evaluates the knowledge base defaults."""
        sn, _ = _network(self.kb_path)
        per_case: dict[str, dict[str, float]] = {}
        presence: dict[str, tuple[list[bool], list[bool]]] = {}
        for case in self.cases:
            img = _volume(case.image)
            bb = init_blackboard(sn, ps, rng_seed=self.seed)
            run(bb, img, external=case.external_map)
            row = per_case.setdefault(case.case_id, {})
            truths = case.truth_map
            for t in self.terms:
                if t.node not in truths:
                    continue
                ref = _mask(truths[t.node])
                found = bb.region_of(t.node)
                if t.kind == "dice":
                    pred = found if found is not None else img.empty_region()
                    row[t.name] = fitness_dice(pred, ref)
                else:
                    p, r = presence.setdefault(t.name, ([], []))
                    p.append(found is not None and not found.empty)
                    r.append(not ref.empty)
        metrics: dict[str, float | None] = {}
        for t in self.terms:
            if t.kind == "dice":
                vals = [row[t.name] for row in per_case.values() if t.name in row]
                metrics[t.name] = sum(vals) / len(vals) if vals else None
            else:
                p, r = presence.get(t.name, ([], []))
                metrics[t.name] = fitness_confusion(p, r)[t.metric] if p else None
        fitness = combine_fitness([(metrics[t.name], t.weight) for t in self.terms])
        return Evaluation(fitness, metrics, per_case)


def make_job(kb_path: str | Path, cases: list[TuningCase], terms: list[MetricTerm],
             seed: int = 0) -> ThinkJob:
    return ThinkJob(str(Path(kb_path).resolve()), tuple(cases), tuple(terms), seed)

