from __future__ import annotations

from importlib import resources
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from kbvision.blackboard import init_blackboard, run
from kbvision.cli import write_phantom_case
from kbvision.imaging import PhantomSpec, make_phantom
from kbvision.knowledge import parse_network
from kbvision.segmenters import read_manifest

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.function_scoped_fixture,
                                                 HealthCheck.too_slow])
settings.load_profile("default")

KB_ROOT = Path(str(resources.files("kbvision") / "data" / "kb"))


def kb_path(name: str) -> Path:
    return KB_ROOT / name / "nodes.txt"


def write_kb(directory: Path, nodes: dict[str, str]) -> Path:
    """Write node files (name -> body lines) plus a node list; returns the list path."""
    directory.mkdir(parents=True, exist_ok=True)
    for name, body in nodes.items():
        (directory / f"{name}.txt").write_text(f"name: {name}\n{body}\n", encoding="utf-8")
    lst = directory / "nodes.txt"
    lst.write_text("".join(f"{n}.txt\n" for n in nodes), encoding="utf-8")
    return lst


def think_case(family: str, seed: int, directory: Path, kb: str, **spec_kw):
    """Write a phantom case and run its shipped knowledge base on it."""
    truths = write_phantom_case(family, seed, directory, spec_kw)
    img, truth = make_phantom(PhantomSpec(family, **spec_kw), seed)
    bb = init_blackboard(parse_network(kb_path(kb)))
    run(bb, img, external=read_manifest(directory / "externals.txt"))
    return bb, img, truth, truths


@pytest.fixture(scope="session")
def kidney_run(tmp_path_factory):
    return think_case("kidney_ct", 7, tmp_path_factory.mktemp("kidney"), "kidney")


TUNING_ARGS = ["--dims", "96", "72", "16", "--spacing", "4", "4", "7.5", "--blur", "4"]
GA_TEXT = "population {p}\ngenerations {g}\nseed {s}\nfitness dice:kidney_left:1 dice:kidney_right:1\n"


def write_tuning_set(out: Path, cases: int, seed: int = 100) -> Path:
    """Kidney tuning phantoms plus manifest; returns the manifest path."""
    from kbvision.cli import main
    assert main(["phantom", "kidney_ct", "--out", str(out), "--seed", str(seed),
                 "--cases", str(cases), *TUNING_ARGS]) == 0
    return out / "tuning.txt"


@pytest.fixture(scope="session")
def tuning_pair(tmp_path_factory):
    return write_tuning_set(tmp_path_factory.mktemp("tuning2"), 2)
