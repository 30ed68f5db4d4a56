from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from conftest import GA_TEXT, kb_path
from jobs import Affine, DieHard, one_max
from kbvision.errors import AllMetricsAbsent, ConfigError, FormatError, GeometryMismatch, LengthMismatch
from kbvision.imaging import ImageRegion
from kbvision.knolo import (
    Chromosome,
    Distributor,
    Evaluation,
    FitnessReport,
    GAConfig,
    MetricTerm,
    best_report,
    combine_fitness,
    decode,
    decode_gene,
    distribute,
    encode_nearest,
    fitness_confusion,
    fitness_dice,
    fitness_distance,
    ga_run,
    history_csv,
    history_html,
    knolo_report,
    make_job,
    parse_ga_config,
    parse_history_csv,
    read_chromosome,
    read_tuning_manifest,
    write_chromosome,
)
from kbvision.knolo.tuning import check_tuning_setup
from kbvision.knowledge import default_parameters, extract_layout, parse_network


@pytest.fixture(scope="module")
def pool():
    with Distributor(4) as d:
        yield d


# -- encoding ------------------------------------------------------------------------

@pytest.mark.parametrize("bits, value", [("00", -5.0), ("01", -4.0), ("10", -3.0), ("11", -2.0)])
def test_learning_rate_gene_table(bits, value):
    assert decode_gene(bits, -5, -2) == value


def test_three_bit_gene_exhaustive():
    for i, bits in enumerate("".join(p) for p in itertools.product("01", repeat=3)):
        assert decode_gene(bits, 0, 7) == float(i)


def test_decode_all_ones_and_zeros():
    sn = parse_network(kb_path("kidney_tuning"))
    layout = extract_layout(sn)
    hi = decode(Chromosome.ones(layout.total_bits), layout)
    lo = decode("0" * layout.total_bits, layout)
    for g in layout.genes:
        assert hi[g.path] == g.upper and lo[g.path] == g.lower
    with pytest.raises(LengthMismatch):
        decode("0" * (layout.total_bits + 1), layout)


@given(st.integers(1, 12), st.floats(-1e3, 1e3), st.floats(0.001, 1e3), st.data())
def test_decode_monotone_and_bounded(n, lower, span, data):
    upper = lower + span
    i = data.draw(st.integers(0, 2 ** n - 2))
    a = decode_gene(format(i, f"0{n}b"), lower, upper)
    b = decode_gene(format(i + 1, f"0{n}b"), lower, upper)
    assert lower <= a < b <= upper


def test_encode_nearest_round_trip():
    layout = extract_layout(parse_network(kb_path("kidney_tuning")))
    ch = Chromosome("0110000000110")
    assert encode_nearest(decode(ch, layout), layout) == ch
    defaults = default_parameters(parse_network(kb_path("kidney_tuning")))
    assert len(encode_nearest(defaults, layout).bits) == layout.total_bits


def test_chromosome_files(tmp_path):
    write_chromosome(Chromosome("0101"), tmp_path / "c.txt")
    assert read_chromosome(tmp_path / "c.txt").bits == "0101"
    (tmp_path / "bad.txt").write_text("01x1\n")
    with pytest.raises(FormatError):
        read_chromosome(tmp_path / "bad.txt")
    assert Chromosome.from_array(np.array([1, 0, 1])).to_array().tolist() == [1, 0, 1]


# -- fitness -------------------------------------------------------------------------

def _r(mask):
    return ImageRegion(np.asarray(mask, bool).reshape(1, 1, -1), (1, 1, 1))


def test_dice_examples():
    a = _r([1, 1, 0, 0])
    assert fitness_dice(a, a) == 1.0
    assert fitness_dice(a, _r([0, 0, 1, 1])) == 0.0
    assert fitness_dice(a, _r([0, 1, 1, 0])) == 0.5
    assert fitness_dice(_r([0, 0]), _r([0, 0])) == 1.0
    with pytest.raises(GeometryMismatch):
        fitness_dice(a, _r([1, 0]))


@given(hnp.arrays(bool, 12), hnp.arrays(bool, 12))
def test_dice_symmetry_identity_range(a, b):
    ra, rb = _r(a), _r(b)
    assert fitness_dice(ra, rb) == fitness_dice(rb, ra)
    assert 0.0 <= fitness_dice(ra, rb) <= 1.0
    assert fitness_dice(ra, ra) == 1.0


def test_confusion_examples():
    assert set(fitness_confusion([1, 0, 1], [1, 0, 1]).values()) == {1.0}
    m = fitness_confusion([0, 0, 0, 0], [1, 1, 0, 0])
    assert m["sensitivity"] == 0.0 and m["specificity"] == 1.0 and m["precision"] is None
    pred = [1, 1, 1, 0] + [0] * 6
    ref = [1, 1, 0, 1] + [0] * 6
    m = fitness_confusion(pred, ref)
    assert m["precision"] == pytest.approx(2 / 3) and m["recall"] == pytest.approx(2 / 3)
    assert m["specificity"] == pytest.approx(6 / 7) and m["accuracy"] == pytest.approx(0.8)
    with pytest.raises(LengthMismatch):
        fitness_confusion([1], [1, 0])


def test_distance_examples():
    assert fitness_distance([(1, 2, 3)], [(1, 2, 3)]) == 0.0
    assert fitness_distance([(0, 0, 0)], [(3, 0, 0)]) == 9.0
    rng = np.random.default_rng(5)
    a, b = rng.normal(size=(20, 3)), rng.normal(size=(20, 3))
    brute = sum(sum((x - y) ** 2 for x, y in zip(p, q)) for p, q in zip(a.tolist(), b.tolist())) / 20
    assert fitness_distance(a, b) == pytest.approx(brute, abs=1e-9)
    with pytest.raises(LengthMismatch):
        fitness_distance([(0, 0)], [])


def test_combine_fitness():
    assert combine_fitness([(0.7, 1.0)]) == 0.7
    assert combine_fitness([(0.9, 1), (0.8, 1), (0.7, 1)]) == pytest.approx(0.8)
    assert combine_fitness([(0.5, 1), (None, 3), (math.nan, 2)]) == 0.5
    with pytest.raises(AllMetricsAbsent):
        combine_fitness([(None, 1)])


def test_metric_term_parsing():
    assert MetricTerm.parse("dice:kidney_left:0.5") == MetricTerm("dice", "kidney_left", 0.5)
    t = MetricTerm.parse("presence:et_tube_alert:specificity:2")
    assert (t.kind, t.metric, t.weight, t.name) == ("presence", "specificity", 2.0,
                                                     "presence:et_tube_alert:specificity")
    for bad in ("dice:x", "jaccard:x:1", "presence:x:f1:1", "dice:x:heavy"):
        with pytest.raises(ConfigError):
            MetricTerm.parse(bad)


# -- GA --------------------------------------------------------------------------------

def test_ga_config_validation():
    for kw in ({"population": 1}, {"elite_count": 30}, {"generations": 0}, {"crossover_rate": 2},
               {"tournament_size": 1}, {"mutation_rate": -0.1}):
        with pytest.raises(ConfigError):
            GAConfig(**kw)


@pytest.mark.parametrize("seed", range(3))
def test_ga_determinism_and_elitism(seed):
    cfg = GAConfig(population=20, generations=8, seed=seed)
    best_a, hist_a = ga_run(16, cfg, one_max)
    best_b, hist_b = ga_run(16, cfg, one_max)
    assert hist_a == hist_b and best_a == best_b
    bests = [max(r.fitness for r in gen) for gen in hist_a]
    assert bests == sorted(bests)
    assert all(len(g) == 20 for g in hist_a) and len(hist_a) == 8
    assert [g[0].generation for g in hist_a] == list(range(8))


def test_ga_population_zero_generation_draws():
    cfg = GAConfig(population=6, generations=1, seed=4)
    _, hist = ga_run(5, cfg, one_max)
    rng = np.random.default_rng(4)
    expected = ["".join(map(str, row)) for row in rng.integers(0, 2, (6, 5), dtype=np.uint8)]
    assert [r.chromosome for r in hist[0]] == expected


def test_ga_failed_evaluation_scores_zero():
    def flaky(ch):
        if ch.bits.startswith("1"):
            raise RuntimeError("boom")
        return 1.0

    _, hist = ga_run(4, GAConfig(population=8, generations=2), flaky)
    for r in (r for g in hist for r in g):
        if r.chromosome.startswith("1"):
            assert r.fitness == 0.0 and "boom" in r.error
        else:
            assert r.fitness == 1.0 and r.error is None


def test_ga_caches_evaluations():
    seen = []

    def counting(ch):
        seen.append(ch.bits)
        return one_max(ch)

    _, hist = ga_run(6, GAConfig(population=20, generations=5), counting)
    assert len(seen) == len(set(seen)) == len({r.chromosome for g in hist for r in g})


def test_ga_empty_layout():
    with pytest.raises(ConfigError):
        ga_run(0, GAConfig(), one_max)


def test_best_report_earliest_tie():
    h = [[FitnessReport("00", 0.5, 0), FitnessReport("01", 0.9, 0)],
         [FitnessReport("01", 0.9, 1), FitnessReport("10", 0.8, 1)]]
    assert best_report(h) == h[0][1]


# -- distributor -----------------------------------------------------------------------

def test_distributor_sequential_equals_parallel(pool):
    jobs = [Affine(i, 3) for i in range(30)]
    seq = distribute(jobs, 1)
    assert [r.value for r in seq] == [3 * i + 1 for i in range(30)]
    assert pool.map(jobs) == seq
    assert distribute([], 4) == [] and pool.map([]) == []


@settings(max_examples=15)
@given(st.lists(st.tuples(st.integers(-50, 50), st.integers(-50, 50), st.booleans()), max_size=25))
def test_distributor_random_job_sets(pool, specs):
    jobs = [Affine(a, b, fail) for a, b, fail in specs]
    assert pool.map(jobs) == Distributor(1).map(jobs)


def test_distributor_fault_injection(pool):
    jobs = [Affine(i, 2, fail=(i == 3)) for i in range(8)]
    res = pool.map(jobs)
    assert not res[3].ok and "job 3 failed" in res[3].error
    assert all(r.ok and r.value == 2 * i + 1 for i, r in enumerate(res) if i != 3)


def test_distributor_recovers_from_dead_worker(pool):
    res = pool.map([DieHard()])
    assert not res[0].ok
    assert [r.value for r in pool.map([Affine(2, 2)])] == [5]


def test_distributor_unpicklable_job(pool):
    res = pool.map([lambda: 1, Affine(1, 1)])
    assert not res[0].ok and res[1].value == 2


def test_ga_parallel_equals_sequential(pool):
    cfg = GAConfig(population=12, generations=4, seed=9)
    assert ga_run(10, cfg, one_max, pool) == ga_run(10, cfg, one_max)


# -- reports ---------------------------------------------------------------------------

def _history(gens=3, pop=5):
    rng = np.random.default_rng(1)
    return [[FitnessReport(format(int(rng.integers(0, 64)), "06b"), float(rng.random()), g,
                           {"dice:a": float(rng.random()), "dice:b": None})
             for _ in range(pop)] for g in range(gens)]


def test_history_csv_round_trip():
    h = _history()
    text = history_csv(h)
    assert text.splitlines()[0] == "generation,chromosome,fitness,error,dice:a,dice:b"
    assert len(text.splitlines()) == 1 + 15
    back = parse_history_csv(text)
    assert [[(r.chromosome, r.fitness, r.generation) for r in g] for g in back] == \
           [[(r.chromosome, r.fitness, r.generation) for r in g] for g in h]
    assert history_csv(back) == text


def test_history_html_points(tmp_path):
    h = _history(gens=10, pop=30)
    page = history_html(h, baseline=0.4)
    assert page.count('class="pt"') == 300
    assert page.count('fill="#1a9850"') == sum(r == best_report(h) for g in h for r in g)
    assert "stroke-dasharray" in page
    one = history_html(_history(gens=1))
    assert one.count('class="gen"') == 1
    with pytest.raises(ValueError):
        history_html([])
    csv_path, html_path = knolo_report(h, tmp_path)
    assert csv_path.is_file() and html_path.read_text() == history_html(h)


# -- tuning inputs ----------------------------------------------------------------------

def test_tuning_manifest(tmp_path):
    (tmp_path / "m.txt").write_text("# cases\nc0 img.mhdx kidney_left=l.mhdx @cnn=cnn.mhdx\n\n"
                                    "c1 /abs/img.mhdx\n")
    cases = read_tuning_manifest(tmp_path / "m.txt")
    assert [c.case_id for c in cases] == ["c0", "c1"]
    assert cases[0].truth_map == {"kidney_left": str(tmp_path / "l.mhdx")}
    assert cases[0].external_map == {"cnn": str(tmp_path / "cnn.mhdx")}
    assert cases[1].image == "/abs/img.mhdx"


@pytest.mark.parametrize("text", ["", "# only comments\n", "c0\n", "c0 a.mhdx x\n",
                                  "c0 a.mhdx\nc0 b.mhdx\n"])
def test_tuning_manifest_errors(tmp_path, text):
    (tmp_path / "m.txt").write_text(text)
    with pytest.raises(ConfigError):
        read_tuning_manifest(tmp_path / "m.txt")


def test_ga_config_parsing():
    cfg, terms = parse_ga_config(GA_TEXT.format(p=12, g=3, s=5) + "mutation_rate 0.05\n")
    assert (cfg.population, cfg.generations, cfg.seed, cfg.mutation_rate) == (12, 3, 5, 0.05)
    assert [t.node for t in terms] == ["kidney_left", "kidney_right"]
    for bad in ("population 10\n", "fitness dice:a:1\nelitism 2\n", "fitness dice:a:1\npopulation x\n",
                "fitness dice:a:1\npopulation 3 4\n"):
        with pytest.raises(ConfigError):
            parse_ga_config(bad)


def test_tuning_setup_checks(tuning_pair):
    sn = parse_network(kb_path("kidney_tuning"))
    cases = read_tuning_manifest(tuning_pair)
    check_tuning_setup(sn, cases, [MetricTerm.parse("dice:kidney_left:1")])
    with pytest.raises(ConfigError):
        check_tuning_setup(sn, cases, [MetricTerm.parse("dice:liver:1")])
    with pytest.raises(ConfigError):
        check_tuning_setup(sn, cases, [MetricTerm.parse("dice:spine:1")])


def test_think_job(tuning_pair):
    cases = read_tuning_manifest(tuning_pair)
    terms = [MetricTerm.parse("dice:kidney_left:1"), MetricTerm.parse("dice:kidney_right:1"),
             MetricTerm.parse("presence:kidney_left:sensitivity:1")]
    job = make_job(kb_path("kidney_tuning"), cases, terms)
    good = job(Chromosome("0110000000110"))
    assert isinstance(good, Evaluation) and good.fitness > 0.95
    assert set(good.per_case) == {"case00", "case01"}
    assert good.metrics["presence:kidney_left:sensitivity"] == 1.0
    default = job.evaluate_parameters(None)
    assert default.fitness < good.fitness
    assert job(Chromosome("0110000000110")) == good
