"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line, repeated in the
terminal summary.
"""
import json
import math
import random

import pytest

from conftest import ACCEPTANCE_LINES
from domaincrawl.cli import main
from domaincrawl.config import config_for_web
from domaincrawl.engine import CrawlEngine
from domaincrawl.errors import MalformedUrl
from domaincrawl.fetcher import digest_of
from domaincrawl.frontier import ADMITTED, DomainProfile, GlobalFrontier
from domaincrawl.simweb import GraphParams, generate
from domaincrawl.urls import canonicalize, resolve, resolve_reference

from rfc3986_cases import ALL, BASE

BASE_PARAMS = dict(pages_per_domain=100, intra_links=3, cross_links=1, rng_seed=42)


def report(number, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {number} {name}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def crawl(web, **overrides):
    engine = CrawlEngine(config_for_web(web, **overrides), web=web)
    return engine, engine.run()


@pytest.fixture(scope="module")
def base_web():
    return generate(GraphParams(**BASE_PARAMS))


@pytest.fixture(scope="module")
def base_run(base_web):
    return crawl(base_web, workers=4)


def test_1_zero_url_overlap(base_run):
    engine, rep = base_run
    counts = set(engine.backend.fetch_counts.values())
    ok = rep.url_overlap == 0 and counts <= {1} and rep.stop_reason == "exhausted"
    report(1, "zero URL overlap", ok,
           f"url_overlap={rep.url_overlap} fetch counts={sorted(counts)} stop={rep.stop_reason}")


def test_2_content_duplication():
    web = generate(GraphParams(**BASE_PARAMS, alias_fraction=0.2))
    engine, rep = crawl(web, workers=4)
    fetched = {u for u, n in engine.backend.fetch_counts.items() if n}
    alias_fetched = len(fetched & set(web.aliases))
    bodies = [r.body for r in engine.repo.records.values()]
    no_byte_dupes = len(set(bodies)) == len(bodies)
    digests_ok = all(digest_of(r.body) == d for d, r in engine.repo.records.items())
    ok = (rep.stored_bodies == 400 and rep.content_duplicates == alias_fetched
          and no_byte_dupes and digests_ok and alias_fetched > 0)
    report(2, "content duplication", ok,
           f"stored={rep.stored_bodies} duplicates={rep.content_duplicates} aliases_fetched={alias_fetched}")


def test_3_frontier_ordering():
    rng = random.Random(20240601)
    failures = 0
    for trial in range(100):
        frontier = GlobalFrontier()
        frontier.create_pool(DomainProfile("d", ("k",)))
        log = []
        for i in range(1000):
            url = canonicalize(f"http://t{trial}.test/{i}")
            score = rng.randint(0, 9)
            assert frontier.enqueue("d", url, score) == ADMITTED
            log.append((url, score))
        oracle = [u for u, _ in sorted(log, key=lambda item: -item[1])]
        drained = [frontier.dequeue("d").url for _ in range(1000)]
        failures += drained != oracle or frontier.dequeue("d") is not None
    report(3, "frontier ordering", failures == 0, f"100 trials x 1000 inserts, mismatching trials={failures}")


def _canonical_or_error(expected):
    try:
        return canonicalize(expected)
    except MalformedUrl:
        return MalformedUrl


def test_4_rfc_resolution():
    base = canonicalize(BASE)
    verbatim_bad = [ref for ref, exp in ALL if resolve_reference(BASE, ref) != exp]
    canon_bad = []
    for ref, exp in ALL:
        want = _canonical_or_error(exp)
        try:
            got = resolve(base, ref)
        except MalformedUrl:
            got = MalformedUrl
        if got != want:
            canon_bad.append(ref)
    ok = not verbatim_bad and not canon_bad
    report(4, "RFC 3986 resolution", ok,
           f"{len(ALL)} examples, verbatim mismatches={verbatim_bad}, canonical mismatches={canon_bad}")


def test_5_classifier_ground_truth():
    web = generate(GraphParams(**BASE_PARAMS, keyword_freq=3, noise_ratio=0.5))
    _, rep = crawl(web)
    ok = rep.misclassified == 0 and rep.pages_ok == 400
    report(5, "classifier ground truth", ok, f"misclassified={rep.misclassified} of {rep.pages_ok}")


def test_6_near_linear_scaling():
    web = generate(GraphParams(pages_per_domain=250, intra_links=3, cross_links=0, rng_seed=7))
    _, one = crawl(web, workers=1)
    _, four = crawl(web, workers=4)
    bound = one.rounds / 4 * 1.10
    ok = four.rounds <= bound and one.coverage == four.coverage == 1.0
    report(6, "near-linear scaling", ok,
           f"rounds W=1: {one.rounds}, W=4: {four.rounds}, bound {bound:.1f}")


def test_7_failure_rebalancing(base_web, base_run):
    _, baseline = base_run
    _, rep = crawl(base_web, workers=4, kill_worker=(2, 5))
    ok = (rep.stop_reason == "exhausted" and rep.coverage == baseline.coverage == 1.0
          and rep.post_rebalance_spread is not None and rep.post_rebalance_spread <= 1
          and rep.dead_workers == [2])
    report(7, "failure rebalancing", ok,
           f"coverage={rep.coverage} (no-kill {baseline.coverage}) spread={rep.post_rebalance_spread}")


def test_8_batching_economy(base_web):
    _, rep = crawl(base_web, workers=4, batch_size=64)
    bound = math.ceil(rep.total_discoveries / 64) + rep.rounds
    ok = rep.flush_events <= bound
    report(8, "batching economy", ok,
           f"flush_events={rep.flush_events} bound={bound} "
           f"(discoveries={rep.total_discoveries}, rounds={rep.rounds})")


def test_9_determinism(capsys):
    params = json.dumps({**BASE_PARAMS, "domains": 4, "alias_fraction": 0.2})
    outputs = []
    for _ in range(2):
        assert main(["simulate", "--graph-params", params, "--workers", "4"]) == 0
        data = json.loads(capsys.readouterr().out)
        data.pop("wall_time_s")
        outputs.append(json.dumps(data, sort_keys=True))
    ok = outputs[0] == outputs[1]
    report(9, "determinism", ok, f"two simulate runs, identical report JSON={ok}")
