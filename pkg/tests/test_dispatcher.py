import pytest
from hypothesis import given, strategies as st

from domaincrawl.analyzer import LinkSet
from domaincrawl.dispatcher import (
    CLASSIFIED,
    DISCOVERED,
    ENQUEUED,
    FAILED,
    FETCHED,
    PREDICTED,
    SEED,
    Dispatcher,
    PendingBatch,
    UrlDatabase,
    UrlDbEntry,
    filter_new,
    flush_batch,
    predict_domain,
    process_links,
    url_tokens,
)
from domaincrawl.frontier import DomainProfile, build_frontier, with_unclassified
from domaincrawl.urls import canonicalize

PROFILES = with_unclassified([
    DomainProfile("news", ("election", "vote"), ("http://n.com/",)),
    DomainProfile("sports", ("football", "score"), ("http://s.com/",)),
])


@pytest.fixture
def env():
    frontier = build_frontier(PROFILES)
    db = UrlDatabase()
    for p in PROFILES:
        for s in p.seeds:
            db.add_seed(s, p.name)
    return frontier, db


def links(base, *hrefs):
    return LinkSet(canonicalize(base), list(hrefs))


def test_relative_link_discovered(env):
    frontier, db = env
    out = process_links(links("http://a.com/x/", "y.html"), "news", db, frontier, PROFILES)
    assert [e.key for e in out] == ["http://a.com/x/y.html"]
    assert out[0].state == DISCOVERED and out[0].provenance == PREDICTED


def test_malformed_dropped(env):
    frontier, db = env
    d = Dispatcher(frontier, db, PROFILES)
    assert d.process_links(links("http://a.com/", "javascript:void(0)"), "news") == []
    assert d.stats.malformed == 1


def test_known_url_bumps_inlink(env):
    frontier, db = env
    d = Dispatcher(frontier, db, PROFILES)
    d.process_links(links("http://a.com/", "http://n.com/"), "news")
    assert frontier.entry("http://n.com/").inlink_count == 1
    d.process_links(links("http://a.com/", "/z"), "news")
    d.process_links(links("http://b.com/", "http://a.com/z"), "news")
    assert db.get("http://a.com/z").inlink_count == 2


def test_predict_rules(env):
    frontier, db = env
    news_url = canonicalize("http://x.com/opaque")
    db.check_and_record(UrlDbEntry(news_url, "news", CLASSIFIED, DISCOVERED))
    assert predict_domain(news_url, "sports", db, PROFILES) == "news"
    assert predict_domain(canonicalize("http://a.com/football/today.html"), "news", db, PROFILES) == "sports"
    assert predict_domain(canonicalize("http://a.com/q1"), "sports", db, PROFILES) == "sports"
    assert url_tokens(canonicalize("http://www.vote-2020.com/a_b/c.html")) == [
        "www", "vote", "com", "a", "b", "c", "html"]


def test_filter_new(env):
    frontier, db = env
    u = canonicalize("http://a.com/1")
    twice = [UrlDbEntry(u, "news", PREDICTED, DISCOVERED), UrlDbEntry(u, "news", PREDICTED, DISCOVERED)]
    assert len(filter_new(twice, db, frontier)) == 1
    seed = UrlDbEntry(canonicalize("http://n.com/"), "news", PREDICTED, DISCOVERED)
    assert filter_new([seed], db, frontier) == []
    many = [UrlDbEntry(canonicalize(f"http://b.com/{i}"), "news", PREDICTED, DISCOVERED) for i in range(100)]
    assert len(filter_new(many, db, frontier)) == 100


def test_batch_130_with_b64(env):
    frontier, db = env
    d = Dispatcher(frontier, db, PROFILES, batch_size=64)
    d.process_links(links("http://a.com/", *[f"/{i}" for i in range(130)]), "news")
    assert [r.flushed for r in d.flush_log] == [64, 64]
    assert len(d.batch) == 2
    d.end_cycle()
    assert [r.flushed for r in d.flush_log] == [64, 64, 2]
    assert d.stats.flush_events == 3
    assert db.get("http://a.com/0").state == ENQUEUED
    assert frontier.entry("http://a.com/0").score == 1


def test_batch_size_one_flushes_each(env):
    frontier, db = env
    d = Dispatcher(frontier, db, PROFILES, batch_size=1)
    d.process_links(links("http://a.com/", "/1", "/2", "/3"), "news")
    assert d.stats.flush_events == 3 and len(d.batch) == 0


def test_empty_flush(env):
    frontier, db = env
    before = frontier.pending()
    report = flush_batch(PendingBatch(64), frontier, db)
    assert (report.flushed, report.rejected_duplicate) == (0, 0)
    assert frontier.pending() == before
    d = Dispatcher(frontier, db, PROFILES)
    d.end_cycle()
    assert d.stats.flush_events == 0


def test_state_transitions(env):
    _, db = env
    u = canonicalize("http://a.com/1")
    db.check_and_record(UrlDbEntry(u, "news", PREDICTED, DISCOVERED))
    with pytest.raises(ValueError):
        db.set_state(u, FETCHED)
    db.set_state(u, ENQUEUED)
    db.set_state(u, FAILED)
    with pytest.raises(ValueError):
        db.set_state(u, ENQUEUED)


def test_seed_tag_is_kept(env):
    _, db = env
    entry = db.tag("http://n.com/", "sports")
    assert (entry.domain, entry.provenance) == ("news", SEED)


def test_journal_replay(tmp_path, env):
    frontier, _ = env
    path = tmp_path / "urldb.jsonl"
    db = UrlDatabase(path)
    db.add_seed(canonicalize("http://n.com/"), "news")
    d = Dispatcher(frontier, db, PROFILES, batch_size=2)
    d.process_links(links("http://a.com/", "/vote", "/3", "/4"), "sports")
    d.end_cycle()
    db.set_state("http://a.com/vote", FETCHED)
    db.tag("http://a.com/vote", "sports")
    again = UrlDatabase.load(path)
    assert {k: (e.domain, e.provenance, e.state) for k, e in again.entries.items()} == {
        k: (e.domain, e.provenance, e.state) for k, e in db.entries.items()}


@given(st.lists(st.integers(0, 40), max_size=150), st.integers(1, 70))
def test_dispatch_invariants(targets, batch_size):
    frontier = build_frontier(PROFILES)
    db = UrlDatabase()
    d = Dispatcher(frontier, db, PROFILES, batch_size=batch_size)
    d.process_links(links("http://a.com/", *[f"/{t}" for t in targets]), "news")
    d.end_cycle()
    distinct = len(set(targets))
    assert d.stats.discovered == distinct
    assert sum(r.flushed for r in d.flush_log) == distinct
    assert d.stats.flush_events == -(-distinct // batch_size)
    assert frontier.pending() == distinct + 2
