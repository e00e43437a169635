"""URL database and the dispatcher feeding discovered links to the frontier.

Discovered hrefs are resolved, given a predicted domain, filtered against
everything already known and buffered in a pending batch.  The batch is
flushed into the frontier when it reaches ``batch_size`` and at the end of
every crawl cycle.
"""
from __future__ import annotations

import json
import logging
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .analyzer import LinkSet
from .errors import MalformedUrl, UnknownUrl
from .frontier import ADMITTED, UNCLASSIFIED, DomainProfile, GlobalFrontier, relevance_score
from .urls import CanonicalUrl, canonicalize, resolve

logger = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 64

SEED = "seed"
PREDICTED = "predicted"
CLASSIFIED = "classified"

DISCOVERED = "discovered"
ENQUEUED = "enqueued"
FETCHED = "fetched"
FAILED = "failed"

_TRANSITIONS = {
    DISCOVERED: {ENQUEUED},
    ENQUEUED: {FETCHED, FAILED},
    FETCHED: set(),
    FAILED: set(),
}

_URL_SPLIT_RE = re.compile(r"[/.\-_0-9]+")


@dataclass(eq=False)
class UrlDbEntry:
    url: CanonicalUrl
    domain: str
    provenance: str = PREDICTED
    state: str = DISCOVERED
    source: Optional[CanonicalUrl] = None
    inlink_count: int = 0

    @property
    def key(self) -> str:
        return self.url.render()

    def as_json(self) -> dict:
        return {
            "url": self.key,
            "domain": self.domain,
            "provenance": self.provenance,
            "state": self.state,
            "source": self.source.render() if self.source is not None else None,
        }


class UrlDatabase:
    """In-memory URL database, optionally journaled to ``urldb.jsonl``."""

    def __init__(self, path: Optional[Path] = None):
        self.entries: dict[str, UrlDbEntry] = {}
        self.path = Path(path) if path is not None else None
        self._lock = threading.RLock()

    def __contains__(self, url) -> bool:
        return _key(url) in self.entries

    def __len__(self):
        return len(self.entries)

    def get(self, url) -> Optional[UrlDbEntry]:
        return self.entries.get(_key(url))

    def _journal(self, entry: UrlDbEntry) -> None:
        if self.path is None:
            return
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry.as_json()) + "\n")

    def _require(self, url) -> UrlDbEntry:
        entry = self.entries.get(_key(url))
        if entry is None:
            raise UnknownUrl(f"url not in database: {_key(url)}")
        return entry

    def add_seed(self, url: CanonicalUrl, domain: str) -> UrlDbEntry:
        with self._lock:
            existing = self.entries.get(url.render())
            if existing is not None:
                return existing
            entry = UrlDbEntry(url, domain, SEED, ENQUEUED)
            self.entries[entry.key] = entry
            self._journal(entry)
            return entry

    def check_and_record(self, entry: UrlDbEntry, frontier: Optional[GlobalFrontier] = None) -> bool:
        """Insert ``entry`` unless its URL is already known; atomic per URL."""
        with self._lock:
            key = entry.key
            if key in self.entries or (frontier is not None and key in frontier):
                return False
            self.entries[key] = entry
            self._journal(entry)
            return True

    def set_state(self, url, state: str) -> UrlDbEntry:
        with self._lock:
            entry = self._require(url)
            if state == entry.state:
                return entry
            if state not in _TRANSITIONS[entry.state]:
                raise ValueError(f"illegal transition {entry.state} -> {state} for {entry.key}")
            entry.state = state
            self._journal(entry)
            return entry

    def tag(self, url, domain: str) -> UrlDbEntry:
        # Classification overrides a prediction; seed and classified tags stay.
        with self._lock:
            entry = self._require(url)
            if entry.provenance == PREDICTED:
                entry.domain = domain
                entry.provenance = CLASSIFIED
                self._journal(entry)
            return entry

    def bump_inlink(self, url) -> UrlDbEntry:
        with self._lock:
            entry = self._require(url)
            entry.inlink_count += 1
            return entry

    @classmethod
    def load(cls, path: Path) -> "UrlDatabase":
        """Rebuild a database by replaying its journal (last line per URL wins)."""
        db = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                row = json.loads(line)
                source = canonicalize(row["source"]) if row.get("source") else None
                entry = UrlDbEntry(canonicalize(row["url"]), row["domain"], row["provenance"],
                                   row["state"], source)
                old = db.entries.get(entry.key)
                if old is not None:
                    entry.inlink_count = old.inlink_count
                db.entries[entry.key] = entry
        db.path = Path(path)
        return db


def _key(url) -> str:
    return url.render() if isinstance(url, CanonicalUrl) else url


def url_tokens(url: CanonicalUrl) -> list[str]:
    return [t for t in _URL_SPLIT_RE.split((url.host + url.path).lower()) if t]


def predict_domain(url: CanonicalUrl, src_domain: str, url_db: Optional[UrlDatabase],
                   profiles: Iterable[DomainProfile]) -> str:
    """Guess the domain of an unfetched URL.

    A tag already in the database wins; then keywords found in the host or
    path; failing both the URL inherits the domain of the linking page.
    """
    if url_db is not None:
        known = url_db.get(url)
        if known is not None:
            return known.domain
    tokens = url_tokens(url)
    best, best_hits = None, 0
    for profile in sorted(profiles, key=lambda p: p.name):
        if profile.name == UNCLASSIFIED:
            continue
        hits = sum(1 for t in tokens if t in profile.keywords)
        if hits > best_hits:
            best, best_hits = profile.name, hits
    return best if best is not None else src_domain


def filter_new(candidates: Iterable[UrlDbEntry], url_db: UrlDatabase,
               frontier: Optional[GlobalFrontier] = None) -> list[UrlDbEntry]:
    admitted = []
    for entry in candidates:
        if url_db.check_and_record(entry, frontier):
            admitted.append(entry)
        elif entry.key in url_db:
            url_db.bump_inlink(entry.key)
    return admitted


def process_links(links: LinkSet, src_domain: str, url_db: UrlDatabase, frontier: GlobalFrontier,
                  profiles: Iterable[DomainProfile], stats: Optional["DispatchStats"] = None) -> list[UrlDbEntry]:
    """Resolve and dedup the hrefs of one page.

    Returns the newly discovered entries (already recorded in ``url_db``).
    Targets that are already known only get their inlink counter bumped.
    """
    stats = stats if stats is not None else DispatchStats()
    candidates = []
    for href in links.hrefs:
        try:
            url = resolve(links.base, href)
        except MalformedUrl:
            stats.malformed += 1
            continue
        key = url.render()
        if key in frontier:
            frontier.record_inlink(key)
            if key in url_db:
                url_db.bump_inlink(key)
            stats.inlinks += 1
        elif key in url_db:
            url_db.bump_inlink(key)
            stats.inlinks += 1
        else:
            domain = predict_domain(url, src_domain, url_db, profiles)
            candidates.append(UrlDbEntry(url, domain, PREDICTED, DISCOVERED, links.base, 1))
    admitted = filter_new(candidates, url_db, frontier)
    stats.inlinks += len(candidates) - len(admitted)
    stats.discovered += len(admitted)
    return admitted


@dataclass
class PendingBatch:
    trigger_size: int = DEFAULT_BATCH_SIZE
    entries: list[UrlDbEntry] = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    @property
    def due(self) -> bool:
        return len(self.entries) >= self.trigger_size


@dataclass
class FlushReport:
    flushed: int = 0
    rejected_duplicate: int = 0


def flush_batch(batch: PendingBatch, frontier: GlobalFrontier,
                url_db: Optional[UrlDatabase] = None) -> FlushReport:
    report = FlushReport()
    for entry in batch.entries:
        score = relevance_score(entry.inlink_count, 0, frontier.weights)
        outcome = frontier.enqueue(entry.domain, entry.url, score, inlinks=entry.inlink_count)
        if outcome == ADMITTED:
            report.flushed += 1
            if url_db is not None and entry.key in url_db:
                url_db.set_state(entry.key, ENQUEUED)
            else:
                entry.state = ENQUEUED
        else:
            report.rejected_duplicate += 1
    batch.entries.clear()
    return report


@dataclass
class DispatchStats:
    discovered: int = 0
    malformed: int = 0
    inlinks: int = 0
    flush_events: int = 0
    flushed: int = 0
    rejected_duplicate: int = 0


class Dispatcher:
    def __init__(self, frontier: GlobalFrontier, url_db: UrlDatabase,
                 profiles: Iterable[DomainProfile], batch_size: int = DEFAULT_BATCH_SIZE):
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        self.frontier = frontier
        self.url_db = url_db
        self.profiles = list(profiles)
        self.batch = PendingBatch(batch_size)
        self.stats = DispatchStats()
        self.flush_log: list[FlushReport] = []

    def process_links(self, links: LinkSet, src_domain: str) -> list[UrlDbEntry]:
        admitted = process_links(links, src_domain, self.url_db, self.frontier, self.profiles, self.stats)
        for entry in admitted:
            self.batch.entries.append(entry)
            if self.batch.due:
                self.flush()
        return admitted

    def flush(self) -> FlushReport:
        if not self.batch.entries:
            return FlushReport()
        report = flush_batch(self.batch, self.frontier, self.url_db)
        self.stats.flush_events += 1
        self.stats.flushed += report.flushed
        self.stats.rejected_duplicate += report.rejected_duplicate
        self.flush_log.append(report)
        return report

    def end_cycle(self) -> FlushReport:
        return self.flush()
