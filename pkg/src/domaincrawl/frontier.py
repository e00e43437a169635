"""Global URL frontier partitioned into per-domain prioritized queues.

Each domain pool keeps its URLs in score buckets.  Buckets are ordered by
descending score and each bucket is a FIFO, so draining a pool yields a
stable sort of the insertion log by descending score.
"""
from __future__ import annotations

import bisect
import math
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import DuplicateDomain, InvalidParams, UnknownDomain, UnknownUrl
from .urls import CanonicalUrl, canonicalize

UNCLASSIFIED = "unclassified"

PENDING = "pending"
ISSUED = "issued"
FETCHED = "fetched"

DEFAULT_WEIGHTS = (1.0, 0.5)


@dataclass(frozen=True)
class DomainProfile:
    name: str
    keywords: frozenset = frozenset()
    seeds: tuple = ()

    def __post_init__(self):
        name = self.name.strip().lower()
        if not name:
            raise InvalidParams("domain name must be non-empty")
        kws = frozenset(k.strip().lower() for k in self.keywords if k.strip())
        if name == UNCLASSIFIED and kws:
            raise InvalidParams("the reserved 'unclassified' domain takes no keywords")
        if name != UNCLASSIFIED and not kws:
            raise InvalidParams(f"domain {name!r} needs at least one keyword")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "keywords", kws)
        object.__setattr__(self, "seeds", tuple(canonicalize(s) for s in self.seeds))

    @classmethod
    def unclassified(cls) -> "DomainProfile":
        return cls(UNCLASSIFIED)


def with_unclassified(profiles: Iterable[DomainProfile]) -> list[DomainProfile]:
    """Return ``profiles`` with the reserved catch-all appended if missing."""
    out = list(profiles)
    names = [p.name for p in out]
    if len(set(names)) != len(names):
        dup = next(n for n in names if names.count(n) > 1)
        raise DuplicateDomain(dup)
    if UNCLASSIFIED not in names:
        out.append(DomainProfile.unclassified())
    return out


@dataclass(eq=False)
class PoolEntry:
    url: CanonicalUrl
    domain: str
    inlink_count: int = 0
    request_count: int = 0
    score: int = 0
    state: str = PENDING
    # Filled lazily by a fetch backend that resolves hosts.
    address: Optional[str] = None
    error: Optional[int] = None

    @property
    def key(self) -> str:
        return self.url.render()


def relevance_score(inlinks: int, requests: int, weights=DEFAULT_WEIGHTS) -> int:
    alpha, beta = weights
    if inlinks < 0 or requests < 0 or alpha < 0 or beta < 0:
        raise ValueError("relevance_score takes non-negative inputs")
    return int(math.floor(alpha * inlinks + beta * requests))


class DomainQueue:
    """Score-bucketed FIFO queue for one domain."""

    def __init__(self):
        self._buckets: dict[int, deque] = {}
        # Negated scores, ascending, so index 0 is the best bucket.
        self._order: list[int] = []
        self._size = 0

    def __len__(self):
        return self._size

    def push(self, entry: PoolEntry) -> None:
        bucket = self._buckets.get(entry.score)
        if bucket is None:
            bucket = self._buckets[entry.score] = deque()
            bisect.insort(self._order, -entry.score)
        bucket.append(entry)
        self._size += 1

    def pop(self) -> Optional[PoolEntry]:
        if not self._order:
            return None
        score = -self._order[0]
        bucket = self._buckets[score]
        entry = bucket.popleft()
        if not bucket:
            del self._buckets[score]
            self._order.pop(0)
        self._size -= 1
        return entry

    def nodes(self) -> list[tuple[int, int, list[PoolEntry]]]:
        """(position, score, fifo) triples; position is the 1-based rank."""
        return [
            (pos, -neg, list(self._buckets[-neg]))
            for pos, neg in enumerate(self._order, start=1)
        ]


@dataclass
class PoolStats:
    admitted: int = 0
    dequeued: int = 0
    requeued: int = 0


@dataclass
class DomainPool:
    profile: DomainProfile
    queue: DomainQueue = field(default_factory=DomainQueue)
    stats: PoolStats = field(default_factory=PoolStats)


ADMITTED = "admitted"
REJECTED_DUPLICATE = "rejected-duplicate"


class GlobalFrontier:
    def __init__(self, weights=DEFAULT_WEIGHTS):
        self.weights = tuple(weights)
        self.pools: dict[str, DomainPool] = {}
        self.seen: set[str] = set()
        self._entries: dict[str, PoolEntry] = {}
        self._lock = threading.RLock()

    def _pool(self, domain: str) -> DomainPool:
        try:
            return self.pools[domain]
        except KeyError:
            raise UnknownDomain(f"unknown domain {domain!r}") from None

    def create_pool(self, profile: DomainProfile) -> DomainPool:
        with self._lock:
            if profile.name in self.pools:
                raise DuplicateDomain(profile.name)
            pool = self.pools[profile.name] = DomainPool(profile)
            for seed in profile.seeds:
                self.enqueue(profile.name, seed, relevance_score(0, 0, self.weights))
            return pool

    def enqueue(self, domain: str, url: CanonicalUrl, score: int, inlinks: int = 0) -> str:
        with self._lock:
            pool = self._pool(domain)
            key = url.render()
            if key in self.seen:
                return REJECTED_DUPLICATE
            entry = PoolEntry(url, domain, inlink_count=inlinks, score=score)
            self.seen.add(key)
            self._entries[key] = entry
            pool.queue.push(entry)
            pool.stats.admitted += 1
            return ADMITTED

    def requeue(self, entry: PoolEntry) -> None:
        """Put an already-admitted entry back at its old score.

        Used for deferred deliveries; the ``seen`` set is deliberately not
        consulted since the URL was admitted once already.
        """
        with self._lock:
            pool = self._pool(entry.domain)
            entry.state = PENDING
            pool.queue.push(entry)
            pool.stats.requeued += 1

    def dequeue(self, domain: str) -> Optional[PoolEntry]:
        with self._lock:
            pool = self._pool(domain)
            entry = pool.queue.pop()
            if entry is None:
                return None
            entry.state = ISSUED
            pool.stats.dequeued += 1
            return entry

    def _entry(self, url) -> PoolEntry:
        key = url.render() if isinstance(url, CanonicalUrl) else url
        try:
            return self._entries[key]
        except KeyError:
            raise UnknownUrl(f"url never admitted: {key}") from None

    def record_inlink(self, url) -> PoolEntry:
        # Counters never re-score a queued entry; they only matter the next
        # time the URL is ranked.
        with self._lock:
            entry = self._entry(url)
            entry.inlink_count += 1
            return entry

    def record_request(self, url) -> PoolEntry:
        with self._lock:
            entry = self._entry(url)
            entry.request_count += 1
            return entry

    def entry(self, url) -> PoolEntry:
        with self._lock:
            return self._entry(url)

    def __contains__(self, url) -> bool:
        key = url.render() if isinstance(url, CanonicalUrl) else url
        return key in self.seen

    def snapshot(self, domain: str) -> list[tuple[int, list[CanonicalUrl]]]:
        with self._lock:
            pool = self._pool(domain)
            return [(score, [e.url for e in fifo]) for _, score, fifo in pool.queue.nodes()]

    def pending(self, domain: Optional[str] = None) -> int:
        with self._lock:
            if domain is not None:
                return len(self._pool(domain).queue)
            return sum(len(p.queue) for p in self.pools.values())

    def domains(self) -> list[str]:
        return list(self.pools)

    def dump_lines(self, domain: Optional[str] = None) -> list[str]:
        """Tab-separated ``domain, rank, score, url`` lines in dequeue order."""
        names = [domain] if domain is not None else self.domains()
        lines = []
        with self._lock:
            for name in names:
                for rank, score, fifo in self._pool(name).queue.nodes():
                    for entry in fifo:
                        lines.append(f"{name}\t{rank}\t{score}\t{entry.key}")
        return lines


def build_frontier(profiles: Iterable[DomainProfile], weights=DEFAULT_WEIGHTS) -> GlobalFrontier:
    frontier = GlobalFrontier(weights)
    for profile in with_unclassified(profiles):
        frontier.create_pool(profile)
    return frontier
