"""Document loader: fetch backends, per-host politeness and the page store.

Page bodies are identified by a 64-bit BLAKE2b digest of the exact bytes
(16 hex characters).  The repository keeps the first body seen for each
digest; later URLs serving the same bytes are indexed as duplicates.
"""
from __future__ import annotations

import hashlib
import json
import logging
import socket
import threading
import time
import urllib.error
import urllib.request
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .allocator import WorkerInbox
from .frontier import FETCHED, PoolEntry, UNCLASSIFIED
from .urls import CanonicalUrl, host_of

logger = logging.getLogger(__name__)

USER_AGENT = "domaincrawl/0.1"
TIMEOUT = 0  # status used when the request never produced a response
MAX_BODY = 5 * 1024 * 1024


def digest_of(body: bytes) -> str:
    return hashlib.blake2b(body, digest_size=8).hexdigest()


@dataclass
class FetchResult:
    url: CanonicalUrl
    status: int
    body: bytes = b""
    content_type: str = ""
    elapsed: float = 0.0
    address: Optional[str] = None
    attempts: int = 1

    @property
    def ok(self) -> bool:
        return self.status == 200

    @property
    def transient(self) -> bool:
        return self.status == TIMEOUT or 500 <= self.status < 600


class FetchBackend:
    """Base for fetch backends; counts every logical fetch per URL."""

    def __init__(self):
        self.fetch_counts: Counter = Counter()
        self.attempt_counts: Counter = Counter()
        self._count_lock = threading.Lock()

    def fetch(self, url: CanonicalUrl, attempt: int = 0) -> FetchResult:
        key = url.render()
        with self._count_lock:
            self.attempt_counts[key] += 1
            if attempt == 0:
                self.fetch_counts[key] += 1
        return self._fetch(url)

    def _fetch(self, url: CanonicalUrl) -> FetchResult:
        raise NotImplementedError

    def url_overlap(self) -> int:
        return sum(n - 1 for n in self.fetch_counts.values() if n > 1)


class HttpBackend(FetchBackend):
    def __init__(self, timeout: float = 10.0, user_agent: str = USER_AGENT):
        super().__init__()
        self.timeout = timeout
        self.user_agent = user_agent
        self._addresses: dict[str, Optional[str]] = {}

    def _address(self, host: str) -> Optional[str]:
        if host not in self._addresses:
            try:
                self._addresses[host] = socket.getaddrinfo(host.strip("[]"), None)[0][4][0]
            except OSError:
                self._addresses[host] = None
        return self._addresses[host]

    def _fetch(self, url: CanonicalUrl) -> FetchResult:
        started = time.monotonic()
        req = urllib.request.Request(url.render(), headers={"User-Agent": self.user_agent})
        address = self._address(url.host)
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                body = resp.read(MAX_BODY)
                ctype = resp.headers.get("Content-Type", "")
                status = resp.status
        except urllib.error.HTTPError as exc:
            return FetchResult(url, exc.code, b"", exc.headers.get("Content-Type", "") if exc.headers else "",
                               time.monotonic() - started, address)
        except (urllib.error.URLError, OSError) as exc:
            logger.debug("fetch %s failed: %s", url, exc)
            return FetchResult(url, TIMEOUT, elapsed=time.monotonic() - started, address=address)
        if status != 200:
            body = b""
        return FetchResult(url, status, body, ctype, time.monotonic() - started, address)


class PolitenessGate:
    """Keeps consecutive requests to one host at least ``delay`` seconds apart."""

    def __init__(self, delay: float = 0.0, clock=time.monotonic, sleep=time.sleep):
        self.delay = delay
        self._clock = clock
        self._sleep = sleep
        self._next_slot: dict[str, float] = {}
        self._lock = threading.Lock()

    def wait(self, host: str) -> None:
        if self.delay <= 0:
            return
        with self._lock:
            now = self._clock()
            slot = max(now, self._next_slot.get(host, now))
            self._next_slot[host] = slot + self.delay
        if slot > now:
            self._sleep(slot - now)


def fetch(backend: FetchBackend, url: CanonicalUrl, politeness: Optional[PolitenessGate] = None) -> FetchResult:
    """Fetch with politeness and a single retry on 5xx or timeout."""
    gate = politeness or PolitenessGate(0.0)
    gate.wait(host_of(url))
    result = backend.fetch(url)
    if result.transient:
        gate.wait(host_of(url))
        result = backend.fetch(url, attempt=1)
        result.attempts = 2
    return result


@dataclass
class PageRecord:
    url: CanonicalUrl
    domain: str
    digest: str
    body: bytes
    fetched_at: int = 0


@dataclass
class StoreResult:
    status: str  # "stored" or "duplicate"
    digest: str
    existing_url: Optional[CanonicalUrl] = None

    @property
    def duplicate(self) -> bool:
        return self.status == "duplicate"


class Repository:
    """Digest-keyed page store; optionally mirrored to a directory.

    On disk, ``pages/<digest>`` holds each distinct body and ``index.jsonl``
    gets one ``{"url", "digest", "domain", "round"}`` line per stored URL.
    """

    def __init__(self, root: Optional[Path] = None):
        self.records: dict[str, PageRecord] = {}
        self.index: dict[str, tuple[str, str]] = {}
        self.duplicate_log: list[tuple[CanonicalUrl, str]] = []
        self.root = Path(root) if root is not None else None
        self._lock = threading.Lock()
        if self.root is not None:
            (self.root / "pages").mkdir(parents=True, exist_ok=True)

    def store_page(self, url: CanonicalUrl, domain: str, body: bytes, round_no: int = 0) -> StoreResult:
        if not body:
            raise ValueError("store_page needs a non-empty body")
        digest = digest_of(body)
        key = url.render()
        with self._lock:
            existing = self.records.get(digest)
            self.index[key] = (digest, domain)
            if existing is not None:
                self.duplicate_log.append((url, digest))
                result = StoreResult("duplicate", digest, existing.url)
            else:
                self.records[digest] = PageRecord(url, domain, digest, body, round_no)
                result = StoreResult("stored", digest)
            if self.root is not None:
                if not result.duplicate:
                    (self.root / "pages" / digest).write_bytes(body)
                with open(self.root / "index.jsonl", "a", encoding="utf-8") as fh:
                    fh.write(json.dumps({"url": key, "digest": digest, "domain": domain, "round": round_no}) + "\n")
        return result

    def partition(self, domain: str) -> list[str]:
        """URLs indexed under ``domain`` (``unclassified`` is a partition too)."""
        return sorted(u for u, (_, d) in self.index.items() if d == domain)

    def domain_of(self, url) -> Optional[str]:
        key = url.render() if isinstance(url, CanonicalUrl) else url
        hit = self.index.get(key)
        return hit[1] if hit else None

    def is_sound(self) -> bool:
        return all(
            d in self.records and digest_of(self.records[d].body) == d
            for d, _ in self.index.values()
        )


def store_page(repo: Repository, url: CanonicalUrl, domain: str, body: bytes, round_no: int = 0) -> StoreResult:
    return repo.store_page(url, domain, body, round_no)


# The sink classifies a fetched page, forwards its links and returns the
# domain the page belongs to.
AnalyzerSink = Callable[[PoolEntry, bytes], str]


@dataclass
class CycleReport:
    worker: int
    fetched: list[PoolEntry] = field(default_factory=list)
    failed: list[PoolEntry] = field(default_factory=list)
    stored: int = 0
    duplicates: int = 0
    backend_calls: int = 0
    hungry: bool = False


def worker_cycle(worker: int, inbox: WorkerInbox, backend: FetchBackend, repo: Repository,
                 sink: Optional[AnalyzerSink] = None, politeness: Optional[PolitenessGate] = None,
                 round_no: int = 0, budget: Optional[int] = None) -> CycleReport:
    """Work through the inbox, at most ``budget`` entries (all when ``None``).

    Successful pages go through the analyzer sink, which decides the domain
    they are stored under.  ``hungry`` is set when the inbox ends up empty.
    """
    report = CycleReport(worker)
    done = 0
    while budget is None or done < budget:
        entry = inbox.get()
        if entry is None:
            break
        done += 1
        result = fetch(backend, entry.url, politeness)
        report.backend_calls += result.attempts
        if result.address and entry.address is None:
            entry.address = result.address
        entry.state = FETCHED
        if not result.ok or not result.body:
            entry.error = result.status
            report.failed.append(entry)
            continue
        domain = sink(entry, result.body) if sink is not None else entry.domain
        stored = repo.store_page(entry.url, domain or UNCLASSIFIED, result.body, round_no)
        if stored.duplicate:
            report.duplicates += 1
        else:
            report.stored += 1
        report.fetched.append(entry)
    report.hungry = len(inbox) == 0
    return report
