"""Page analysis: link and text extraction plus keyword classification."""
from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import Iterable, Optional

from .frontier import UNCLASSIFIED, DomainProfile
from .urls import CanonicalUrl

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[^\W_]+")


@dataclass
class LinkSet:
    base: CanonicalUrl
    hrefs: list[str] = field(default_factory=list)


@dataclass
class ClassificationResult:
    scores: dict[str, int]
    winner: str


class _PageScanner(HTMLParser):
    # html.parser already treats <script>/<style> bodies as raw text, so the
    # only state needed is whether we are inside one of them.
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.hrefs: list[str] = []
        self.chunks: list[str] = []
        self._skip = 0

    def handle_starttag(self, tag, attrs):
        if tag == "a":
            for name, value in attrs:
                if name == "href" and value is not None:
                    self.hrefs.append(value)
                    break
        elif tag in ("script", "style"):
            self._skip += 1

    def handle_startendtag(self, tag, attrs):
        if tag == "a":
            self.handle_starttag(tag, attrs)

    def handle_endtag(self, tag):
        if tag in ("script", "style") and self._skip:
            self._skip -= 1

    def handle_data(self, data):
        if not self._skip:
            self.chunks.append(data)


def _scan(html) -> _PageScanner:
    if isinstance(html, (bytes, bytearray)):
        html = bytes(html).decode("utf-8", errors="replace")
    scanner = _PageScanner()
    try:
        scanner.feed(html)
        scanner.close()
    except Exception as exc:  # malformed markup: keep whatever was found so far
        logger.debug("parser gave up: %s", exc)
    return scanner


def _tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def extract_links(html, base: CanonicalUrl) -> LinkSet:
    return LinkSet(base, _scan(html).hrefs)


def extract_text(html) -> list[str]:
    return _tokens(" ".join(_scan(html).chunks))


def parse_page(html, base: CanonicalUrl) -> tuple[LinkSet, list[str]]:
    """Links and text tokens from a single parser pass."""
    scanner = _scan(html)
    return LinkSet(base, scanner.hrefs), _tokens(" ".join(scanner.chunks))


def classify(tokens: Iterable[str], profiles: Iterable[DomainProfile]) -> ClassificationResult:
    """Bag-of-words keyword count per domain; ties go to the smaller name."""
    counts = Counter(tokens)
    scores = {p.name: sum(counts[k] for k in p.keywords) for p in profiles}
    best = max(scores.values(), default=0)
    if best == 0:
        return ClassificationResult(scores, UNCLASSIFIED)
    winner = min(name for name, s in scores.items() if s == best)
    return ClassificationResult(scores, winner)


def tag_url(url_db, url, domain: str):
    """Record the classified domain of a fetched page in the URL database."""
    return url_db.tag(url, domain)


class PageAnalyzer:
    """Analyzer sink for the fetch workers.

    Classifies each page, tags its URL, and keeps the extracted links in a
    per-worker buffer that the dispatcher drains after the round barrier.
    """

    def __init__(self, profiles: Iterable[DomainProfile], url_db=None):
        self.profiles = list(profiles)
        self.url_db = url_db
        self.buffers: dict[int, list[tuple[LinkSet, str]]] = {}
        self.classified: dict[str, str] = {}

    def sink_for(self, worker: int):
        buf = self.buffers.setdefault(worker, [])

        def sink(entry, body: bytes) -> str:
            links, tokens = parse_page(body, entry.url)
            domain = classify(tokens, self.profiles).winner
            self.classified[entry.key] = domain
            if self.url_db is not None:
                tag_url(self.url_db, entry.url, domain)
            buf.append((links, domain))
            return domain

        return sink

    def take(self, worker: int) -> list[tuple[LinkSet, str]]:
        buf = self.buffers.setdefault(worker, [])
        out = list(buf)
        buf.clear()
        return out

    def classified_as(self, url) -> Optional[str]:
        key = url.render() if isinstance(url, CanonicalUrl) else url
        return self.classified.get(key)
