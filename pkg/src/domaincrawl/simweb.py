"""Deterministic synthetic web for offline crawls.

Construction, for ``D`` domains of ``P`` pages each:

* page ``i`` of domain ``d`` lives at ``http://<d>.test/p<i>``; page 0 is the
  domain seed.
* its first intra-domain link points to page ``(i + 1) mod P`` so every page
  of a domain is reachable from the seed; the remaining intra links and all
  cross links are drawn without replacement.
* the body holds each keyword of the page's domain exactly ``keyword_freq``
  times, ``floor(noise_ratio * keyword_tokens)`` distinct keywords of other
  domains once each, and a little neutral filler, shuffled.
* ``floor(alias_fraction * D * P)`` pages also answer at
  ``http://<d>.test/alias/p<i>`` with a byte-identical body; random links to
  those pages use the alias URL.

Randomness comes from numpy's PCG64 seeded with ``rng_seed``; the draw order
is fixed by the loop structure in :func:`generate`.  Cross-implementation
fixtures should be shared as dumped graphs, not RNG streams.
"""
from __future__ import annotations

import json
import math
import re
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InvalidParams
from .fetcher import FetchBackend, FetchResult
from .frontier import UNCLASSIFIED, DomainProfile
from .urls import CanonicalUrl, canonicalize, resolve

FORMAT = "domaincrawl-simweb/1"

FILLER = ("lorem", "ipsum", "dolor", "amet", "consectetur", "adipiscing", "elit", "sed", "tempor", "magna")
ANCHOR_TEXT = "link"

DEFAULT_VOCABULARY = {
    "sports": ("football", "cricket", "tennis", "league", "goal", "stadium"),
    "news": ("election", "minister", "headline", "parliament", "policy", "press"),
    "health": ("doctor", "vaccine", "clinic", "nutrition", "therapy", "symptom"),
    "science": ("physics", "molecule", "telescope", "genome", "quantum", "laboratory"),
    "music": ("guitar", "melody", "concert", "album", "rhythm", "orchestra"),
    "travel": ("airline", "hotel", "passport", "itinerary", "beach", "luggage"),
    "finance": ("stock", "dividend", "interest", "portfolio", "banking", "inflation"),
    "food": ("recipe", "kitchen", "flavour", "bakery", "spice", "dessert"),
}

_LABEL_RE = re.compile(r"^[a-z0-9]([a-z0-9-]*[a-z0-9])?$")


def default_profiles(count: int) -> list[DomainProfile]:
    if not 1 <= count <= len(DEFAULT_VOCABULARY):
        raise InvalidParams(f"built-in vocabulary covers 1..{len(DEFAULT_VOCABULARY)} domains")
    names = list(DEFAULT_VOCABULARY)[:count]
    return [DomainProfile(n, frozenset(DEFAULT_VOCABULARY[n])) for n in names]


@dataclass
class GraphParams:
    domains: list[DomainProfile] = field(default_factory=lambda: default_profiles(4))
    pages_per_domain: int = 100
    intra_links: int = 3
    cross_links: int = 1
    keyword_freq: int = 3
    noise_ratio: float = 0.5
    alias_fraction: float = 0.0
    rng_seed: int = 42

    def validate(self) -> None:
        d, p = len(self.domains), self.pages_per_domain
        if d < 1:
            raise InvalidParams("at least one domain is required")
        if p < 1:
            raise InvalidParams("pages_per_domain must be >= 1")
        names = [x.name for x in self.domains]
        if len(set(names)) != len(names):
            raise InvalidParams("domain names must be unique")
        for name in names:
            if name == UNCLASSIFIED or not _LABEL_RE.match(name):
                raise InvalidParams(f"domain name {name!r} is not usable as a host label")
        seen: set[str] = set()
        for prof in self.domains:
            if seen & prof.keywords:
                raise InvalidParams(f"keywords shared between domains: {sorted(seen & prof.keywords)}")
            seen |= prof.keywords
        reserved = seen & (set(FILLER) | {ANCHOR_TEXT})
        if reserved:
            raise InvalidParams(f"keywords collide with generator vocabulary: {sorted(reserved)}")
        if self.intra_links < 0 or self.cross_links < 0:
            raise InvalidParams("link counts must be non-negative")
        if self.intra_links + self.cross_links >= d * p:
            raise InvalidParams("intra_links + cross_links must be below the page count")
        if self.intra_links > p - 1:
            raise InvalidParams("intra_links exceeds the other pages of a domain")
        if self.cross_links > (d - 1) * p:
            raise InvalidParams("cross_links exceeds the pages of other domains")
        if self.keyword_freq < 1:
            raise InvalidParams("keyword_freq must be >= 1")
        for name in ("noise_ratio", "alias_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidParams(f"{name} must lie in [0, 1]")
        if not 0 <= self.rng_seed < 2 ** 64:
            raise InvalidParams("rng_seed must be a 64-bit unsigned integer")

    def as_json(self) -> dict:
        out = asdict(self)
        out["domains"] = [{"name": x.name, "keywords": sorted(x.keywords)} for x in self.domains]
        return out

    @classmethod
    def from_json(cls, data: dict) -> "GraphParams":
        data = dict(data)
        domains = data.pop("domains", 4)
        unknown = set(data) - {f for f in cls.__dataclass_fields__ if f != "domains"}
        if unknown:
            raise InvalidParams(f"unknown graph parameter(s): {sorted(unknown)}")
        if isinstance(domains, int):
            profiles = default_profiles(domains)
        else:
            profiles = [DomainProfile(x["name"], frozenset(x["keywords"])) for x in domains]
        return cls(domains=profiles, **data)


@dataclass
class SimPage:
    url: str
    domain: str
    body: bytes
    links: list[str]


@dataclass
class Truth:
    domains: dict[str, list[str]]
    seeds: dict[str, str]
    aliases: dict[str, str]
    reachable: set[str]
    reachable_aliases: set[str]
    _owner: dict[str, str] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self._owner = {u: name for name, urls in self.domains.items() for u in urls}

    def domain_of(self, url: str) -> Optional[str]:
        return self._owner.get(self.aliases.get(url, url))


@dataclass
class SyntheticWeb:
    params: GraphParams
    pages: dict[str, SimPage]
    aliases: dict[str, str]
    truth: Truth

    @property
    def profiles(self) -> list[DomainProfile]:
        return [
            DomainProfile(p.name, p.keywords, (self.truth.seeds[p.name],))
            for p in self.params.domains
        ]

    def lookup(self, url: str) -> Optional[SimPage]:
        return self.pages.get(self.aliases.get(url, url))

    def true_domain(self, url: str) -> Optional[str]:
        page = self.lookup(url)
        return page.domain if page else None

    def dumps(self) -> str:
        return json.dumps(dump(self), sort_keys=True, indent=1)


def _page_url(name: str, i: int) -> str:
    return f"http://{name}.test/p{i}"


def _alias_url(name: str, i: int) -> str:
    return f"http://{name}.test/alias/p{i}"


def _render_body(page_id: str, tokens: list[str], hrefs: list[str]) -> bytes:
    anchors = "".join(f'<li><a href="{h}">{ANCHOR_TEXT}</a></li>' for h in hrefs)
    html = (
        f"<html><head><title>{page_id}</title></head><body>"
        f"<p>{' '.join(tokens)}</p><ul>{anchors}</ul></body></html>"
    )
    return html.encode("utf-8")


def generate(params: GraphParams) -> SyntheticWeb:
    params.validate()
    rng = np.random.Generator(np.random.PCG64(params.rng_seed))
    profiles = params.domains
    d_count, p_count = len(profiles), params.pages_per_domain
    total = d_count * p_count

    n_alias = math.floor(params.alias_fraction * total)
    aliased = set(int(x) for x in rng.choice(total, size=n_alias, replace=False)) if n_alias else set()

    def target_href(gidx: int, same_domain: bool) -> str:
        di, i = divmod(gidx, p_count)
        name = profiles[di].name
        if gidx in aliased:
            return f"/alias/p{i}" if same_domain else _alias_url(name, i)
        return f"/p{i}" if same_domain else _page_url(name, i)

    pages: dict[str, SimPage] = {}
    aliases: dict[str, str] = {}
    for di, prof in enumerate(profiles):
        keywords = sorted(prof.keywords)
        others = sorted(k for j, p in enumerate(profiles) if j != di for k in p.keywords)
        other_pages = np.array([g for g in range(total) if g // p_count != di], dtype=np.int64)
        for i in range(p_count):
            gidx = di * p_count + i
            hrefs: list[str] = []
            if params.intra_links:
                nxt = (i + 1) % p_count
                hrefs.append(f"/p{nxt}")
                pool = np.array([j for j in range(p_count) if j not in (i, nxt)], dtype=np.int64)
                for j in rng.choice(pool, size=params.intra_links - 1, replace=False):
                    hrefs.append(target_href(di * p_count + int(j), True))
            if params.cross_links:
                for g in rng.choice(other_pages, size=params.cross_links, replace=False):
                    hrefs.append(target_href(int(g), False))

            tokens = [k for k in keywords for _ in range(params.keyword_freq)]
            n_noise = min(math.floor(params.noise_ratio * len(tokens)), len(others))
            if n_noise:
                tokens += [str(x) for x in rng.choice(others, size=n_noise, replace=False)]
            tokens += [str(x) for x in rng.choice(FILLER, size=3)]
            tokens = [tokens[k] for k in rng.permutation(len(tokens))]

            url = _page_url(prof.name, i)
            page_id = f"page{di:02d}x{i:06d}"
            body = _render_body(page_id, tokens, hrefs)
            base = canonicalize(url)
            links = [resolve(base, h).render() for h in hrefs]
            pages[url] = SimPage(url, prof.name, body, links)
            if gidx in aliased:
                aliases[_alias_url(prof.name, i)] = url

    return SyntheticWeb(params, pages, aliases, compute_truth(params, pages, aliases))


def compute_truth(params: GraphParams, pages: dict[str, SimPage], aliases: dict[str, str]) -> Truth:
    domains: dict[str, list[str]] = {p.name: [] for p in params.domains}
    for url, page in pages.items():
        domains[page.domain].append(url)
    seeds = {p.name: _page_url(p.name, 0) for p in params.domains}

    for page in pages.values():
        for target in page.links:
            if target not in pages and target not in aliases:
                raise InvalidParams(f"dangling link {target} on {page.url}")

    reached: set[str] = set(seeds.values())
    todo = deque(seeds.values())
    while todo:
        url = todo.popleft()
        for target in pages[aliases.get(url, url)].links:
            if target not in reached:
                reached.add(target)
                todo.append(target)
    return Truth(
        domains=domains,
        seeds=seeds,
        aliases=dict(aliases),
        reachable={u for u in reached if u in pages},
        reachable_aliases={u for u in reached if u in aliases},
    )


def ground_truth(web: SyntheticWeb) -> Truth:
    return web.truth


def sim_fetch(web: SyntheticWeb, url: CanonicalUrl) -> FetchResult:
    page = web.lookup(url.render())
    if page is None:
        return FetchResult(url, 404)
    return FetchResult(url, 200, page.body, "text/html; charset=utf-8")


class SimBackend(FetchBackend):
    """In-memory backend over a :class:`SyntheticWeb`.

    ``faults`` maps a URL string to statuses returned (one per attempt)
    before the page is served normally; used to exercise retries.
    """

    def __init__(self, web: SyntheticWeb, faults: Optional[dict[str, list[int]]] = None):
        super().__init__()
        self.web = web
        self.faults = {k: list(v) for k, v in (faults or {}).items()}

    def _fetch(self, url: CanonicalUrl) -> FetchResult:
        pending = self.faults.get(url.render())
        if pending:
            return FetchResult(url, pending.pop(0))
        return sim_fetch(self.web, url)


def dump(web: SyntheticWeb) -> dict:
    return {
        "format": FORMAT,
        "params": web.params.as_json(),
        "pages": [
            {"url": p.url, "domain": p.domain, "body": p.body.decode("utf-8"), "links": p.links}
            for p in web.pages.values()
        ],
        "aliases": web.aliases,
        "truth": {
            "domains": web.truth.domains,
            "seeds": web.truth.seeds,
            "reachable": sorted(web.truth.reachable),
            "reachable_aliases": sorted(web.truth.reachable_aliases),
        },
    }


def load(data: dict) -> SyntheticWeb:
    if data.get("format") != FORMAT:
        raise InvalidParams(f"not a {FORMAT} graph dump")
    params = GraphParams.from_json(data["params"])
    pages = {
        row["url"]: SimPage(row["url"], row["domain"], row["body"].encode("utf-8"), list(row["links"]))
        for row in data["pages"]
    }
    aliases = dict(data.get("aliases", {}))
    return SyntheticWeb(params, pages, aliases, compute_truth(params, pages, aliases))


def save_graph(web: SyntheticWeb, path) -> None:
    Path(path).write_text(web.dumps(), encoding="utf-8")


def load_graph(path) -> SyntheticWeb:
    return load(json.loads(Path(path).read_text(encoding="utf-8")))
